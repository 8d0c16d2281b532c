#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ybcav/ion_model.hpp"

namespace ybcav {

/// Square drive pulse on a named optical transition, defined in the rotating
/// frame of that transition's laser.
struct DrivePulse {
    std::string transition = "A";
    double rabi_rad_s = 0.0;
    double detuning_rad_s = 0.0; // laser detuning from the transition
    double phase_rad = 0.0;
    double duration_s = 0.0;
};

/// Free evolution; the frame of the most recent drive persists.
struct Delay {
    double duration_s = 0.0;
};

/// Free evolution whose integrated A-channel emission is recorded as a
/// readout signal.
struct ReadoutWindow {
    double duration_s = 0.0;
};

using Segment = std::variant<DrivePulse, Delay, ReadoutWindow>;

double segment_duration(const Segment& segment);

/// Ordered pulse program for one shot. `repetitions` repeats the segment
/// list verbatim; `repetition_period_s` is the shot spacing used by the
/// photon-record drivers (default 20 us, i.e. a 50 kHz repetition rate).
struct PulseSequence {
    std::vector<Segment> segments;
    int repetitions = 1;
    double repetition_period_s = 20e-6;

    double duration_s() const;
    void validate(const LevelSystem& levels) const; // throws config_error

    PulseSequence& drive(const std::string& transition, double rabi_rad_s,
                         double duration_s, double phase_rad = 0.0,
                         double detuning_rad_s = 0.0);
    PulseSequence& pi_pulse(const std::string& transition, double rabi_rad_s,
                            double phase_rad = 0.0, double detuning_rad_s = 0.0);
    PulseSequence& half_pi_pulse(const std::string& transition,
                                 double rabi_rad_s, double phase_rad = 0.0,
                                 double detuning_rad_s = 0.0);
    PulseSequence& delay(double duration_s);
    PulseSequence& window(double duration_s);
};

} // namespace ybcav
