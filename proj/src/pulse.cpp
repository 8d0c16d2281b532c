#include "ybcav/pulse.hpp"

#include "ybcav/errors.hpp"
#include "ybcav/units.hpp"

namespace ybcav {

double segment_duration(const Segment& segment) {
    return std::visit([](const auto& s) { return s.duration_s; }, segment);
}

double PulseSequence::duration_s() const {
    double total = 0.0;
    for (const auto& segment : segments) total += segment_duration(segment);
    return total * repetitions;
}

void PulseSequence::validate(const LevelSystem& levels) const {
    if (repetitions < 1) {
        throw config_error("pulse: repetitions must be >= 1");
    }
    if (!(repetition_period_s > 0.0)) {
        throw config_error("pulse: repetition period must be > 0");
    }
    for (const auto& segment : segments) {
        if (segment_duration(segment) < 0.0) {
            throw config_error("pulse: segment durations must be >= 0");
        }
        if (const auto* drive = std::get_if<DrivePulse>(&segment)) {
            if (!levels.has_transition(drive->transition)) {
                throw config_error("pulse: unknown transition '" +
                                   drive->transition + "'");
            }
        }
    }
}

PulseSequence& PulseSequence::drive(const std::string& transition,
                                    double rabi_rad_s, double duration_s,
                                    double phase_rad, double detuning_rad_s) {
    segments.push_back(
        DrivePulse{transition, rabi_rad_s, detuning_rad_s, phase_rad, duration_s});
    return *this;
}

PulseSequence& PulseSequence::pi_pulse(const std::string& transition,
                                       double rabi_rad_s, double phase_rad,
                                       double detuning_rad_s) {
    return drive(transition, rabi_rad_s, units::pi / rabi_rad_s, phase_rad,
                 detuning_rad_s);
}

PulseSequence& PulseSequence::half_pi_pulse(const std::string& transition,
                                            double rabi_rad_s, double phase_rad,
                                            double detuning_rad_s) {
    return drive(transition, rabi_rad_s, 0.5 * units::pi / rabi_rad_s,
                 phase_rad, detuning_rad_s);
}

PulseSequence& PulseSequence::delay(double duration_s) {
    segments.push_back(Delay{duration_s});
    return *this;
}

PulseSequence& PulseSequence::window(double duration_s) {
    segments.push_back(ReadoutWindow{duration_s});
    return *this;
}

} // namespace ybcav
