#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ybcav/cavity_model.hpp"
#include "ybcav/ion_model.hpp"
#include "ybcav/noise.hpp"
#include "ybcav/pulse.hpp"

namespace ybcav {

/// Rotating frame currently in force: the (upper, lower) pair of the most
/// recently driven transition and that drive's detuning. Free-evolution
/// segments keep the frame so that accumulated phases (Ramsey fringes)
/// come out right. Index -1 means "no drive has happened yet".
struct FrameContext {
    int upper = -1;
    int lower = -1;
    double detuning_rad_s = 0.0;
};

/// Spontaneous-decay channel |to><from| at the given rate.
struct DecayChannel {
    int from = -1;
    int to = -1;
    double rate = 0.0;
    bool is_A = false; // marks the cavity-enhanced readout channel
};

/// Lindblad generator for one segment: rotating-frame Hamiltonian plus
/// collapse channels (per-channel decay rates and a pure-dephasing channel
/// on the driven optical coherence). The slowly wandering spectral-diffusion
/// detuning is supplied per step via the `noise_detuning` argument of rhs().
class Generator {
  public:
    /// H without the noise detuning, in rad/s.
    const Eigen::MatrixXcd& hamiltonian_base() const { return h_base_; }
    const std::vector<DecayChannel>& decay_channels() const { return decays_; }
    /// Dephasing operator coefficient c in L = c * (|u><u| - |l><l|);
    /// the driven coherence then decays at 2 c^2 = gamma_phi / 2.
    double dephase_coeff() const { return dephase_coeff_; }
    int dephase_upper() const { return dephase_upper_; }
    int dephase_lower() const { return dephase_lower_; }
    int emission_upper() const { return emission_upper_; }
    double rate_A() const { return rate_A_; }
    int frame_upper() const { return frame_upper_; }
    int dim() const { return static_cast<int>(h_base_.rows()); }

    /// drho/dt with the instantaneous noise detuning folded into H.
    Eigen::MatrixXcd rhs(const Eigen::Ref<const Eigen::MatrixXcd>& rho,
                         double noise_detuning_rad_s) const;

    /// Instantaneous A-channel emission rate Gamma_A * rho_ee.
    double emission_rate_A(const Eigen::Ref<const Eigen::MatrixXcd>& rho) const;

    friend Generator build_generator(const LevelSystem&, const DecayRates&,
                                     const Segment&, double, const NoiseModel&,
                                     FrameContext&);

  private:
    Eigen::MatrixXcd h_base_;
    std::vector<DecayChannel> decays_;
    double dephase_coeff_ = 0.0;
    int dephase_upper_ = -1;
    int dephase_lower_ = -1;
    int emission_upper_ = -1;
    double rate_A_ = 0.0;
    int frame_upper_ = -1;
};

/// Builds the generator for one segment and updates the frame context.
/// `static_detuning_rad_s` is a constant extra detuning (e.g. an OU value
/// frozen for a whole shot); time-resolved noise goes through evolve()'s
/// noise trace instead. Throws config_error on unknown transition labels.
Generator build_generator(const LevelSystem& levels, const DecayRates& rates,
                          const Segment& segment, double static_detuning_rad_s,
                          const NoiseModel& noise, FrameContext& frame);

struct EvolveOptions {
    double tol = 1e-10;       // relative step error, in (1e-12, 1e-3)
    double max_step_s = 0.0;  // extra cap; 0 = none
    bool record_boundaries = true;
    bool check_invariants = true;
    double static_detuning_rad_s = 0.0; // shot-frozen spectral diffusion
};

struct SegmentBoundary {
    double t_s = 0.0;
    Eigen::MatrixXcd rho;
};

struct EvolveResult {
    std::vector<SegmentBoundary> boundaries; // one per executed segment
    std::vector<double> window_emission_A;   // photons per ReadoutWindow
    double total_emission_A = 0.0;
    Eigen::MatrixXcd final_rho;
    double final_time_s = 0.0;
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
    double max_trace_error = 0.0;
    double min_eigenvalue = 1.0;
};

/// Piecewise master-equation integration of a pulse sequence with an
/// embedded Dormand-Prince 5(4) stepper. The OU detuning from `noise_trace`
/// (indexed by time from the start of the sequence) is frozen within each
/// integration step; steps never cross trace grid boundaries and are capped
/// at tau_c/100 while sigma > 0. Throws numerical_error naming the segment
/// on step-size underflow or an invariant breach.
EvolveResult evolve(const Eigen::MatrixXcd& rho0, const LevelSystem& levels,
                    const DecayRates& rates, const PulseSequence& sequence,
                    const NoiseModel& noise, const OuPath* noise_trace = nullptr,
                    const EvolveOptions& options = {});

/// Diagonal density matrix from level populations (missing levels get 0).
Eigen::MatrixXcd mixed_state(const LevelSystem& levels,
                             const std::map<std::string, double>& populations);

/// |level><level|.
Eigen::MatrixXcd pure_state(const LevelSystem& levels, const std::string& level);

struct NoiseAverage {
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<double> samples;
};

/// Mean of a per-sample observable over independently seeded noise
/// realizations. Sample i runs with seed derive_seed(master_seed, tag, i),
/// so the result is independent of execution order and worker count.
NoiseAverage average_over_noise(
    std::size_t n_samples, std::uint64_t master_seed, std::string_view tag,
    const std::function<double(std::size_t index, std::uint64_t seed)>& sample_fn);

} // namespace ybcav
