#pragma once

#include <cstdint>
#include <vector>

namespace ybcav {

/// Spectral-diffusion model: slow Ornstein-Uhlenbeck wandering of the
/// optical transition frequency (entering the Hamiltonian as a classical
/// detuning) plus a fast Markovian pure-dephasing rate. With the dephasing
/// convention used here the optical coherence decays at gamma_phi/2, so an
/// echo-limited coherence time is T2 = 2/gamma_phi.
struct NoiseModel {
    double sigma_rad_s = 0.0;     // OU stationary standard deviation
    double tau_c_s = 1e-3;        // OU correlation time
    double gamma_phi_per_s = 0.0; // fast pure dephasing

    void validate() const; // throws config_error
    bool operator==(const NoiseModel&) const = default;
};

/// Detuning path sampled on a uniform grid; value k applies on
/// [k*dt, (k+1)*dt).
struct OuPath {
    double dt_s = 0.0;
    std::vector<double> values;

    double at_time(double t) const;
    bool empty() const { return values.empty(); }
};

/// Exact OU discretization
///   d_{k+1} = d_k e^(-dt/tau_c) + sigma sqrt(1 - e^(-2 dt/tau_c)) xi_k
/// with d_0 drawn from the stationary distribution N(0, sigma^2).
OuPath sample_ou(const NoiseModel& noise, double dt_s, std::size_t n_steps,
                 std::uint64_t seed);

} // namespace ybcav
