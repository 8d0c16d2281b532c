#include "ybcav/noise.hpp"

#include <cmath>

#include "ybcav/errors.hpp"
#include "ybcav/rng.hpp"

namespace ybcav {

void NoiseModel::validate() const {
    if (!(sigma_rad_s >= 0.0))
        throw config_error("noise: sigma must be >= 0");
    if (!(tau_c_s > 0.0))
        throw config_error("noise: tau_c must be > 0");
    if (!(gamma_phi_per_s >= 0.0))
        throw config_error("noise: gamma_phi must be >= 0");
}

double OuPath::at_time(double t) const {
    if (values.empty()) return 0.0;
    if (t <= 0.0) return values.front();
    std::size_t k = static_cast<std::size_t>(t / dt_s);
    if (k >= values.size()) k = values.size() - 1;
    return values[k];
}

OuPath sample_ou(const NoiseModel& noise, double dt_s, std::size_t n_steps,
                 std::uint64_t seed) {
    noise.validate();
    if (!(dt_s > 0.0)) {
        throw config_error("noise: OU sampling step must be > 0");
    }
    OuPath path;
    path.dt_s = dt_s;
    path.values.resize(n_steps);
    if (n_steps == 0) return path;

    rng::Generator gen(seed);
    const double decay = std::exp(-dt_s / noise.tau_c_s);
    const double kick = noise.sigma_rad_s * std::sqrt(1.0 - decay * decay);

    double value = noise.sigma_rad_s * gen.normal();
    path.values[0] = value;
    for (std::size_t k = 1; k < n_steps; ++k) {
        value = value * decay + kick * gen.normal();
        path.values[k] = value;
    }
    return path;
}

} // namespace ybcav
