#include "ybcav/cavity_model.hpp"

#include <cmath>
#include <complex>

#include "ybcav/errors.hpp"
#include "ybcav/units.hpp"

namespace ybcav {

void CavityMode::validate() const {
    if (!(quality_factor > 0.0))
        throw config_error("cavity-model: Q must be > 0");
    if (!(v_norm > 0.0))
        throw config_error("cavity-model: V_norm must be > 0");
    if (!(nu0_GHz > 0.0))
        throw config_error("cavity-model: nu0 must be > 0");
    if (!(field_halving_depth_nm > 0.0))
        throw config_error("cavity-model: field_halving_depth must be > 0");
    if (!(n_host > 0.0))
        throw config_error("cavity-model: n_host must be > 0");
    if (!(interface_fraction >= 0.0 && interface_fraction <= 1.0))
        throw config_error("cavity-model: interface_fraction must be in [0,1]");
}

void IonSite::validate() const {
    if (!(depth_nm >= 0.0))
        throw config_error("cavity-model: site depth must be >= 0");
    if (!(transverse_factor >= 0.0 && transverse_factor <= 1.0))
        throw config_error("cavity-model: transverse_factor must be in [0,1]");
    if (!(dipole_alignment >= 0.0 && dipole_alignment <= 1.0))
        throw config_error("cavity-model: dipole_alignment must be in [0,1]");
}

double purcell_peak(double quality_factor, double v_norm) {
    if (!(quality_factor > 0.0) || !(v_norm > 0.0)) {
        throw config_error("cavity-model: purcell_peak needs Q, V > 0");
    }
    return 3.0 / (4.0 * units::pi * units::pi) * quality_factor / v_norm;
}

double field_overlap(const IonSite& site, const CavityMode& mode) {
    site.validate();
    mode.validate();
    return std::exp2(-site.depth_nm / mode.field_halving_depth_nm) *
           site.transverse_factor * site.dipole_alignment;
}

double detuning_factor(double delta_GHz, const CavityMode& mode) {
    mode.validate();
    const double u = 2.0 * mode.quality_factor * delta_GHz / mode.nu0_GHz;
    return 1.0 / (1.0 + u * u);
}

DecayRates enhanced_decay(const LevelSystem& levels, const IonSite& site,
                          const CavityMode& mode) {
    DecayRates rates;
    rates.f_eff = purcell_peak(mode.quality_factor, mode.v_norm) *
                  field_overlap(site, mode) *
                  detuning_factor(site.detuning_GHz, mode);
    const double g0 = levels.gamma_bulk();
    rates.rate_A = g0 * levels.branch_A() * (1.0 + rates.f_eff);
    rates.rate_C = g0 * levels.branch_C();
    rates.rate_aux = g0 * levels.branch_aux();
    rates.gamma_total = g0 * (1.0 + rates.f_eff * levels.branch_A());
    rates.tau = 1.0 / rates.gamma_total;
    return rates;
}

std::vector<std::pair<double, double>>
reflection_spectrum(const CavityMode& mode, double coupling_ratio,
                    std::span<const double> freq_GHz) {
    mode.validate();
    if (freq_GHz.empty()) {
        throw config_error("cavity-model: reflection grid is empty");
    }
    if (!(coupling_ratio >= 0.0 && coupling_ratio <= 1.0)) {
        throw config_error("cavity-model: coupling_ratio must be in [0,1]");
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(freq_GHz.size());
    for (double nu : freq_GHz) {
        const std::complex<double> denom(
            1.0, 2.0 * mode.quality_factor * (nu - mode.nu0_GHz) / mode.nu0_GHz);
        const std::complex<double> amp = 1.0 - 2.0 * coupling_ratio / denom;
        out.emplace_back(nu, std::norm(amp));
    }
    return out;
}

ReflectionFit fit_reflection_q(std::span<const double> freq_GHz,
                               std::span<const double> reflectance) {
    ReflectionFit result;
    result.fit = fit_lorentzian_dip(freq_GHz, reflectance);
    const double f0 = result.fit.param("f0");
    const double hwhm = result.fit.param("hwhm");
    if (!(hwhm > 0.0)) {
        throw numerical_error("cavity-model: reflection fit gave non-positive width");
    }
    result.quality_factor = f0 / (2.0 * hwhm);
    return result;
}

} // namespace ybcav
