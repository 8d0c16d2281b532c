#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ybcav/fit.hpp"
#include "ybcav/ion_model.hpp"

namespace ybcav {

/// Photonic-crystal cavity mode seen by ions below the GaAs-YVO4 interface.
/// V_norm is the effective mode volume in (lambda/n)^3, normalized to the
/// strongest field inside YVO4, so depth 0 with unit lateral/alignment
/// factors experiences the full peak Purcell factor. interface_fraction is
/// the |E|^2 at the interface relative to the GaAs maximum; diagnostic
/// metadata, never multiplied into rates.
struct CavityMode {
    double nu0_GHz = 304505.0;
    double quality_factor = 5300.0;
    double v_norm = 1.7;
    double n_host = 2.17; // YVO4 index along the relevant axis (metadata)
    double field_halving_depth_nm = 30.0;
    double interface_fraction = 0.4;

    void validate() const; // throws config_error
    bool operator==(const CavityMode&) const = default;
};

/// Ion position/orientation relative to the cavity mode.
struct IonSite {
    double depth_nm = 0.0;           // below the GaAs-YVO4 interface
    double transverse_factor = 1.0;  // lateral mode-profile factor in [0,1]
    double dipole_alignment = 1.0;   // cos^2 of dipole-polarization angle
    double detuning_GHz = 0.0;       // ion - cavity detuning
    double frequency_offset_GHz = 0.0; // offset from the 304505 GHz reference

    void validate() const;
    bool operator==(const IonSite&) const = default;
};

/// Decay rates of the excited level with the cavity present.
struct DecayRates {
    double gamma_total = 0.0; // s^-1
    double tau = 0.0;         // 1/gamma_total, s
    double f_eff = 0.0;       // effective Purcell factor
    double rate_A = 0.0;      // enhanced readout channel, s^-1
    double rate_C = 0.0;      // pump channel, s^-1
    double rate_aux = 0.0;    // shelving channel, s^-1
};

/// Peak Purcell factor (3/(4 pi^2)) * Q / V for an ideally placed,
/// aligned, resonant dipole.
double purcell_peak(double quality_factor, double v_norm);

/// Squared field overlap xi^2 = 2^(-depth/halving_depth) * transverse *
/// alignment; the evanescent tail halves |E|^2 every field_halving_depth.
double field_overlap(const IonSite& site, const CavityMode& mode);

/// Lorentzian cavity response 1 / (1 + (2 Q delta / nu0)^2).
double detuning_factor(double delta_GHz, const CavityMode& mode);

/// Cavity-modified decay: F_eff = purcell_peak * field_overlap *
/// detuning_factor; only the A channel is enhanced (copolarized with the
/// cavity), so Gamma_total = gamma_bulk * (1 + F_eff * branch_A).
DecayRates enhanced_decay(const LevelSystem& levels, const IonSite& site,
                          const CavityMode& mode);

/// One-port reflection spectrum R(nu) = |1 - 2 eta / (1 + 2i Q (nu-nu0)/nu0)|^2
/// with eta = kappa_ext / kappa_total.
std::vector<std::pair<double, double>>
reflection_spectrum(const CavityMode& mode, double coupling_ratio,
                    std::span<const double> freq_GHz);

/// Lorentzian-dip fit of a reflection spectrum; returns the fit and the
/// recovered quality factor f0 / (2 * hwhm).
struct ReflectionFit {
    FitResult fit;
    double quality_factor = 0.0;
};
ReflectionFit fit_reflection_q(std::span<const double> freq_GHz,
                               std::span<const double> reflectance);

} // namespace ybcav
