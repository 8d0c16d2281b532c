#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ybcav/cavity_model.hpp"
#include "ybcav/ion_model.hpp"

namespace ybcav {

/// Random ion population under the cavity mode. The expected ion count is
/// concentration * cation_density * (footprint area * depth cutoff).
/// Cation density and mode footprint are not device measurements; the
/// defaults below are order-of-magnitude placeholders (nominal YVO4 yttrium
/// site density, mode-scale footprint) chosen so a sample holds a few tens
/// of ions.
struct EnsembleConfig {
    double concentration = 0.14e-6;        // substitutional Yb fraction
    double cation_density_per_m3 = 1.24e28;
    double footprint_area_nm2 = 500.0 * 500.0;
    double depth_cutoff_nm = 90.0;
    double abundance_171 = 0.143;          // nuclear spin 1/2
    double abundance_zero_spin = 0.695;    // 170+172+174+176
    double inhomogeneous_width_GHz = 1.5;  // std dev of 171 offsets
    double zero_spin_peak_GHz = 304505.0;  // aggregate feature position
    double scan_span_GHz = 8.0;            // excitation scan, centered on 0
    int scan_points = 2001;

    double expected_count() const;
    void validate() const; // throws config_error
    bool operator==(const EnsembleConfig&) const = default;
};

enum class Isotope { yb171, zero_spin };

struct SampledIon {
    Isotope isotope = Isotope::yb171;
    IonSite site;
};

/// Draws an ion population: count ~ Poisson(expected_count()), depth
/// uniform in [0, cutoff], lateral position uniform over the footprint
/// square with the fundamental-mode standing-wave weight
/// cos^2(pi x / L) cos^2(pi y / L) as the transverse factor. 171 offsets
/// are normal with the inhomogeneous width; zero-spin ions pile up near
/// the shared aggregate line (a tenth of that spread). A zero expected
/// count is allowed and yields an empty list.
std::vector<SampledIon> sample_sites(const EnsembleConfig& config,
                                     std::uint64_t seed);

/// Per-ion response model for the excitation scan. Counts for an ion with
/// effective Purcell factor F are
///   counts_scale * yield(F) * hwhm^2 / ((f - f_ion)^2 + hwhm^2)
/// with yield the A-channel quantum yield beta (1+F) / (1 + F beta), the
/// saturated photons-per-shot of a long readout. 171 lines carry the
/// dephasing-limited width; zero-spin lines are broad (poor coherence) and
/// bright only through their abundance.
struct PleModel {
    double counts_scale = 1000.0;        // shots x chain efficiency
    double linewidth_171_MHz = 4.6;      // FWHM
    double linewidth_zero_spin_MHz = 50.0;
};

/// Excitation spectrum over `offsets_GHz` (relative to the aggregate line):
/// the sum of per-ion Lorentzians weighted by Purcell-dependent brightness.
std::vector<std::pair<double, double>>
ple_spectrum(const std::vector<SampledIon>& ions, const CavityMode& cavity,
             const LevelSystem& levels, std::span<const double> offsets_GHz,
             const PleModel& model = {});

/// Lifetime census of the 171 sites (zero-spin ions carry no coherent
/// dynamics here). tau per site from enhanced_decay.
struct LifetimeCensus {
    std::vector<double> tau_s;      // sorted ascending
    std::vector<double> bin_left_s; // histogram over [min, max]
    std::vector<double> bin_right_s;
    std::vector<std::size_t> counts;
    double min_s = 0.0;
    double median_s = 0.0;
    double max_s = 0.0;
};

LifetimeCensus lifetime_distribution(const std::vector<SampledIon>& ions,
                                     const CavityMode& cavity,
                                     const LevelSystem& levels,
                                     int bins = 16); // throws if no 171 site

} // namespace ybcav
