#include "ybcav/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "ybcav/errors.hpp"
#include "ybcav/rng.hpp"
#include "ybcav/units.hpp"

namespace ybcav {

double EnsembleConfig::expected_count() const {
    const double volume_m3 = footprint_area_nm2 * depth_cutoff_nm * 1e-27;
    return concentration * cation_density_per_m3 * volume_m3;
}

void EnsembleConfig::validate() const {
    if (!(concentration >= 0.0) || concentration >= 1.0) {
        throw config_error("ensemble: concentration must lie in [0, 1)");
    }
    if (!(cation_density_per_m3 > 0.0) || !(footprint_area_nm2 > 0.0) ||
        !(depth_cutoff_nm > 0.0)) {
        throw config_error("ensemble: density and volume factors must be > 0");
    }
    if (abundance_171 < 0.0 || abundance_zero_spin < 0.0 ||
        abundance_171 + abundance_zero_spin > 1.0 + 1e-12 ||
        abundance_171 + abundance_zero_spin <= 0.0) {
        throw config_error(
            "ensemble: isotope abundances must be in [0, 1], sum in (0, 1]");
    }
    if (!(inhomogeneous_width_GHz > 0.0)) {
        throw config_error("ensemble: inhomogeneous width must be > 0");
    }
    if (!(scan_span_GHz > 0.0) || scan_points < 2) {
        throw config_error("ensemble: scan span must be > 0 with >= 2 points");
    }
}

std::vector<SampledIon> sample_sites(const EnsembleConfig& config,
                                     std::uint64_t seed) {
    config.validate();
    rng::Generator gen(rng::derive_seed(seed, "sites"));
    std::vector<SampledIon> ions;
    const std::uint64_t count = gen.poisson(config.expected_count());
    ions.reserve(count);
    const double side = std::sqrt(config.footprint_area_nm2);
    // Only the two modeled classes are labeled; their abundances are
    // renormalized so every drawn ion gets one (other odd isotopes are
    // outside the model and absorbed pro rata).
    const double p171 = config.abundance_171 /
                        (config.abundance_171 + config.abundance_zero_spin);
    for (std::uint64_t i = 0; i < count; ++i) {
        const double u = gen.uniform();
        const double depth = config.depth_cutoff_nm * gen.uniform();
        const double x = (gen.uniform() - 0.5) * side;
        const double y = (gen.uniform() - 0.5) * side;
        const double cx = std::cos(units::pi * x / side);
        const double cy = std::cos(units::pi * y / side);
        const double offset = gen.normal();
        SampledIon ion;
        ion.isotope = u < p171 ? Isotope::yb171 : Isotope::zero_spin;
        ion.site.depth_nm = depth;
        ion.site.transverse_factor = cx * cx * cy * cy;
        ion.site.dipole_alignment = 1.0;
        ion.site.frequency_offset_GHz =
            offset * config.inhomogeneous_width_GHz *
            (ion.isotope == Isotope::yb171 ? 1.0 : 0.1);
        ion.site.detuning_GHz = ion.site.frequency_offset_GHz;
        ions.push_back(ion);
    }
    return ions;
}

namespace {

double saturated_yield(const LevelSystem& levels, double f_eff) {
    const double beta = levels.branch_A();
    return beta * (1.0 + f_eff) / (1.0 + f_eff * beta);
}

} // namespace

std::vector<std::pair<double, double>>
ple_spectrum(const std::vector<SampledIon>& ions, const CavityMode& cavity,
             const LevelSystem& levels, std::span<const double> offsets_GHz,
             const PleModel& model) {
    struct Line {
        double center = 0.0;
        double hwhm = 0.0;
        double height = 0.0;
    };
    std::vector<Line> lines;
    lines.reserve(ions.size());
    for (const SampledIon& ion : ions) {
        const DecayRates rates = enhanced_decay(levels, ion.site, cavity);
        Line line;
        line.center = ion.site.frequency_offset_GHz;
        line.hwhm = 0.5e-3 * (ion.isotope == Isotope::yb171
                                  ? model.linewidth_171_MHz
                                  : model.linewidth_zero_spin_MHz);
        line.height =
            model.counts_scale * saturated_yield(levels, rates.f_eff);
        lines.push_back(line);
    }
    std::vector<std::pair<double, double>> spectrum;
    spectrum.reserve(offsets_GHz.size());
    for (double f : offsets_GHz) {
        double counts = 0.0;
        for (const Line& line : lines) {
            const double d = f - line.center;
            counts += line.height * line.hwhm * line.hwhm /
                      (d * d + line.hwhm * line.hwhm);
        }
        spectrum.emplace_back(f, counts);
    }
    return spectrum;
}

LifetimeCensus lifetime_distribution(const std::vector<SampledIon>& ions,
                                     const CavityMode& cavity,
                                     const LevelSystem& levels, int bins) {
    if (bins < 1) throw config_error("ensemble: bins must be >= 1");
    LifetimeCensus census;
    for (const SampledIon& ion : ions) {
        if (ion.isotope != Isotope::yb171) continue;
        census.tau_s.push_back(enhanced_decay(levels, ion.site, cavity).tau);
    }
    if (census.tau_s.empty()) {
        throw config_error("ensemble: no 171 sites to take lifetimes from");
    }
    std::sort(census.tau_s.begin(), census.tau_s.end());
    census.min_s = census.tau_s.front();
    census.max_s = census.tau_s.back();
    census.median_s = census.tau_s[census.tau_s.size() / 2];

    const double lo = census.min_s;
    const double span = std::max(census.max_s - lo, 1e-12 * lo);
    const double width = span / bins;
    census.counts.assign(static_cast<std::size_t>(bins), 0);
    for (int b = 0; b < bins; ++b) {
        census.bin_left_s.push_back(lo + b * width);
        census.bin_right_s.push_back(lo + (b + 1) * width);
    }
    for (double tau : census.tau_s) {
        auto b = static_cast<std::size_t>((tau - lo) / width);
        if (b >= census.counts.size()) b = census.counts.size() - 1;
        ++census.counts[b];
    }
    return census;
}

} // namespace ybcav
