#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ybcav/ensemble.hpp"
#include "ybcav/errors.hpp"
#include "ybcav/rng.hpp"

using namespace ybcav;

TEST_SUITE("ensemble") {

TEST_CASE("expected ion count from the geometry") {
    const EnsembleConfig cfg;
    // concentration * cation density * footprint * depth, in m^3
    const double volume_m3 = cfg.footprint_area_nm2 * cfg.depth_cutoff_nm * 1e-27;
    CHECK(cfg.expected_count() ==
          doctest::Approx(cfg.concentration * cfg.cation_density_per_m3 *
                          volume_m3)
              .epsilon(1e-12));
    CHECK(cfg.expected_count() == doctest::Approx(39.06).epsilon(1e-3));
}

TEST_CASE("validation") {
    EnsembleConfig bad;
    bad.concentration = 1.0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = {};
    bad.abundance_171 = 0.9;
    bad.abundance_zero_spin = 0.2; // sum past one
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = {};
    bad.abundance_171 = 0.0;
    bad.abundance_zero_spin = 0.0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = {};
    bad.scan_points = 1;
    CHECK_THROWS_AS(bad.validate(), config_error);
    CHECK_NOTHROW(EnsembleConfig{}.validate());
}

TEST_CASE("site sampling is deterministic and in bounds") {
    const EnsembleConfig cfg;
    const auto a = sample_sites(cfg, 61);
    const auto b = sample_sites(cfg, 61);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].isotope == b[i].isotope);
        CHECK(a[i].site.depth_nm == b[i].site.depth_nm);
        CHECK(a[i].site.frequency_offset_GHz == b[i].site.frequency_offset_GHz);
    }
    for (const auto& ion : a) {
        CHECK(ion.site.depth_nm >= 0.0);
        CHECK(ion.site.depth_nm <= cfg.depth_cutoff_nm);
        CHECK(ion.site.transverse_factor >= 0.0);
        CHECK(ion.site.transverse_factor <= 1.0);
        CHECK(ion.site.dipole_alignment == 1.0);
        CHECK(ion.site.detuning_GHz ==
              doctest::Approx(ion.site.frequency_offset_GHz));
    }
}

TEST_CASE("population statistics follow the model") {
    const EnsembleConfig cfg;
    const std::size_t draws = 1000;
    double count_sum = 0.0;
    std::size_t n171 = 0, total = 0;
    double offset2_171 = 0.0;
    double offset2_zero = 0.0;
    std::size_t nzero = 0;
    for (std::size_t d = 0; d < draws; ++d) {
        const auto ions = sample_sites(cfg, rng::derive_seed(71, "draw", d));
        count_sum += static_cast<double>(ions.size());
        for (const auto& ion : ions) {
            ++total;
            if (ion.isotope == Isotope::yb171) {
                ++n171;
                offset2_171 +=
                    ion.site.frequency_offset_GHz * ion.site.frequency_offset_GHz;
            } else {
                ++nzero;
                offset2_zero +=
                    ion.site.frequency_offset_GHz * ion.site.frequency_offset_GHz;
            }
        }
    }
    // Poisson mean within 3 sigma over the draws
    const double lambda = cfg.expected_count();
    const double se_count = std::sqrt(lambda / static_cast<double>(draws));
    CHECK(std::abs(count_sum / draws - lambda) < 3.0 * se_count);

    // isotope split: renormalized 171 share of the modeled isotopes
    const double p171 =
        cfg.abundance_171 / (cfg.abundance_171 + cfg.abundance_zero_spin);
    const double se_p = std::sqrt(p171 * (1.0 - p171) / total);
    CHECK(std::abs(static_cast<double>(n171) / total - p171) < 3.0 * se_p);

    // inhomogeneous widths: 1.5 GHz for 171, a tenth of that for zero spin
    const double sd171 = std::sqrt(offset2_171 / static_cast<double>(n171));
    CHECK(sd171 == doctest::Approx(cfg.inhomogeneous_width_GHz)
                       .epsilon(3.0 / std::sqrt(2.0 * n171)));
    const double sdzero = std::sqrt(offset2_zero / static_cast<double>(nzero));
    CHECK(sdzero == doctest::Approx(0.1 * cfg.inhomogeneous_width_GHz)
                        .epsilon(3.0 / std::sqrt(2.0 * nzero)));
}

TEST_CASE("zero concentration yields an empty population") {
    EnsembleConfig cfg;
    cfg.concentration = 0.0;
    CHECK(sample_sites(cfg, 3).empty());
}

TEST_CASE("ple spectrum localizes each ion") {
    const LevelSystem levels = LevelSystem::build({});
    const CavityMode cavity;
    std::vector<double> grid;
    for (int i = 0; i <= 2000; ++i) grid.push_back(-4.0 + 8.0 * i / 2000);

    SampledIon ion;
    ion.isotope = Isotope::yb171;
    ion.site.depth_nm = 0.0;
    ion.site.frequency_offset_GHz = 2.0;
    ion.site.detuning_GHz = 2.0;

    const auto spec = ple_spectrum({ion}, cavity, levels, grid);
    REQUIRE(spec.size() == grid.size());
    const auto peak = std::max_element(
        spec.begin(), spec.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    CHECK(peak->first == doctest::Approx(2.0).epsilon(0.01));

    // height: counts_scale times the A-channel quantum yield
    const PleModel model;
    const DecayRates r = enhanced_decay(levels, ion.site, cavity);
    const double yield = r.rate_A / r.gamma_total;
    CHECK(peak->second ==
          doctest::Approx(model.counts_scale * yield).epsilon(0.01));

    // half maximum at one half-width from the line center; the line is a
    // few MHz wide, so probe it on a fine local grid
    const double hwhm_GHz = 0.5 * model.linewidth_171_MHz * 1e-3;
    const std::vector<double> probe{2.0, 2.0 + hwhm_GHz, 2.0 + 5.0 * hwhm_GHz};
    const auto fine = ple_spectrum({ion}, cavity, levels, probe);
    CHECK(fine[1].second == doctest::Approx(0.5 * fine[0].second).epsilon(1e-6));
    CHECK(fine[2].second == doctest::Approx(fine[0].second / 26.0).epsilon(1e-6));

    // spectra add linearly
    SampledIon second = ion;
    second.site.frequency_offset_GHz = -1.0;
    second.site.detuning_GHz = -1.0;
    const auto both = ple_spectrum({ion, second}, cavity, levels, grid);
    const auto lone = ple_spectrum({second}, cavity, levels, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(both[i].second ==
              doctest::Approx(spec[i].second + lone[i].second).epsilon(1e-9));
    }
}

TEST_CASE("zero-spin lines are broad") {
    const LevelSystem levels = LevelSystem::build({});
    const CavityMode cavity;
    std::vector<double> grid;
    for (int i = 0; i <= 4000; ++i) grid.push_back(-1.0 + 2.0 * i / 4000);

    SampledIon ion;
    ion.isotope = Isotope::zero_spin;
    ion.site.frequency_offset_GHz = 0.0;
    const auto spec = ple_spectrum({ion}, cavity, levels, grid);
    const double peak = spec[2000].second;
    // at +/- 25 MHz (the 171 HWHM scale) a 50 MHz-wide line barely drops
    const std::size_t i25 = 2000 + 50;
    CHECK(spec[i25].second > 0.45 * peak);
}

TEST_CASE("lifetime census stays within the allowed range") {
    const EnsembleConfig cfg;
    const LevelSystem levels = LevelSystem::build({});
    const CavityMode cavity;
    const auto ions = sample_sites(cfg, 83);
    const LifetimeCensus census = lifetime_distribution(ions, cavity, levels);

    const double tau_best =
        268.8e-6 / (1.0 + purcell_peak(cavity.quality_factor, cavity.v_norm) *
                              levels.branch_A());
    CHECK(census.min_s >= tau_best - 1e-12);
    CHECK(census.max_s <= 268.8e-6 + 1e-12);
    CHECK(std::is_sorted(census.tau_s.begin(), census.tau_s.end()));
    CHECK(census.median_s >= census.min_s);
    CHECK(census.median_s <= census.max_s);
    std::size_t total = 0;
    for (const std::size_t c : census.counts) total += c;
    CHECK(total == census.tau_s.size());

    // no 171 ions: nothing to census
    EnsembleConfig none;
    none.abundance_171 = 1e-12;
    none.concentration = 1e-9; // tiny population, all zero-spin
    const auto sparse = sample_sites(none, 5);
    CHECK_THROWS_AS(lifetime_distribution(sparse, cavity, levels),
                    config_error);
}

} // TEST_SUITE
