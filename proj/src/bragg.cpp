#include "ybcav/bragg.hpp"

#include <cmath>
#include <complex>

#include "ybcav/errors.hpp"
#include "ybcav/units.hpp"

namespace ybcav {

using complexd = std::complex<double>;

void BraggCell::validate() const {
    if (layers.empty()) {
        throw config_error("bragg: unit cell has no layers");
    }
    for (const auto& layer : layers) {
        if (!(layer.thickness_nm > 0.0)) {
            throw config_error("bragg: zero or negative layer thickness");
        }
        if (!(layer.refractive_index >= 1.0)) {
            throw config_error("bragg: refractive index must be >= 1");
        }
    }
}

double BraggCell::period_nm() const {
    double total = 0.0;
    for (const auto& layer : layers) total += layer.thickness_nm;
    return total;
}

double BraggCell::mean_index() const {
    double weighted = 0.0;
    for (const auto& layer : layers) {
        weighted += layer.refractive_index * layer.thickness_nm;
    }
    return weighted / period_nm();
}

BraggCell quarter_wave_cell(double lambda0_nm, double n_high, double n_low) {
    return BraggCell{{{n_high, lambda0_nm / (4.0 * n_high)},
                      {n_low, lambda0_nm / (4.0 * n_low)}}};
}

namespace {

/// Propagation of (E+, E-) through a thickness d of index n.
Eigen::Matrix2cd propagation(double n, double d_nm, double wavelength_nm) {
    const double phase = units::two_pi * n * d_nm / wavelength_nm;
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(0, 0) = std::exp(complexd(0.0, -phase));
    m(1, 1) = std::exp(complexd(0.0, phase));
    return m;
}

/// Fresnel interface from index n1 into n2 at normal incidence.
Eigen::Matrix2cd interface(double n1, double n2) {
    const double r = (n1 - n2) / (n1 + n2);
    const double t = 2.0 * n1 / (n1 + n2);
    Eigen::Matrix2cd m;
    m << 1.0, r, r, 1.0;
    return m / t;
}

} // namespace

Eigen::Matrix2cd unit_cell_matrix(const BraggCell& cell, double wavelength_nm) {
    cell.validate();
    if (!(wavelength_nm > 0.0)) {
        throw config_error("bragg: wavelength must be > 0");
    }
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
    const std::size_t n = cell.layers.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& here = cell.layers[i];
        const auto& next = cell.layers[(i + 1) % n];
        m = m * propagation(here.refractive_index, here.thickness_nm,
                            wavelength_nm);
        if (here.refractive_index != next.refractive_index) {
            m = m * interface(here.refractive_index, next.refractive_index);
        }
    }
    return m;
}

std::vector<GapInterval>
stack_bandgap(const BraggCell& cell, std::span<const double> wavelength_grid_nm) {
    if (wavelength_grid_nm.empty()) {
        throw config_error("bragg: wavelength grid is empty");
    }
    std::vector<GapInterval> gaps;
    bool in_gap = false;
    double gap_start = 0.0;
    double previous = wavelength_grid_nm.front();
    for (double wl : wavelength_grid_nm) {
        if (wl < previous) {
            throw config_error("bragg: wavelength grid must be sorted ascending");
        }
        const Eigen::Matrix2cd m = unit_cell_matrix(cell, wl);
        const bool gap_here = std::abs(m.trace()) / 2.0 > 1.0;
        if (gap_here && !in_gap) {
            in_gap = true;
            gap_start = wl;
        } else if (!gap_here && in_gap) {
            in_gap = false;
            gaps.push_back({gap_start, previous});
        }
        previous = wl;
    }
    if (in_gap) {
        gaps.push_back({gap_start, wavelength_grid_nm.back()});
    }
    return gaps;
}

double mirror_transmission(const BraggCell& cell, int n_periods,
                           double wavelength_nm) {
    if (n_periods < 0) {
        throw config_error("bragg: period count must be >= 0");
    }
    const Eigen::Matrix2cd cell_m = unit_cell_matrix(cell, wavelength_nm);
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
    for (int i = 0; i < n_periods; ++i) m = m * cell_m;
    // embedded in the first layer's medium on both sides, so T = |1/m00|^2
    const double t2 = 1.0 / std::norm(m(0, 0));
    return t2 > 1.0 ? 1.0 : t2;
}

double q_estimate(const BraggCell& cell, int n_left, int n_right,
                  double lambda0_nm, int taper_periods) {
    if (n_left < 1 || n_right < 1) {
        throw config_error("bragg: q_estimate needs at least one period per side");
    }
    const Eigen::Matrix2cd m = unit_cell_matrix(cell, lambda0_nm);
    const double half_trace = std::abs(m.trace()) / 2.0;
    if (half_trace <= 1.0) {
        throw config_error("bragg: unit cell has no gap at the design wavelength");
    }
    // Bloch eigenvalue magnitude sets the per-period field decay and the
    // penetration depth into each mirror.
    const double bloch = half_trace + std::sqrt(half_trace * half_trace - 1.0);
    const double period = cell.period_nm();
    const double penetration_nm = period / (2.0 * std::log(bloch));

    const double t_left = mirror_transmission(cell, n_left, lambda0_nm);
    const double t_right = mirror_transmission(cell, n_right, lambda0_nm);

    const double l_eff_m =
        (taper_periods * period + 2.0 * penetration_nm) * units::nm;
    const double c_medium = units::c_vacuum_m_per_s / cell.mean_index();
    const double tau_photon = 2.0 * l_eff_m / (c_medium * (t_left + t_right));
    const double omega =
        units::two_pi * units::c_vacuum_m_per_s / (lambda0_nm * units::nm);
    return omega * tau_photon;
}

} // namespace ybcav
