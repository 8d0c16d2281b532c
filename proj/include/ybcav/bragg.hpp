#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ybcav {

/// One homogeneous layer of a 1-D stack (normal incidence, effective index).
struct BraggLayer {
    double refractive_index = 1.0; // >= 1, air allowed
    double thickness_nm = 0.0;     // > 0
};

/// One period of the photonic-crystal mirror, reduced to a 1-D
/// effective-index stack.
struct BraggCell {
    std::vector<BraggLayer> layers;
    void validate() const;
    double period_nm() const;
    /// Thickness-weighted mean index, used as the propagation medium for
    /// the photon-lifetime estimate.
    double mean_index() const;
};

/// Mirror geometry of the device: a shared unit cell with asymmetric period
/// counts (preferential out-coupling through the thin side). Slab thickness
/// and taper count are carried as metadata for the cavity-length estimate.
struct BraggStack {
    BraggCell cell;
    int n_left = 12;
    int n_right = 23;
    int taper_periods = 20;
    double slab_thickness_nm = 200.0;
};

/// Quarter-wave unit cell for a design wavelength: each layer is
/// lambda0 / (4 n) thick, which centers the first bandgap at lambda0.
BraggCell quarter_wave_cell(double lambda0_nm, double n_high, double n_low);

/// Round trip of one period in the forward/backward amplitude basis:
/// product of propagation and interface matrices, starting and ending
/// inside the first layer's medium. |det| = 1 for lossless stacks.
Eigen::Matrix2cd unit_cell_matrix(const BraggCell& cell, double wavelength_nm);

struct GapInterval {
    double lambda_low_nm = 0.0;
    double lambda_high_nm = 0.0;
    bool contains(double wavelength_nm) const {
        return wavelength_nm >= lambda_low_nm && wavelength_nm <= lambda_high_nm;
    }
};

/// Bandgap intervals on the given (sorted, dense) wavelength grid:
/// contiguous runs where |Tr(M)/2| > 1. Gap edges are reported at the
/// bracketing grid points, so the grid spacing sets the edge resolution.
std::vector<GapInterval> stack_bandgap(const BraggCell& cell,
                                       std::span<const double> wavelength_grid_nm);

/// Power transmission through n_periods periods embedded in the first
/// layer's medium. Decays geometrically with the period count inside a gap.
double mirror_transmission(const BraggCell& cell, int n_periods,
                           double wavelength_nm);

/// Quality factor of a cavity bounded by two mirrors of the same unit cell:
/// Q = omega * tau_photon with tau_photon = 2 L_eff / (c_medium * (T_L + T_R)).
/// L_eff = taper_periods * period + one Bloch penetration depth
/// Lambda / (2 ln |lambda_Bloch|) per mirror; c_medium = c / mean_index.
/// Throws if the cell has no gap at lambda0 (no confinement).
double q_estimate(const BraggCell& cell, int n_left, int n_right,
                  double lambda0_nm, int taper_periods = 20);

} // namespace ybcav
