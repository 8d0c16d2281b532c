#pragma once

#include <map>
#include <string>
#include <vector>

namespace ybcav {

/// One optical transition between a ground-manifold level and an excited
/// level. The readout transition A couples to the cavity polarization
/// (dipole along the crystal c-axis); the pump transition C is orthogonal
/// (a-axis) and is not enhanced.
struct Transition {
    std::string name;       // "A" or "C"
    std::string lower;      // ground-manifold level id
    std::string upper;      // excited level id
    char dipole_axis = 'c'; // 'c' for A, 'a' for C
    double frequency_GHz = 0.0;

    bool operator==(const Transition&) const = default;
};

/// Inputs for build_level_system(). Defaults give the four-level zero-field
/// system used throughout: clock states g0/g1, the remaining ground
/// hyperfine pair lumped into a single shelving level gaux, and one active
/// excited level e0.
struct LevelConfig {
    std::vector<std::string> levels{"g0", "g1", "gaux", "e0"};
    std::vector<std::string> excited{"e0"};
    std::map<std::string, double> energies_MHz; // offsets, metadata only
    double gamma_bulk_per_s = 1.0 / 268.8e-6;   // bulk radiative decay rate
    double branch_A = 0.404;
    double branch_C = 0.4;
    std::vector<Transition> transitions; // empty -> default A,C connectivity

    bool operator==(const LevelConfig&) const = default;
};

/// Validated electronic/hyperfine level structure with transition
/// connectivity and branching. Immutable after construction; safe for
/// concurrent reads.
class LevelSystem {
  public:
    /// Validates and builds. Throws config_error on branching fractions
    /// outside [0,1] or not summing to 1 within 1e-12, duplicate level
    /// names, or transitions referencing missing/wrong-manifold levels.
    static LevelSystem build(const LevelConfig& config);

    int dim() const { return static_cast<int>(levels_.size()); }
    int index_of(const std::string& level) const; // throws if unknown
    const std::string& level_name(int index) const { return levels_[index]; }
    bool is_excited(int index) const { return excited_[index]; }

    const Transition& transition(const std::string& name) const;
    bool has_transition(const std::string& name) const;
    const std::vector<Transition>& transitions() const { return transitions_; }

    double gamma_bulk() const { return gamma_bulk_; }
    double branch_A() const { return branch_A_; }
    double branch_C() const { return branch_C_; }
    double branch_aux() const { return branch_aux_; }
    double energy_MHz(const std::string& level) const;

    /// Index shorthands for the default decay channels.
    int upper_index() const;              // upper level of A
    int lower_index_A() const;            // lower level of A
    int lower_index_C() const;            // lower level of C
    int shelf_index() const;              // gaux (-1 if absent)

    bool operator==(const LevelSystem& other) const = default;

  private:
    LevelSystem() = default;

    std::vector<std::string> levels_;
    std::vector<bool> excited_;
    std::map<std::string, double> energies_MHz_;
    std::vector<Transition> transitions_;
    double gamma_bulk_ = 0.0;
    double branch_A_ = 0.0;
    double branch_C_ = 0.0;
    double branch_aux_ = 0.0;
};

/// Branching fraction of the readout transition from two observables:
/// the lifetime-reduction factor (bulk lifetime / enhanced lifetime) and
/// the readout-transition cyclicity. Solves
///   reduction = 1 + F*beta,  cyclicity = beta*(1+F)/(1-beta)
/// for beta, giving beta = (cyclicity + 1 - reduction)/(cyclicity + 1).
/// Throws config_error if the solution falls outside (0, 1).
double branching_from_observables(double reduction, double cyclicity);

/// Mean number of A photons emitted before the population is shelved
/// elsewhere: beta_A*(1 + F_eff)/(1 - beta_A). Throws on beta_A = 1.
double transition_cyclicity(const LevelSystem& levels, double f_eff);

} // namespace ybcav
