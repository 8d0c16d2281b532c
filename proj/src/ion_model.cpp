#include "ybcav/ion_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ybcav/errors.hpp"

namespace ybcav {

namespace {

void check_fraction(const char* name, double value) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw config_error(std::string("ion-model: ") + name +
                           " must lie in [0,1], got " + std::to_string(value));
    }
}

} // namespace

LevelSystem LevelSystem::build(const LevelConfig& config) {
    LevelSystem sys;
    sys.levels_ = config.levels;

    std::set<std::string> seen;
    for (const auto& name : sys.levels_) {
        if (!seen.insert(name).second) {
            throw config_error("ion-model: duplicate level name '" + name + "'");
        }
    }

    sys.excited_.resize(sys.levels_.size(), false);
    for (const auto& name : config.excited) {
        auto it = std::find(sys.levels_.begin(), sys.levels_.end(), name);
        if (it == sys.levels_.end()) {
            throw config_error("ion-model: excited level '" + name +
                               "' is not in the level list");
        }
        sys.excited_[it - sys.levels_.begin()] = true;
    }
    if (std::none_of(sys.excited_.begin(), sys.excited_.end(),
                     [](bool e) { return e; })) {
        throw config_error("ion-model: at least one excited level required");
    }

    if (!(config.gamma_bulk_per_s > 0.0)) {
        throw config_error("ion-model: gamma_bulk must be > 0");
    }
    sys.gamma_bulk_ = config.gamma_bulk_per_s;

    check_fraction("branch_A", config.branch_A);
    check_fraction("branch_C", config.branch_C);
    if (!(config.branch_A > 0.0 && config.branch_A < 1.0)) {
        throw config_error("ion-model: branch_A must lie strictly in (0,1)");
    }
    const double branch_aux = 1.0 - config.branch_A - config.branch_C;
    if (branch_aux < -1e-12) {
        throw config_error("ion-model: branching fractions exceed 1 "
                           "(branch_aux = " + std::to_string(branch_aux) + ")");
    }
    sys.branch_A_ = config.branch_A;
    sys.branch_C_ = config.branch_C;
    sys.branch_aux_ = branch_aux < 0.0 ? 0.0 : branch_aux;

    sys.energies_MHz_ = config.energies_MHz;
    for (const auto& [name, offset] : sys.energies_MHz_) {
        (void)offset;
        if (seen.find(name) == seen.end()) {
            throw config_error("ion-model: energy offset for unknown level '" +
                               name + "'");
        }
    }

    // Default connectivity: A = g1 <-> e0 (readout, c-axis dipole),
    // C = g0 <-> e0 (pump, a-axis dipole). The shelving level gaux is only
    // reached by decay, with fraction branch_aux.
    sys.transitions_ = config.transitions;
    if (sys.transitions_.empty()) {
        sys.transitions_.push_back({"A", "g1", "e0", 'c', 304505.0});
        sys.transitions_.push_back({"C", "g0", "e0", 'a', 304503.0});
    }

    std::set<std::string> tnames;
    for (const auto& t : sys.transitions_) {
        if (!tnames.insert(t.name).second) {
            throw config_error("ion-model: duplicate transition '" + t.name + "'");
        }
        const int lo = sys.index_of(t.lower);
        const int up = sys.index_of(t.upper);
        if (sys.excited_[lo]) {
            throw config_error("ion-model: transition " + t.name +
                               " lower level '" + t.lower + "' is not ground");
        }
        if (!sys.excited_[up]) {
            throw config_error("ion-model: transition " + t.name +
                               " upper level '" + t.upper + "' is not excited");
        }
        if (t.name == "A" && t.dipole_axis != 'c') {
            throw config_error("ion-model: transition A must have dipole_axis 'c'");
        }
        if (t.name == "C" && t.dipole_axis != 'a') {
            throw config_error("ion-model: transition C must have dipole_axis 'a'");
        }
    }
    if (tnames.find("A") == tnames.end()) {
        throw config_error("ion-model: readout transition A is required");
    }

    return sys;
}

int LevelSystem::index_of(const std::string& level) const {
    auto it = std::find(levels_.begin(), levels_.end(), level);
    if (it == levels_.end()) {
        throw config_error("ion-model: unknown level '" + level + "'");
    }
    return static_cast<int>(it - levels_.begin());
}

const Transition& LevelSystem::transition(const std::string& name) const {
    for (const auto& t : transitions_) {
        if (t.name == name) return t;
    }
    throw config_error("ion-model: unknown transition '" + name + "'");
}

bool LevelSystem::has_transition(const std::string& name) const {
    return std::any_of(transitions_.begin(), transitions_.end(),
                       [&](const Transition& t) { return t.name == name; });
}

double LevelSystem::energy_MHz(const std::string& level) const {
    auto it = energies_MHz_.find(level);
    return it == energies_MHz_.end() ? 0.0 : it->second;
}

int LevelSystem::upper_index() const { return index_of(transition("A").upper); }

int LevelSystem::lower_index_A() const { return index_of(transition("A").lower); }

int LevelSystem::lower_index_C() const {
    return has_transition("C") ? index_of(transition("C").lower) : -1;
}

int LevelSystem::shelf_index() const {
    auto it = std::find(levels_.begin(), levels_.end(), "gaux");
    return it == levels_.end() ? -1 : static_cast<int>(it - levels_.begin());
}

double branching_from_observables(double reduction, double cyclicity) {
    if (!(reduction > 1.0)) {
        throw config_error("ion-model: lifetime reduction must be > 1");
    }
    if (!(cyclicity > 0.0)) {
        throw config_error("ion-model: cyclicity must be > 0");
    }
    const double beta = (cyclicity + 1.0 - reduction) / (cyclicity + 1.0);
    if (!(beta > 0.0 && beta < 1.0)) {
        throw config_error(
            "ion-model: observables (reduction=" + std::to_string(reduction) +
            ", cyclicity=" + std::to_string(cyclicity) +
            ") are inconsistent: branch_A = " + std::to_string(beta) +
            " outside (0,1)");
    }
    return beta;
}

double transition_cyclicity(const LevelSystem& levels, double f_eff) {
    if (f_eff < 0.0) {
        throw config_error("ion-model: F_eff must be >= 0");
    }
    const double beta = levels.branch_A();
    if (beta >= 1.0) {
        throw config_error("ion-model: cyclicity diverges for branch_A = 1");
    }
    return beta * (1.0 + f_eff) / (1.0 - beta);
}

} // namespace ybcav
