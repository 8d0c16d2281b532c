#include "ybcav/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "ybcav/errors.hpp"

namespace ybcav {

namespace {

using nlohmann::json;

json transitions_to_json(const std::vector<Transition>& transitions) {
    json arr = json::array();
    for (const Transition& t : transitions) {
        arr.push_back({{"name", t.name},
                       {"lower", t.lower},
                       {"upper", t.upper},
                       {"dipole_axis", std::string(1, t.dipole_axis)},
                       {"frequency_GHz", t.frequency_GHz}});
    }
    return arr;
}

Transition transition_from_json(const json& node, const std::string& where) {
    if (!node.is_object()) {
        throw config_error(where + ": each transition must be an object");
    }
    static const std::set<std::string> known{"name", "lower", "upper",
                                             "dipole_axis", "frequency_GHz"};
    for (const auto& item : node.items()) {
        if (!known.count(item.key())) {
            throw config_error(where + ": unknown key '" + item.key() + "'");
        }
    }
    Transition t;
    try {
        t.name = node.at("name").get<std::string>();
        t.lower = node.at("lower").get<std::string>();
        t.upper = node.at("upper").get<std::string>();
        if (node.contains("dipole_axis")) {
            const auto axis = node.at("dipole_axis").get<std::string>();
            if (axis.size() != 1) {
                throw config_error(where + ": dipole_axis must be one letter");
            }
            t.dipole_axis = axis[0];
        }
        if (node.contains("frequency_GHz")) {
            t.frequency_GHz = node.at("frequency_GHz").get<double>();
        }
    } catch (const json::exception& e) {
        throw config_error(where + ": " + e.what());
    }
    return t;
}

/// Walks the config schema reading values out of a JSON object, recording
/// an audit entry per leaf and rejecting unknown keys.
class Reader {
  public:
    Reader(const json& node, std::string prefix,
           std::vector<RunConfig::AuditEntry>& audit)
        : node_(node), prefix_(std::move(prefix)), audit_(audit) {
        if (!node_.is_object()) {
            throw config_error(label("") + "must be a JSON object");
        }
    }

    template <typename T>
    void field(const char* key, T& value, const char* provenance) {
        const bool present = node_.contains(key);
        if (present) {
            seen_.insert(key);
            try {
                value = node_.at(key).get<T>();
            } catch (const json::exception& e) {
                throw config_error(label(key) + e.what());
            }
        }
        audit_.push_back(
            {prefix_ + key, provenance, json(value).dump(), !present});
    }

    void transitions(const char* key, std::vector<Transition>& value,
                     const char* provenance) {
        const bool present = node_.contains(key);
        if (present) {
            seen_.insert(key);
            const json& arr = node_.at(key);
            if (!arr.is_array()) {
                throw config_error(label(key) + "must be an array");
            }
            value.clear();
            for (const json& item : arr) {
                value.push_back(transition_from_json(item, prefix_ + key));
            }
        }
        audit_.push_back({prefix_ + key, provenance,
                          transitions_to_json(value).dump(), !present});
    }

    template <typename Fn>
    void block(const char* key, Fn&& bind) {
        static const json empty = json::object();
        const json* child = &empty;
        if (node_.contains(key)) {
            seen_.insert(key);
            child = &node_.at(key);
        }
        Reader sub(*child, prefix_ + key + ".", audit_);
        bind(sub);
        sub.done();
    }

    void done() const {
        for (const auto& item : node_.items()) {
            if (!seen_.count(item.key())) {
                throw config_error(label(item.key().c_str()) + "unknown key");
            }
        }
    }

  private:
    std::string label(const char* key) const {
        return "config: " + prefix_ + key + ": ";
    }

    const json& node_;
    std::string prefix_;
    std::vector<RunConfig::AuditEntry>& audit_;
    std::set<std::string> seen_;
};

/// Same schema walk, writing every field into a JSON object.
class Writer {
  public:
    explicit Writer(json& node) : node_(node) {}

    template <typename T>
    void field(const char* key, T& value, const char*) {
        node_[key] = value;
    }

    void transitions(const char* key, std::vector<Transition>& value,
                     const char*) {
        node_[key] = transitions_to_json(value);
    }

    template <typename Fn>
    void block(const char* key, Fn&& bind) {
        node_[key] = json::object();
        Writer sub(node_[key]);
        bind(sub);
    }

  private:
    json& node_;
};

template <class Op>
void bind_levels(Op& op, LevelConfig& c) {
    op.field("levels", c.levels, "device");
    op.field("excited", c.excited, "device");
    op.field("energies_MHz", c.energies_MHz, "plumbing");
    op.field("gamma_bulk_per_s", c.gamma_bulk_per_s, "device");
    op.field("branch_A", c.branch_A, "device");
    op.field("branch_C", c.branch_C, "device");
    op.transitions("transitions", c.transitions, "device");
}

template <class Op>
void bind_cavity(Op& op, CavityMode& c) {
    op.field("nu0_GHz", c.nu0_GHz, "device");
    op.field("quality_factor", c.quality_factor, "device");
    op.field("v_norm", c.v_norm, "device");
    op.field("n_host", c.n_host, "derived");
    op.field("field_halving_depth_nm", c.field_halving_depth_nm, "device");
    op.field("interface_fraction", c.interface_fraction, "device");
}

template <class Op>
void bind_site(Op& op, IonSite& c) {
    op.field("depth_nm", c.depth_nm, "placeholder");
    op.field("transverse_factor", c.transverse_factor, "placeholder");
    op.field("dipole_alignment", c.dipole_alignment, "placeholder");
    op.field("detuning_GHz", c.detuning_GHz, "placeholder");
    op.field("frequency_offset_GHz", c.frequency_offset_GHz, "placeholder");
}

template <class Op>
void bind_noise(Op& op, NoiseModel& c) {
    op.field("sigma_rad_s", c.sigma_rad_s, "plumbing");
    op.field("tau_c_s", c.tau_c_s, "device");
    op.field("gamma_phi_per_s", c.gamma_phi_per_s, "plumbing");
}

template <class Op>
void bind_chain(Op& op, DetectionChain& c) {
    op.field("grating_efficiency", c.grating_efficiency, "device");
    op.field("splitter_fraction", c.splitter_fraction, "device");
    op.field("detector_efficiency", c.detector_efficiency, "placeholder");
    op.field("extra_loss", c.extra_loss, "plumbing");
    op.field("background_rate_per_s", c.background_rate_per_s, "plumbing");
    op.field("dark_rate_per_s", c.dark_rate_per_s, "plumbing");
    op.field("dead_time_s", c.dead_time_s, "placeholder");
}

template <class Op>
void bind_protocol(Op& op, ProtocolConfig& c) {
    op.field("readout_pulses", c.readout_pulses, "device");
    op.field("repetition_period_s", c.repetition_period_s, "device");
    op.field("shots", c.shots, "plumbing");
    op.field("noise_samples", c.noise_samples, "plumbing");
    op.field("drive_rabi_rad_s", c.drive_rabi_rad_s, "placeholder");
    op.field("ramsey_detuning_rad_s", c.ramsey_detuning_rad_s, "placeholder");
    op.field("pump_rabi_rad_s", c.pump_rabi_rad_s, "placeholder");
    op.field("pump_pulses", c.pump_pulses, "placeholder");
    op.field("ramsey_fit", c.ramsey_fit, "plumbing");
    op.field("echo_fit", c.echo_fit, "plumbing");
    op.field("initial_level", c.initial_level, "plumbing");
    op.field("lifetime_window_s", c.lifetime_window_s, "plumbing");
    op.field("lifetime_bin_count", c.lifetime_bin_count, "plumbing");
    op.field("rabi_durations_s", c.rabi_durations_s, "plumbing");
    op.field("ramsey_delays_s", c.ramsey_delays_s, "plumbing");
    op.field("echo_delays_s", c.echo_delays_s, "plumbing");
    op.field("pump_freq_GHz", c.pump_freq_GHz, "plumbing");
}

template <class Op>
void bind_ensemble(Op& op, EnsembleConfig& c) {
    op.field("concentration", c.concentration, "device");
    op.field("cation_density_per_m3", c.cation_density_per_m3, "placeholder");
    op.field("footprint_area_nm2", c.footprint_area_nm2, "placeholder");
    op.field("depth_cutoff_nm", c.depth_cutoff_nm, "placeholder");
    op.field("abundance_171", c.abundance_171, "derived");
    op.field("abundance_zero_spin", c.abundance_zero_spin, "derived");
    op.field("inhomogeneous_width_GHz", c.inhomogeneous_width_GHz,
             "placeholder");
    op.field("zero_spin_peak_GHz", c.zero_spin_peak_GHz, "device");
    op.field("scan_span_GHz", c.scan_span_GHz, "plumbing");
    op.field("scan_points", c.scan_points, "plumbing");
}

template <class Op>
void bind_g2(Op& op, G2Config& c) {
    op.field("shots", c.shots, "plumbing");
    op.field("max_lag", c.max_lag, "plumbing");
    op.field("far_lag_min", c.far_lag_min, "plumbing");
    op.field("emitters", c.emitters, "plumbing");
    op.field("emitter_offset_MHz", c.emitter_offset_MHz, "placeholder");
    op.field("pulse_rabi_rad_s", c.pulse_rabi_rad_s, "placeholder");
    op.field("pulse_detuning_rad_s", c.pulse_detuning_rad_s, "plumbing");
    op.field("window_s", c.window_s, "plumbing");
    op.field("initial_level", c.initial_level, "plumbing");
}

template <class Op>
void bind_reflection(Op& op, ReflectionConfig& c) {
    op.field("coupling_ratio", c.coupling_ratio, "placeholder");
    op.field("span_GHz", c.span_GHz, "plumbing");
    op.field("points", c.points, "plumbing");
}

template <class Op>
void bind_bragg(Op& op, BraggConfig& c) {
    op.field("n_high", c.n_high, "derived");
    op.field("n_low", c.n_low, "derived");
    op.field("lambda0_nm", c.lambda0_nm, "device");
    op.field("n_left", c.n_left, "device");
    op.field("n_right", c.n_right, "device");
    op.field("taper_periods", c.taper_periods, "device");
    op.field("span_nm", c.span_nm, "plumbing");
    op.field("grid_points", c.grid_points, "plumbing");
}

template <class Op>
void bind_calibration(Op& op, CalibrationTargets& c) {
    op.field("t2_star_s", c.t2_star_s, "device");
    op.field("t2_s", c.t2_s, "device");
    op.field("tau_c_s", c.tau_c_s, "device");
    op.field("tolerance", c.tolerance, "plumbing");
    op.field("max_iterations", c.max_iterations, "plumbing");
}

template <class Op>
void bind_root(Op& op, RunConfig& c) {
    op.field("master_seed", c.master_seed, "plumbing");
    op.field("out_dir", c.out_dir, "plumbing");
    op.block("levels", [&](auto& b) { bind_levels(b, c.levels); });
    op.block("cavity", [&](auto& b) { bind_cavity(b, c.cavity); });
    op.block("site", [&](auto& b) { bind_site(b, c.site); });
    op.block("noise", [&](auto& b) { bind_noise(b, c.noise); });
    op.block("chain", [&](auto& b) { bind_chain(b, c.chain); });
    op.block("protocol", [&](auto& b) { bind_protocol(b, c.protocol); });
    op.block("ensemble", [&](auto& b) { bind_ensemble(b, c.ensemble); });
    op.block("g2", [&](auto& b) { bind_g2(b, c.g2); });
    op.block("reflection", [&](auto& b) { bind_reflection(b, c.reflection); });
    op.block("bragg", [&](auto& b) { bind_bragg(b, c.bragg); });
    op.block("calibration",
             [&](auto& b) { bind_calibration(b, c.calibration); });
}

} // namespace

void G2Config::validate() const {
    if (shots < 1) throw config_error("g2: shots must be >= 1");
    if (max_lag < 1 || far_lag_min < 1 || far_lag_min > max_lag) {
        throw config_error("g2: need 1 <= far_lag_min <= max_lag");
    }
    if (emitters != 1 && emitters != 2) {
        throw config_error("g2: emitters must be 1 or 2");
    }
    if (!(pulse_rabi_rad_s > 0.0)) {
        throw config_error("g2: pulse Rabi rate must be > 0");
    }
    if (window_s < 0.0) throw config_error("g2: window must be >= 0");
    if (initial_level.empty()) {
        throw config_error("g2: initial level must be named");
    }
}

void ReflectionConfig::validate() const {
    if (coupling_ratio < 0.0 || coupling_ratio > 1.0) {
        throw config_error("reflection: coupling ratio must lie in [0, 1]");
    }
    if (!(span_GHz > 0.0) || points < 5) {
        throw config_error("reflection: span must be > 0 with >= 5 points");
    }
}

void BraggConfig::validate() const {
    if (n_low < 1.0 || n_high < 1.0) {
        throw config_error("bragg: refractive indices must be >= 1");
    }
    if (n_high == n_low) {
        throw config_error("bragg: need an index contrast");
    }
    if (!(lambda0_nm > 0.0)) {
        throw config_error("bragg: design wavelength must be > 0");
    }
    if (n_left < 1 || n_right < 1 || taper_periods < 0) {
        throw config_error("bragg: period counts must be positive");
    }
    if (!(span_nm > 0.0) || span_nm >= 2.0 * lambda0_nm || grid_points < 16) {
        throw config_error(
            "bragg: scan span must fit above zero with >= 16 grid points");
    }
}

void RunConfig::validate_all() const {
    (void)LevelSystem::build(levels);
    cavity.validate();
    site.validate();
    noise.validate();
    chain.validate();
    protocol.validate();
    ensemble.validate();
    g2.validate();
    reflection.validate();
    bragg.validate();
    if (!(calibration.t2_star_s > 0.0) || !(calibration.t2_s > 0.0) ||
        !(calibration.tau_c_s > 0.0) || !(calibration.tolerance > 0.0) ||
        calibration.max_iterations < 1) {
        throw config_error("calibration: targets must be positive");
    }
}

bool RunConfig::equivalent(const RunConfig& other) const {
    return levels == other.levels && cavity == other.cavity &&
           site == other.site && noise == other.noise &&
           chain == other.chain && protocol == other.protocol &&
           ensemble == other.ensemble && g2 == other.g2 &&
           reflection == other.reflection && bragg == other.bragg &&
           calibration == other.calibration &&
           master_seed == other.master_seed && out_dir == other.out_dir;
}

RunConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    RunConfig config;
    Reader reader(root, "", config.audit);
    bind_root(reader, config);
    reader.done();
    config.validate_all();
    return config;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::string resolved_config_json(const RunConfig& config) {
    json root = json::object();
    Writer writer(root);
    RunConfig copy = config;
    bind_root(writer, copy);
    return root.dump(2) + "\n";
}

} // namespace ybcav
