#include "ybcav/cli.hpp"

#include <filesystem>
#include <ostream>

#include "json.hpp"

#include "ybcav/bragg.hpp"
#include "ybcav/ensemble.hpp"
#include "ybcav/errors.hpp"
#include "ybcav/output.hpp"
#include "ybcav/protocols.hpp"
#include "ybcav/rng.hpp"

namespace ybcav {

namespace {

using nlohmann::json;

std::vector<double> grid_around(double center, double span, int points) {
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        out[static_cast<std::size_t>(i)] =
            center - 0.5 * span + span * i / (points - 1.0);
    }
    return out;
}

json fit_to_json(const FitResult& fit) {
    json params = json::object();
    json errors = json::object();
    for (std::size_t i = 0; i < fit.param_names.size(); ++i) {
        params[fit.param_names[i]] = fit.params[static_cast<int>(i)];
        errors[fit.param_names[i]] = fit.errors[static_cast<int>(i)];
    }
    return {{"model", fit.model},
            {"params", params},
            {"errors", errors},
            {"chi2_reduced", fit.chi2_reduced},
            {"converged", fit.converged},
            {"iterations", fit.iterations}};
}

struct Produced {
    CsvTable csv;
    json summary = json::object();
};

Produced from_protocol(const ProtocolResult& res) {
    Produced out;
    out.csv.header = {res.x_label, res.y_label, "err"};
    for (const CurvePoint& p : res.curve) {
        out.csv.rows.push_back({p.x, p.y, p.err});
    }
    if (!res.fit.param_names.empty()) {
        out.summary["fit"] = fit_to_json(res.fit);
    }
    out.summary["derived"] = res.derived;
    return out;
}

using ProtocolFn = ProtocolResult (*)(const SimSystem&, const ProtocolConfig&,
                                      std::uint64_t);

Produced run_protocol(const RunConfig& cfg, ProtocolFn fn) {
    const SimSystem system =
        make_system(cfg.levels, cfg.cavity, cfg.site, cfg.noise, cfg.chain);
    return from_protocol(fn(system, cfg.protocol, cfg.master_seed));
}

Produced handle_g2(const RunConfig& cfg) {
    const SimSystem system =
        make_system(cfg.levels, cfg.cavity, cfg.site, cfg.noise, cfg.chain);
    const double window =
        cfg.g2.window_s > 0.0 ? cfg.g2.window_s : 5.0 * system.rates.tau;
    const double pulse = units::pi / cfg.g2.pulse_rabi_rad_s;
    PulseSequence seq;
    seq.repetition_period_s =
        std::max(cfg.protocol.repetition_period_s, pulse + window);
    seq.pi_pulse("A", cfg.g2.pulse_rabi_rad_s, 0.0, cfg.g2.pulse_detuning_rad_s)
        .window(window);

    std::vector<EmitterSpec> emitters{{system.rates, 0.0}};
    if (cfg.g2.emitters == 2) {
        emitters.push_back(
            {system.rates, units::two_pi * 1e6 * cfg.g2.emitter_offset_MHz});
    }
    PhotonRunConfig rc;
    rc.shots = cfg.g2.shots;
    rc.initial_level = cfg.g2.initial_level;
    rc.chain = cfg.chain;
    rc.max_lag = static_cast<int>(cfg.g2.max_lag);
    rc.far_lag_min = static_cast<int>(cfg.g2.far_lag_min);
    const PhotonRun run = run_photon_shots(system.levels, emitters, seq,
                                           cfg.noise, rc, cfg.master_seed);

    Produced out;
    out.csv.header = {"lag",  "bin_left_s", "bin_right_s",
                      "pairs", "area",      "g2",
                      "g2_err"};
    for (std::size_t i = 0; i < run.g2.lag.size(); ++i) {
        out.csv.rows.push_back({static_cast<double>(run.g2.lag[i]),
                                run.g2.bin_left_s[i], run.g2.bin_right_s[i],
                                run.g2.pairs[i], run.g2.area[i],
                                run.g2.normalized[i], run.g2.g2_error[i]});
    }
    out.summary["derived"] = {
        {"g2_zero", run.g2.zero_lag},
        {"norm_area", run.g2.norm_area},
        {"mean_emitted_per_shot", run.mean_emitted_per_shot},
        {"mean_detected_per_period", run.mean_detected_per_period},
        {"jumps_A", run.jumps_A},
        {"jumps_C", run.jumps_C},
        {"jumps_shelf", run.jumps_shelf},
        {"repetition_period_s", seq.repetition_period_s}};
    // Band means of the side peaks, used when scanning for spectral
    // diffusion bunching: lags under 1 ms and beyond 5 ms.
    double sum_short = 0.0, sum_late = 0.0;
    int n_short = 0, n_late = 0;
    for (std::size_t i = 1; i < run.g2.lag.size(); ++i) {
        const double center = run.g2.lag[i] * seq.repetition_period_s;
        if (center < 1e-3) {
            sum_short += run.g2.normalized[i];
            ++n_short;
        } else if (center > 5e-3) {
            sum_late += run.g2.normalized[i];
            ++n_late;
        }
    }
    if (n_short > 0)
        out.summary["derived"]["bunching_sub_ms"] = sum_short / n_short;
    if (n_late > 0)
        out.summary["derived"]["bunching_beyond_5ms"] = sum_late / n_late;
    return out;
}

Produced handle_ple(const RunConfig& cfg) {
    const LevelSystem levels = LevelSystem::build(cfg.levels);
    const auto ions = sample_sites(
        cfg.ensemble, rng::derive_seed(cfg.master_seed, "ensemble"));
    const auto grid = grid_around(0.0, cfg.ensemble.scan_span_GHz,
                                  cfg.ensemble.scan_points);
    const auto spectrum = ple_spectrum(ions, cfg.cavity, levels, grid);

    Produced out;
    out.csv.header = {"offset_GHz", "counts"};
    double peak = 0.0, peak_offset = 0.0;
    std::size_t n171 = 0;
    for (const auto& ion : ions) {
        if (ion.isotope == Isotope::yb171) ++n171;
    }
    for (const auto& [f, counts] : spectrum) {
        out.csv.rows.push_back({f, counts});
        if (counts > peak) {
            peak = counts;
            peak_offset = f;
        }
    }
    out.summary["derived"] = {{"ions_total", ions.size()},
                              {"ions_171", n171},
                              {"ions_zero_spin", ions.size() - n171},
                              {"expected_count", cfg.ensemble.expected_count()},
                              {"peak_offset_GHz", peak_offset},
                              {"peak_counts", peak}};
    return out;
}

Produced handle_lifetimes(const RunConfig& cfg) {
    const LevelSystem levels = LevelSystem::build(cfg.levels);
    const auto ions = sample_sites(
        cfg.ensemble, rng::derive_seed(cfg.master_seed, "ensemble"));
    const LifetimeCensus census = lifetime_distribution(ions, cfg.cavity, levels);

    Produced out;
    out.csv.header = {"bin_left_s", "bin_right_s", "count"};
    for (std::size_t i = 0; i < census.counts.size(); ++i) {
        out.csv.rows.push_back({census.bin_left_s[i], census.bin_right_s[i],
                                static_cast<double>(census.counts[i])});
    }
    out.summary["derived"] = {{"sites", census.tau_s.size()},
                              {"tau_min_s", census.min_s},
                              {"tau_median_s", census.median_s},
                              {"tau_max_s", census.max_s}};
    return out;
}

Produced handle_purcell(const RunConfig& cfg) {
    const LevelSystem levels = LevelSystem::build(cfg.levels);
    const double f_max =
        purcell_peak(cfg.cavity.quality_factor, cfg.cavity.v_norm);
    const double xi2 = field_overlap(cfg.site, cfg.cavity);
    const double lorentz = detuning_factor(cfg.site.detuning_GHz, cfg.cavity);
    const DecayRates rates = enhanced_decay(levels, cfg.site, cfg.cavity);

    Produced out;
    out.csv.header = {"f_max",   "xi2",    "detuning_factor",
                      "f_eff",   "tau_s",  "gamma_total_per_s",
                      "rate_A",  "rate_C", "rate_aux"};
    out.csv.rows.push_back({f_max, xi2, lorentz, rates.f_eff, rates.tau,
                            rates.gamma_total, rates.rate_A, rates.rate_C,
                            rates.rate_aux});
    out.summary["derived"] = {
        {"f_max", f_max},
        {"f_eff", rates.f_eff},
        {"tau_s", rates.tau},
        {"lifetime_reduction", levels.gamma_bulk() > 0.0
                                   ? rates.gamma_total / levels.gamma_bulk()
                                   : 0.0},
        {"cyclicity", transition_cyclicity(levels, rates.f_eff)}};
    return out;
}

Produced handle_reflection(const RunConfig& cfg) {
    const auto grid = grid_around(cfg.cavity.nu0_GHz, cfg.reflection.span_GHz,
                                  cfg.reflection.points);
    const auto spectrum =
        reflection_spectrum(cfg.cavity, cfg.reflection.coupling_ratio, grid);
    std::vector<double> freq, refl;
    Produced out;
    out.csv.header = {"freq_GHz", "reflectance"};
    for (const auto& [f, r] : spectrum) {
        out.csv.rows.push_back({f, r});
        freq.push_back(f);
        refl.push_back(r);
    }
    const ReflectionFit fit = fit_reflection_q(freq, refl);
    out.summary["fit"] = fit_to_json(fit.fit);
    out.summary["derived"] = {{"q_fit", fit.quality_factor},
                              {"q_input", cfg.cavity.quality_factor},
                              {"coupling_ratio", cfg.reflection.coupling_ratio}};
    return out;
}

Produced handle_bragg(const RunConfig& cfg) {
    const BraggCell cell = quarter_wave_cell(cfg.bragg.lambda0_nm,
                                             cfg.bragg.n_high, cfg.bragg.n_low);
    const auto grid = grid_around(cfg.bragg.lambda0_nm, cfg.bragg.span_nm,
                                  cfg.bragg.grid_points);
    const auto gaps = stack_bandgap(cell, grid);

    Produced out;
    out.csv.header = {"wavelength_nm", "abs_half_trace", "in_gap"};
    for (double lambda : grid) {
        const double half_trace =
            std::abs(unit_cell_matrix(cell, lambda).trace()) / 2.0;
        double in_gap = 0.0;
        for (const GapInterval& gap : gaps) {
            if (gap.contains(lambda)) in_gap = 1.0;
        }
        out.csv.rows.push_back({lambda, half_trace, in_gap});
    }

    const GapInterval* design_gap = nullptr;
    for (const GapInterval& gap : gaps) {
        if (gap.contains(cfg.bragg.lambda0_nm)) design_gap = &gap;
    }
    const double t_left =
        mirror_transmission(cell, cfg.bragg.n_left, cfg.bragg.lambda0_nm);
    const double t_right =
        mirror_transmission(cell, cfg.bragg.n_right, cfg.bragg.lambda0_nm);
    out.summary["derived"] = {
        {"gap_low_nm", design_gap ? design_gap->lambda_low_nm : 0.0},
        {"gap_high_nm", design_gap ? design_gap->lambda_high_nm : 0.0},
        {"contains_design_wavelength", design_gap != nullptr},
        {"t_left", t_left},
        {"t_right", t_right},
        {"q_estimate",
         q_estimate(cell, cfg.bragg.n_left, cfg.bragg.n_right,
                    cfg.bragg.lambda0_nm, cfg.bragg.taper_periods)}};
    return out;
}

Produced handle_calibrate(const RunConfig& cfg) {
    const SimSystem system =
        make_system(cfg.levels, cfg.cavity, cfg.site, cfg.noise, cfg.chain);
    CalibrationReport report;
    const NoiseModel model = calibrate_noise(system, cfg.protocol,
                                             cfg.calibration, cfg.master_seed,
                                             &report);
    Produced out;
    out.csv.header = {"sigma_rad_s",  "gamma_phi_per_s", "tau_c_s",
                      "t2_star_sim_s", "t2_sim_s",       "iterations"};
    out.csv.rows.push_back({model.sigma_rad_s, model.gamma_phi_per_s,
                            model.tau_c_s, report.t2_star_sim_s,
                            report.t2_sim_s,
                            static_cast<double>(report.iterations)});
    out.summary["derived"] = {{"sigma_rad_s", model.sigma_rad_s},
                              {"gamma_phi_per_s", model.gamma_phi_per_s},
                              {"tau_c_s", model.tau_c_s},
                              {"t2_star_sim_s", report.t2_star_sim_s},
                              {"t2_sim_s", report.t2_sim_s},
                              {"t2_star_target_s", cfg.calibration.t2_star_s},
                              {"t2_target_s", cfg.calibration.t2_s},
                              {"iterations", report.iterations}};
    return out;
}

Produced dispatch(const std::string& subcommand, const RunConfig& cfg) {
    if (subcommand == "lifetime") return run_protocol(cfg, run_lifetime);
    if (subcommand == "pump-probe") return run_protocol(cfg, run_pump_probe);
    if (subcommand == "rabi") return run_protocol(cfg, run_rabi);
    if (subcommand == "ramsey") return run_protocol(cfg, run_ramsey);
    if (subcommand == "echo") return run_protocol(cfg, run_echo);
    if (subcommand == "g2") return handle_g2(cfg);
    if (subcommand == "ple") return handle_ple(cfg);
    if (subcommand == "lifetimes") return handle_lifetimes(cfg);
    if (subcommand == "purcell") return handle_purcell(cfg);
    if (subcommand == "reflection") return handle_reflection(cfg);
    if (subcommand == "bragg") return handle_bragg(cfg);
    if (subcommand == "calibrate") return handle_calibrate(cfg);
    throw config_error("unknown subcommand: " + subcommand);
}

} // namespace

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names{
        "lifetime", "pump-probe", "rabi",       "ramsey",
        "echo",     "g2",         "ple",        "lifetimes",
        "purcell",  "reflection", "bragg",      "calibrate"};
    return names;
}

RunArtifacts execute(const std::string& subcommand, const RunConfig& config) {
    config.validate_all();
    Produced produced = dispatch(subcommand, config);

    std::filesystem::create_directories(config.out_dir);
    const std::string base = config.out_dir + "/" + subcommand;
    RunArtifacts artifacts{base + ".csv", base + "_summary.json",
                           base + "_config.json"};

    const std::string resolved = resolved_config_json(config);
    json audit = json::array();
    for (const RunConfig::AuditEntry& entry : config.audit) {
        audit.push_back({{"field", entry.field},
                         {"provenance", entry.provenance},
                         {"value", entry.value},
                         {"defaulted", entry.defaulted}});
    }
    json summary = produced.summary;
    summary["subcommand"] = subcommand;
    summary["seed"] = config.master_seed;
    summary["config_hash"] = rng::fnv1a(resolved);
    summary["artifacts"] = {{"csv", artifacts.csv_path},
                            {"resolved_config", artifacts.config_path}};
    summary["audit"] = audit;

    write_text_file(artifacts.csv_path, csv_text(produced.csv));
    write_text_file(artifacts.summary_path, summary.dump(2) + "\n");
    write_text_file(artifacts.config_path, resolved);
    return artifacts;
}

int run_cli(const std::string& subcommand, const RunConfig& config,
            std::ostream& log) {
    try {
        const RunArtifacts artifacts = execute(subcommand, config);
        log << "wrote " << artifacts.csv_path << "\n"
            << "wrote " << artifacts.summary_path << "\n"
            << "wrote " << artifacts.config_path << "\n";
        return 0;
    } catch (const config_error& e) {
        log << "config error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        log << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        log << "numerical error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace ybcav
