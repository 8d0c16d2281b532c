#include "ybcav/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "ybcav/errors.hpp"

namespace ybcav {

namespace {

using cd = std::complex<double>;

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] =
            a + (b - a) * static_cast<double>(i) / (n - 1.0);
    }
    return out;
}

void require_grid(const std::vector<double>& grid, const char* name) {
    if (!grid.empty() && grid.size() < 4) {
        throw config_error(std::string("protocol: ") + name +
                           " needs at least 4 points to fit an envelope");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i]) || grid[i] < 0.0) {
            throw config_error(std::string("protocol: ") + name +
                               " entries must be finite and >= 0");
        }
        if (i > 0 && grid[i] <= grid[i - 1]) {
            throw config_error(std::string("protocol: ") + name +
                               " must be strictly increasing");
        }
    }
}

void require_fit_name(const std::string& model, const char* which) {
    if (model != "gaussian" && model != "exponential") {
        throw config_error(std::string("protocol: ") + which +
                           " fit must be 'gaussian' or 'exponential'");
    }
}

double excited_population(const SimSystem& system,
                          const Eigen::MatrixXcd& rho) {
    const int e = system.levels.upper_index();
    return rho(e, e).real();
}

/// Unpolarized ground manifold: the four zero-field hyperfine states are
/// equally occupied, with gaux lumping two of them.
Eigen::MatrixXcd thermal_ground_state(const LevelSystem& levels) {
    std::map<std::string, double> pops;
    pops[levels.level_name(levels.lower_index_A())] += 1.0;
    if (levels.lower_index_C() >= 0 &&
        levels.lower_index_C() != levels.lower_index_A()) {
        pops[levels.level_name(levels.lower_index_C())] += 1.0;
    }
    if (levels.shelf_index() >= 0) {
        pops[levels.level_name(levels.shelf_index())] += 2.0;
    }
    return mixed_state(levels, pops);
}

struct FringeScan {
    std::vector<double> delays;
    std::vector<double> contrast;
    std::vector<double> err;
};

/// Four-phase fringe readout: the second (final) pi/2 pulse is applied at
/// phases 0, pi/2, pi, 3pi/2 under one frozen spectral-diffusion value, and
/// the fringe appears as z = (P0 - Ppi)/2 + i (Ppi2 - P3pi2)/2. The
/// envelope estimate demodulates z at the known drive detuning (static in
/// the echo case, which refocuses it) and takes the in-phase part, whose
/// sampling noise is zero-mean. Taking |mean z| instead would fold that
/// noise into a positive floor and inflate the fitted coherence time.
FringeScan scan_fringe(const SimSystem& system, const ProtocolConfig& cfg,
                       const NoiseModel& noise,
                       const std::vector<double>& delays, bool echo,
                       std::uint64_t seed) {
    const double omega = cfg.drive_rabi_rad_s;
    const double det = cfg.ramsey_detuning_rad_s;
    // The echo sequence cancels the frozen detuning, so a small diffusion
    // ensemble (pulse-fidelity spread only) is enough.
    const std::size_t ns_requested =
        echo ? std::min<std::size_t>(cfg.noise_samples, 64)
             : cfg.noise_samples;
    const std::size_t ns =
        noise.sigma_rad_s > 0.0 ? std::max<std::size_t>(ns_requested, 1) : 1;
    // Each point of a real scan integrates over many diffusion correlation
    // times, so the ensemble is drawn effectively independently: sample the
    // path at ten correlation times per step. Every delay gets its own
    // ensemble; a shared one would tilt the whole curve by the draw's
    // sample variance and the fit could not average that away.
    OuPath path = sample_ou(
        noise, 10.0 * noise.tau_c_s, ns * delays.size(),
        rng::derive_seed(seed, echo ? "echo-ou" : "ramsey-ou"));
    const Eigen::MatrixXcd rho0 =
        pure_state(system.levels, cfg.initial_level);
    const double phases[4] = {0.0, 0.5 * units::pi, units::pi,
                              1.5 * units::pi};

    std::vector<std::vector<cd>> samples(delays.size(),
                                         std::vector<cd>(ns));
    EvolveOptions opt;
    opt.record_boundaries = false;
    opt.tol = 1e-8; // curve-level accuracy ~1e-4; tighter only burns steps

    for (std::size_t d = 0; d < delays.size(); ++d) {
        const double tau = delays[d];
        for (std::size_t i = 0; i < ns; ++i) {
            opt.static_detuning_rad_s = path.values[d * ns + i];
            double p[4];
            for (int k = 0; k < 4; ++k) {
                PulseSequence seq;
                seq.half_pi_pulse("A", omega, 0.0, det);
                if (echo) {
                    seq.delay(0.5 * tau);
                    seq.pi_pulse("A", omega, 0.0, det);
                    seq.delay(0.5 * tau);
                } else {
                    seq.delay(tau);
                }
                seq.half_pi_pulse("A", omega, phases[k], det);
                const EvolveResult ev =
                    evolve(rho0, system.levels, system.rates, seq, noise,
                           nullptr, opt);
                p[k] = excited_population(system, ev.final_rho);
            }
            samples[d][i] = cd(0.5 * (p[0] - p[2]), 0.5 * (p[1] - p[3]));
        }
    }

    // Demodulation: the fringe rotates at the drive detuning over the
    // free-evolution delay (not at all for echo). The rotation sign and
    // the delay-independent pulse-edge phase are pooled from the data.
    const double mod = echo ? 0.0 : det;
    cd pool_plus = 0.0, pool_minus = 0.0;
    for (std::size_t d = 0; d < delays.size(); ++d) {
        cd mean = 0.0;
        for (const cd& z : samples[d]) mean += z;
        mean /= static_cast<double>(ns);
        pool_plus += mean * std::exp(cd(0.0, -mod * delays[d]));
        pool_minus += mean * std::exp(cd(0.0, mod * delays[d]));
    }
    const double sign = std::abs(pool_plus) >= std::abs(pool_minus) ? 1.0
                                                                    : -1.0;
    const cd pool = sign > 0.0 ? pool_plus : pool_minus;
    const cd carrier = std::abs(pool) > 0.0 ? pool / std::abs(pool) : cd(1.0);

    FringeScan scan;
    scan.delays = delays;
    scan.contrast.resize(delays.size());
    scan.err.resize(delays.size());
    for (std::size_t d = 0; d < delays.size(); ++d) {
        const cd rotor =
            std::exp(cd(0.0, -sign * mod * delays[d])) / carrier;
        double mean = 0.0, sq = 0.0;
        for (const cd& z : samples[d]) {
            const double w = 2.0 * (z * rotor).real();
            mean += w;
            sq += w * w;
        }
        mean /= static_cast<double>(ns);
        scan.contrast[d] = mean;
        if (ns > 1) {
            const double var =
                (sq - ns * mean * mean) / static_cast<double>(ns - 1);
            scan.err[d] = std::sqrt(std::max(var, 0.0) /
                                    static_cast<double>(ns));
        }
    }
    return scan;
}

FitResult fit_envelope(const std::string& model, const FringeScan& scan) {
    std::vector<double> sigma;
    const bool weighted =
        std::all_of(scan.err.begin(), scan.err.end(),
                    [](double e) { return e > 0.0; });
    if (weighted) {
        sigma = scan.err;
        // The zero-delay point is nearly deterministic; keep its weight
        // finite so it pins the amplitude without swamping the rest.
        for (double& s : sigma) s = std::max(s, 1e-4);
    }
    if (model == "gaussian") {
        return fit_gaussian_envelope(scan.delays, scan.contrast, sigma);
    }
    return fit_exponential_envelope(scan.delays, scan.contrast, sigma);
}

ProtocolResult coherence_protocol(const SimSystem& system,
                                  const ProtocolConfig& cfg, bool echo,
                                  std::uint64_t seed) {
    cfg.validate();
    const std::vector<double>& user =
        echo ? cfg.echo_delays_s : cfg.ramsey_delays_s;
    // Default spans sized by what the configured noise model predicts.
    double t_expected;
    if (echo) {
        t_expected = system.noise.gamma_phi_per_s > 0.0
                         ? 2.0 / system.noise.gamma_phi_per_s
                         : 330e-9;
    } else {
        t_expected = system.noise.sigma_rad_s > 0.0
                         ? std::sqrt(2.0) / system.noise.sigma_rad_s
                         : 69e-9;
    }
    const std::vector<double> delays =
        user.empty() ? linspace(0.0, 2.0 * t_expected, 21) : user;

    const FringeScan scan =
        scan_fringe(system, cfg, system.noise, delays, echo, seed);
    ProtocolResult res;
    res.name = echo ? "echo" : "ramsey";
    res.x_label = "delay_s";
    res.y_label = "contrast";
    for (std::size_t i = 0; i < delays.size(); ++i) {
        res.curve.push_back({delays[i], scan.contrast[i], scan.err[i]});
    }
    res.fit = fit_envelope(echo ? cfg.echo_fit : cfg.ramsey_fit, scan);
    const double t_coh = res.fit.param("T");
    if (echo) {
        res.derived["t2_s"] = t_coh;
        res.derived["t2_err_s"] = res.fit.error("T");
    } else {
        res.derived["t2_star_s"] = t_coh;
        res.derived["t2_star_err_s"] = res.fit.error("T");
        res.derived["linewidth_MHz"] = 1.0 / (units::pi * t_coh) / 1e6;
    }
    res.derived["contrast_at_zero"] = scan.contrast.front();
    return res;
}

} // namespace

SimSystem make_system(const LevelConfig& levels, const CavityMode& cavity,
                      const IonSite& site, const NoiseModel& noise,
                      const DetectionChain& chain) {
    cavity.validate();
    site.validate();
    noise.validate();
    chain.validate();
    SimSystem system{LevelSystem::build(levels), cavity, site, noise, chain,
                     DecayRates{}};
    system.rates = enhanced_decay(system.levels, site, cavity);
    return system;
}

void ProtocolConfig::validate() const {
    if (readout_pulses < 1) {
        throw config_error("protocol: readout_pulses must be >= 1");
    }
    if (!(repetition_period_s > 0.0)) {
        throw config_error("protocol: repetition period must be > 0");
    }
    if (shots < 1) throw config_error("protocol: shots must be >= 1");
    if (noise_samples < 1) {
        throw config_error("protocol: noise_samples must be >= 1");
    }
    if (!(drive_rabi_rad_s > 0.0)) {
        throw config_error("protocol: drive Rabi rate must be > 0");
    }
    if (pump_rabi_rad_s < 0.0) {
        throw config_error("protocol: pump Rabi rate must be >= 0");
    }
    if (pump_pulses < 1) {
        throw config_error("protocol: pump_pulses must be >= 1");
    }
    if (lifetime_bin_count < 4) {
        throw config_error("protocol: lifetime_bin_count must be >= 4");
    }
    if (lifetime_window_s < 0.0) {
        throw config_error("protocol: lifetime window must be >= 0");
    }
    require_fit_name(ramsey_fit, "ramsey");
    require_fit_name(echo_fit, "echo");
    require_grid(rabi_durations_s, "rabi durations");
    require_grid(ramsey_delays_s, "ramsey delays");
    require_grid(echo_delays_s, "echo delays");
    require_grid(pump_freq_GHz, "pump frequencies");
}

ProtocolResult run_lifetime(const SimSystem& system, const ProtocolConfig& cfg,
                            std::uint64_t seed) {
    cfg.validate();
    const double tau_expected = system.rates.tau;
    const double window = cfg.lifetime_window_s > 0.0 ? cfg.lifetime_window_s
                                                      : 5.0 * tau_expected;
    if (window < 3.0 * tau_expected) {
        throw config_error(
            "lifetime: window must span at least 3 expected lifetimes");
    }
    const double pulse = units::pi / cfg.drive_rabi_rad_s;
    PulseSequence seq;
    seq.repetition_period_s =
        std::max(cfg.repetition_period_s, pulse + window);
    seq.pi_pulse("A", cfg.drive_rabi_rad_s).window(window);

    PhotonRunConfig rc;
    rc.shots = cfg.shots;
    rc.initial_level = cfg.initial_level;
    rc.chain = system.chain;
    rc.compute_g2 = false;
    const PhotonRun run = run_photon_shots(
        system.levels, {EmitterSpec{system.rates, 0.0}}, seq, system.noise,
        rc, rng::derive_seed(seed, "lifetime"));

    const int nbins = cfg.lifetime_bin_count;
    const double bin = window / nbins;
    std::vector<double> centers(static_cast<std::size_t>(nbins));
    std::vector<double> counts(static_cast<std::size_t>(nbins), 0.0);
    for (int i = 0; i < nbins; ++i) {
        centers[static_cast<std::size_t>(i)] = (i + 0.5) * bin;
    }
    for (const auto& shot : run.record.shot_times) {
        for (double t : shot) {
            const double since_pulse = t - pulse;
            if (since_pulse < 0.0 || since_pulse >= window) continue;
            ++counts[static_cast<std::size_t>(since_pulse / bin)];
        }
    }
    // Two-pass fit: weighting by observed counts biases tau low (empty
    // tail bins get full weight at zero), so take Poisson sigmas from the
    // first-pass model instead.
    const FitResult first = fit_exponential_decay(centers, counts, {});
    std::vector<double> sigma(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double model =
            first.param("amplitude") * std::exp(-centers[i] / first.param("tau")) +
            first.param("offset");
        sigma[i] = std::sqrt(std::max(model, 1.0));
    }

    ProtocolResult res;
    res.name = "lifetime";
    res.x_label = "time_s";
    res.y_label = "counts";
    for (std::size_t i = 0; i < counts.size(); ++i) {
        res.curve.push_back({centers[i], counts[i], sigma[i]});
    }
    res.fit = fit_exponential_decay(centers, counts, sigma);
    res.derived["tau_s"] = res.fit.param("tau");
    res.derived["tau_err_s"] = res.fit.error("tau");
    res.derived["gamma_per_s"] = 1.0 / res.fit.param("tau");
    res.derived["tau_model_s"] = tau_expected;
    res.derived["mean_detected_per_shot"] = run.mean_detected_per_period;
    return res;
}

ProtocolResult run_pump_probe(const SimSystem& system,
                              const ProtocolConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (!system.levels.has_transition("C")) {
        throw config_error("pump-probe: level system has no C transition");
    }
    const double f_C = system.levels.transition("C").frequency_GHz;
    const std::vector<double> grid = [&] {
        if (!cfg.pump_freq_GHz.empty()) return cfg.pump_freq_GHz;
        std::vector<double> g = linspace(-0.012, 0.012, 49);
        for (double& f : g) f += f_C;
        return g;
    }();

    const double tau = system.rates.tau;
    const double relax = 5.0 * tau;
    const double pump_dur =
        cfg.pump_rabi_rad_s > 0.0 ? units::pi / cfg.pump_rabi_rad_s : 0.0;
    const double probe_window = 5.0 * tau;
    const Eigen::MatrixXcd rho0 = thermal_ground_state(system.levels);
    const double p_g1_init =
        rho0(system.levels.lower_index_A(), system.levels.lower_index_A())
            .real();

    // Spectral diffusion broadens the pump line; a short average suffices
    // for this qualitative scan.
    const std::size_t ns =
        system.noise.sigma_rad_s > 0.0
            ? std::min<std::size_t>(std::max<std::size_t>(cfg.noise_samples, 1),
                                    16)
            : 1;
    const OuPath path = sample_ou(system.noise, cfg.repetition_period_s, ns,
                                  rng::derive_seed(seed, "pump-ou"));
    const double scale = static_cast<double>(cfg.shots) *
                         system.chain.total_efficiency();

    ProtocolResult res;
    res.name = "pump-probe";
    res.x_label = "pump_freq_GHz";
    res.y_label = "counts";
    EvolveOptions opt;
    opt.record_boundaries = false;
    opt.tol = 1e-8;
    double peak = 0.0, peak_freq = grid.front();
    for (double f : grid) {
        const double det = (f - f_C) * units::two_pi * 1e9;
        double mean = 0.0;
        for (std::size_t i = 0; i < ns; ++i) {
            opt.static_detuning_rad_s = path.values[i];
            PulseSequence seq;
            for (int p = 0; p < cfg.pump_pulses && pump_dur > 0.0; ++p) {
                seq.drive("C", cfg.pump_rabi_rad_s, pump_dur, 0.0, det);
                seq.delay(relax);
            }
            seq.pi_pulse("A", cfg.drive_rabi_rad_s);
            seq.window(probe_window);
            const EvolveResult ev = evolve(rho0, system.levels, system.rates,
                                           seq, system.noise, nullptr, opt);
            mean += ev.window_emission_A.back();
        }
        mean /= static_cast<double>(ns);
        const double counts = scale * mean;
        res.curve.push_back({f, counts, std::sqrt(std::max(counts, 1.0))});
        if (counts > peak) {
            peak = counts;
            peak_freq = f;
        }
    }
    const double baseline =
        std::min(res.curve.front().y, res.curve.back().y);
    const double p_transfer =
        system.rates.rate_A / (system.rates.rate_A + system.rates.rate_aux);
    res.derived["peak_freq_GHz"] = peak_freq;
    res.derived["peak_counts"] = peak;
    res.derived["baseline_counts"] = baseline;
    res.derived["contrast_ratio"] = baseline > 0.0 ? peak / baseline : 0.0;
    // Rate-model fixed point: pumping empties g0 into g1 and the shelf in
    // proportion to their decay rates, with g0 recycling cancelling out.
    res.derived["rate_model_ratio"] =
        (p_g1_init + (1.0 - p_g1_init -
                      (system.levels.shelf_index() >= 0
                           ? rho0(system.levels.shelf_index(),
                                  system.levels.shelf_index())
                                 .real()
                           : 0.0)) *
                         p_transfer) /
        p_g1_init;
    return res;
}

ProtocolResult run_rabi(const SimSystem& system, const ProtocolConfig& cfg,
                        std::uint64_t seed) {
    (void)seed; // expectation-value protocol; no sampling
    cfg.validate();
    const double omega = cfg.drive_rabi_rad_s;
    const std::vector<double> grid =
        cfg.rabi_durations_s.empty()
            ? linspace(0.0, 2.5 * units::two_pi / omega, 51)
            : cfg.rabi_durations_s;
    // Each readout pulse must see a relaxed ion or later pulses would
    // coherently de-excite leftover population; stretch the pulse spacing
    // to five lifetimes when the shot clock is too fast for this ion.
    const double t_relax =
        std::max(cfg.repetition_period_s, 5.0 * system.rates.tau);
    const Eigen::MatrixXcd rho0 =
        pure_state(system.levels, cfg.initial_level);
    const double scale = static_cast<double>(cfg.shots) *
                         system.chain.total_efficiency();

    ProtocolResult res;
    res.name = "rabi";
    res.x_label = "pulse_duration_s";
    res.y_label = "counts";
    EvolveOptions opt;
    opt.record_boundaries = false;
    double peak_emitted = 0.0;
    for (double t_d : grid) {
        if (t_d >= t_relax) {
            throw config_error("rabi: pulse duration exceeds pulse spacing");
        }
        PulseSequence seq;
        seq.repetitions = cfg.readout_pulses;
        seq.repetition_period_s = t_relax;
        seq.drive("A", omega, t_d).window(t_relax - t_d);
        const EvolveResult ev = evolve(rho0, system.levels, system.rates, seq,
                                       system.noise, nullptr, opt);
        const double emitted = ev.total_emission_A; // photons per train
        peak_emitted = std::max(peak_emitted, emitted);
        const double counts = scale * emitted;
        res.curve.push_back({t_d, counts, std::sqrt(std::max(counts, 1.0))});
    }
    res.derived["peak_emitted_per_train"] = peak_emitted;
    res.derived["cyclicity_budget"] =
        transition_cyclicity(system.levels, system.rates.f_eff);
    res.derived["counts_to_emitted_scale"] = 1.0 / scale;
    res.derived["rabi_period_s"] = units::two_pi / omega;
    return res;
}

ProtocolResult run_ramsey(const SimSystem& system, const ProtocolConfig& cfg,
                          std::uint64_t seed) {
    return coherence_protocol(system, cfg, false, seed);
}

ProtocolResult run_echo(const SimSystem& system, const ProtocolConfig& cfg,
                        std::uint64_t seed) {
    return coherence_protocol(system, cfg, true, seed);
}

NoiseModel calibrate_noise(const SimSystem& system, const ProtocolConfig& cfg,
                           const CalibrationTargets& targets,
                           std::uint64_t seed, CalibrationReport* report) {
    cfg.validate();
    if (!(targets.t2_star_s > 0.0) || !(targets.t2_s > 0.0) ||
        !(targets.tau_c_s > 0.0)) {
        throw config_error("calibrate: targets must be positive");
    }
    if (targets.t2_s < targets.t2_star_s * (1.0 - 1e-12)) {
        throw config_error("calibrate: T2 must be >= T2*");
    }
    if (targets.max_iterations < 1 || !(targets.tolerance > 0.0)) {
        throw config_error("calibrate: bad iteration cap or tolerance");
    }

    // With T2 = T2* the Markovian dephasing explains everything and the
    // quasi-static component collapses to zero.
    const bool markovian = targets.t2_s <= 1.02 * targets.t2_star_s;
    NoiseModel nm;
    nm.tau_c_s = targets.tau_c_s;
    nm.sigma_rad_s = markovian ? 0.0 : std::sqrt(2.0) / targets.t2_star_s;
    nm.gamma_phi_per_s = 2.0 / targets.t2_s;

    const std::vector<double> rdelays =
        cfg.ramsey_delays_s.empty()
            ? linspace(0.0, 2.0 * targets.t2_star_s, 21)
            : cfg.ramsey_delays_s;
    const std::vector<double> edelays =
        cfg.echo_delays_s.empty() ? linspace(0.0, 2.0 * targets.t2_s, 21)
                                  : cfg.echo_delays_s;
    const std::string ramsey_model = markovian ? "exponential" : cfg.ramsey_fit;

    auto measure = [&](const NoiseModel& candidate, double& t2_star,
                       double& t2) {
        const FringeScan rs = scan_fringe(system, cfg, candidate, rdelays,
                                          false, rng::derive_seed(seed, "cal-r"));
        t2_star = fit_envelope(ramsey_model, rs).param("T");
        const FringeScan es = scan_fringe(system, cfg, candidate, edelays,
                                          true, rng::derive_seed(seed, "cal-e"));
        t2 = fit_envelope(cfg.echo_fit, es).param("T");
    };

    double t2_star_sim = 0.0, t2_sim = 0.0;
    int iter = 0;
    for (; iter < targets.max_iterations; ++iter) {
        measure(nm, t2_star_sim, t2_sim);
        const double r_star = t2_star_sim / targets.t2_star_s;
        const double r_echo = t2_sim / targets.t2_s;
        if (std::abs(r_star - 1.0) < 0.02 && std::abs(r_echo - 1.0) < 0.02) {
            break;
        }
        if (!markovian) nm.sigma_rad_s *= r_star;
        nm.gamma_phi_per_s *= r_echo;
    }

    measure(nm, t2_star_sim, t2_sim);
    if (report) {
        report->iterations = iter + 1;
        report->t2_star_sim_s = t2_star_sim;
        report->t2_sim_s = t2_sim;
        report->model = nm;
    }
    if (std::abs(t2_star_sim / targets.t2_star_s - 1.0) > targets.tolerance ||
        std::abs(t2_sim / targets.t2_s - 1.0) > targets.tolerance) {
        throw numerical_error(
            "calibrate: no convergence to targets after " +
            std::to_string(targets.max_iterations) + " iterations");
    }
    return nm;
}

} // namespace ybcav
