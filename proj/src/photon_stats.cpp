#include "ybcav/photon_stats.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "ybcav/detail/dp54.hpp"
#include "ybcav/errors.hpp"

namespace ybcav {

namespace {

using cd = std::complex<double>;

double norm2(const Eigen::VectorXcd& psi) { return psi.squaredNorm(); }

/// True when the dephasing channel can change psi. For an eigenstate of
/// the dephasing operator (support on u only, on l only, or on neither)
/// the jump is the identity, so channel and damping can be dropped exactly.
bool dephase_acts(const Generator& gen, const Eigen::VectorXcd& psi) {
    if (gen.dephase_coeff() <= 0.0) return false;
    const double pu = std::norm(psi[gen.dephase_upper()]);
    const double pl = std::norm(psi[gen.dephase_lower()]);
    const double rest = psi.squaredNorm() - pu - pl;
    const double tiny = 1e-28 * psi.squaredNorm();
    return !((pu <= tiny && pl <= tiny) || (pu <= tiny && rest <= tiny) ||
             (pl <= tiny && rest <= tiny));
}

/// Per-level norm-squared decay rates (diagonal of sum L^dag L).
Eigen::VectorXd damping_rates(const Generator& gen, bool with_dephase) {
    Eigen::VectorXd damp = Eigen::VectorXd::Zero(gen.dim());
    for (const auto& ch : gen.decay_channels()) damp[ch.from] += ch.rate;
    const double c = gen.dephase_coeff();
    if (with_dephase && c > 0.0) {
        damp[gen.dephase_upper()] += c * c;
        damp[gen.dephase_lower()] += c * c;
    }
    return damp;
}

struct JumpOutcome {
    bool is_A = false;
    bool is_shelf = false;
    bool is_dephase = false;
};

/// Collapses psi according to the jump weights at the current amplitudes.
JumpOutcome apply_jump(const LevelSystem& levels, const Generator& gen,
                       Eigen::VectorXcd& psi, rng::Generator& rng,
                       bool dephase_active) {
    struct Option {
        double weight;
        int kind; // 0 = decay channel index k, 1 = dephase
        std::size_t index;
    };
    std::vector<Option> options;
    double total = 0.0;
    const auto& channels = gen.decay_channels();
    for (std::size_t k = 0; k < channels.size(); ++k) {
        const double w = channels[k].rate * std::norm(psi[channels[k].from]);
        if (w > 0.0) {
            options.push_back({w, 0, k});
            total += w;
        }
    }
    const double c = gen.dephase_coeff();
    if (dephase_active && c > 0.0) {
        const double w = c * c * (std::norm(psi[gen.dephase_upper()]) +
                                  std::norm(psi[gen.dephase_lower()]));
        if (w > 0.0) {
            options.push_back({w, 1, 0});
            total += w;
        }
    }
    if (options.empty() || total <= 0.0) {
        throw numerical_error("jump trajectory: jump fired with zero weight");
    }
    double pick = rng.uniform() * total;
    const Option* chosen = &options.back();
    for (const auto& opt : options) {
        pick -= opt.weight;
        if (pick <= 0.0) {
            chosen = &opt;
            break;
        }
    }

    JumpOutcome out;
    if (chosen->kind == 0) {
        const auto& ch = channels[chosen->index];
        psi.setZero();
        psi[ch.to] = 1.0;
        out.is_A = ch.is_A;
        out.is_shelf = (!ch.is_A && ch.to == levels.shelf_index());
    } else {
        Eigen::VectorXcd next = Eigen::VectorXcd::Zero(psi.size());
        next[gen.dephase_upper()] = psi[gen.dephase_upper()];
        next[gen.dephase_lower()] = -psi[gen.dephase_lower()];
        psi = next / next.norm();
        out.is_dephase = true;
    }
    return out;
}

void record_jump(const JumpOutcome& o, double t, TrajectoryResult& res) {
    if (o.is_A) {
        res.emission_times_A.push_back(t);
        ++res.jumps_A;
    } else if (o.is_shelf) {
        ++res.jumps_shelf;
    } else if (o.is_dephase) {
        ++res.jumps_dephase;
    } else {
        ++res.jumps_C;
    }
}

/// Drive-free stretch: every amplitude evolves as
/// psi_j(t) = psi_j(0) exp(-(i E_j + damp_j / 2) t), so the squared norm is
/// a sum of decaying exponentials and the jump time is found by bisection.
void run_diagonal_segment(const LevelSystem& levels, const Generator& gen,
                          Eigen::VectorXcd& psi, double& threshold,
                          double t_start, double duration,
                          rng::Generator& rng, TrajectoryResult& res) {
    const int d = static_cast<int>(psi.size());
    double t_local = 0.0;
    while (t_local < duration) {
        const bool dephase_active = dephase_acts(gen, psi);
        const Eigen::VectorXd damp = damping_rates(gen, dephase_active);
        const double remaining = duration - t_local;
        auto norm2_at = [&](double t) {
            double sum = 0.0;
            for (int j = 0; j < d; ++j) {
                sum += std::norm(psi[j]) * std::exp(-damp[j] * t);
            }
            return sum;
        };
        auto advance_to = [&](double t) {
            for (int j = 0; j < d; ++j) {
                const double phase = -gen.hamiltonian_base()(j, j).real() * t;
                psi[j] *= std::exp(cd(-0.5 * damp[j] * t, phase));
            }
        };
        if (norm2_at(remaining) >= threshold) {
            advance_to(remaining);
            t_local = duration;
            break;
        }
        // bisect the jump time; norm2_at is strictly decreasing here
        double lo = 0.0, hi = remaining;
        for (int it = 0; it < 64; ++it) {
            const double mid = 0.5 * (lo + hi);
            (norm2_at(mid) > threshold ? lo : hi) = mid;
        }
        const double t_jump = 0.5 * (lo + hi);
        advance_to(t_jump);
        t_local += t_jump;
        const JumpOutcome o = apply_jump(levels, gen, psi, rng, dephase_active);
        record_jump(o, t_start + t_local, res);
        threshold = rng.uniform_positive();
    }
}

struct PsiStepper {
    Eigen::MatrixXcd heff; // includes -i/2 sum L^dag L on the diagonal
    Eigen::VectorXcd k1, k2, k3, k4, k5, k6, k7, ytmp;

    void deriv(const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
        dy.noalias() = cd(0.0, -1.0) * (heff * y);
    }

    // One adaptive trial step; returns the scaled error norm.
    double trial(const Eigen::VectorXcd& y, double h, double rtol, double atol,
                 Eigen::VectorXcd& y5) {
        using namespace dp54;
        deriv(y, k1);
        ytmp = y + h * (a21 * k1);
        deriv(ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        deriv(ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        deriv(ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        deriv(ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        deriv(ytmp, k6);
        y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        deriv(y5, k7);
        const Eigen::VectorXcd err =
            h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < err.size(); ++i) {
            const double scale =
                atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
            const double r = std::abs(err[i]) / scale;
            sum += r * r;
        }
        return std::sqrt(sum / static_cast<double>(err.size()));
    }

    // Advances psi by exactly `span` with adaptive sub-steps.
    void advance(Eigen::VectorXcd& psi, double span, double rtol, double atol) {
        double t = 0.0;
        double h = span;
        Eigen::VectorXcd y5;
        while (t < span) {
            h = std::min(h, span - t);
            if (!(h > 1e-22)) break;
            const double err = trial(psi, h, rtol, atol, y5);
            if (err <= 1.0) {
                psi = y5;
                t += h;
            }
            h *= std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2,
                            5.0);
        }
    }
};

/// Driven stretch: integrate the non-Hermitian Schroedinger equation,
/// watching for the norm to cross the jump threshold.
void run_driven_segment(const LevelSystem& levels, const Generator& gen,
                        Eigen::VectorXcd& psi, double& threshold,
                        double t_start, double duration, rng::Generator& rng,
                        const JumpOptions& opt, TrajectoryResult& res) {
    const double atol = std::max(1e-14, 1e-3 * opt.tol);
    PsiStepper st;
    st.heff = gen.hamiltonian_base();
    {
        const Eigen::VectorXd damp = damping_rates(gen, true);
        for (int j = 0; j < gen.dim(); ++j) {
            st.heff(j, j) -= cd(0.0, 0.5 * damp[j]);
        }
    }
    double t_local = 0.0;
    double h = duration * 1e-2;
    Eigen::VectorXcd y5;
    while (t_local < duration * (1.0 - 1e-15)) {
        h = std::min(h, duration - t_local);
        if (!(h > 1e-20)) {
            throw numerical_error("jump trajectory: step underflow in drive");
        }
        const double err = st.trial(psi, h, opt.tol, atol, y5);
        if (err > 1.0) {
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            continue;
        }
        if (norm2(y5) >= threshold) {
            psi = y5;
            t_local += h;
            h *= std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2,
                            5.0);
            continue;
        }
        // jump inside (t_local, t_local + h]: bisect on the sub-span
        double lo = 0.0, hi = h;
        Eigen::VectorXcd at_lo = psi;
        for (int it = 0; it < 48 && (hi - lo) > 1e-18; ++it) {
            const double mid = 0.5 * (lo + hi);
            Eigen::VectorXcd trial_psi = at_lo;
            st.advance(trial_psi, mid - lo, opt.tol, atol);
            if (norm2(trial_psi) > threshold) {
                lo = mid;
                at_lo = trial_psi;
            } else {
                hi = mid;
            }
        }
        st.advance(at_lo, 0.5 * (lo + hi) - lo, opt.tol, atol);
        psi = at_lo;
        t_local += 0.5 * (lo + hi);
        const JumpOutcome o = apply_jump(levels, gen, psi, rng, true);
        record_jump(o, t_start + t_local, res);
        threshold = rng.uniform_positive();
    }
}

} // namespace

void DetectionChain::validate() const {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(grating_efficiency) || !in01(splitter_fraction) ||
        !in01(detector_efficiency) || !in01(extra_loss)) {
        throw config_error("detection: efficiencies and losses must lie in [0, 1]");
    }
    if (background_rate_per_s < 0.0 || dark_rate_per_s < 0.0) {
        throw config_error("detection: count rates must be >= 0");
    }
    if (dead_time_s < 0.0) {
        throw config_error("detection: dead time must be >= 0");
    }
}

std::vector<long> PhotonRecord::counts_per_period() const {
    std::vector<long> counts(shot_times.size());
    for (std::size_t i = 0; i < shot_times.size(); ++i) {
        counts[i] = static_cast<long>(shot_times[i].size());
    }
    return counts;
}

std::vector<double> PhotonRecord::merged_times() const {
    std::vector<double> merged;
    for (std::size_t i = 0; i < shot_times.size(); ++i) {
        const double offset = static_cast<double>(i) * repetition_period_s;
        for (double t : shot_times[i]) merged.push_back(offset + t);
    }
    return merged;
}

TrajectoryResult jump_trajectory(const LevelSystem& levels,
                                 const DecayRates& rates,
                                 const PulseSequence& sequence,
                                 const NoiseModel& noise,
                                 double static_detuning_rad_s,
                                 const std::string& initial_level,
                                 rng::Generator& gen,
                                 const JumpOptions& options) {
    sequence.validate(levels);
    noise.validate();
    const int d = levels.dim();
    TrajectoryResult res;
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d);
    psi[levels.index_of(initial_level)] = 1.0;

    double threshold = gen.uniform_positive();
    FrameContext frame;
    double t = 0.0;
    const double seg_sum = sequence.duration_s() / sequence.repetitions;

    auto run_segment = [&](const Segment& segment) {
        const Generator g = build_generator(levels, rates, segment,
                                            static_detuning_rad_s, noise, frame);
        const double duration = segment_duration(segment);
        if (duration <= 0.0) return;
        if (std::holds_alternative<DrivePulse>(segment)) {
            run_driven_segment(levels, g, psi, threshold, t, duration, gen,
                               options, res);
        } else {
            run_diagonal_segment(levels, g, psi, threshold, t, duration, gen,
                                 res);
        }
        t += duration;
    };

    for (int rep = 0; rep < sequence.repetitions; ++rep) {
        for (const Segment& segment : sequence.segments) run_segment(segment);
        if (rep + 1 < sequence.repetitions &&
            sequence.repetition_period_s > seg_sum) {
            run_segment(Delay{sequence.repetition_period_s - seg_sum});
        }
    }
    res.final_state = psi / psi.norm();
    return res;
}

G2Histogram g2_pulsed(const std::vector<long>& counts, double period_s,
                      int max_lag, int far_lag_min) {
    const long n = static_cast<long>(counts.size());
    if (max_lag < 1 || far_lag_min < 1 || far_lag_min > max_lag) {
        throw config_error("g2: need 1 <= far_lag_min <= max_lag");
    }
    if (n <= max_lag) {
        throw config_error("g2: fewer periods than max_lag");
    }
    G2Histogram h;
    const int nbins = max_lag + 1;
    h.lag.resize(nbins);
    h.bin_left_s.resize(nbins);
    h.bin_right_s.resize(nbins);
    h.pairs.resize(nbins);
    h.area.resize(nbins);
    // zero lag: ordered pairs within a period, i.e. sum n_i (n_i - 1)
    double a0 = 0.0;
    for (long c : counts) a0 += static_cast<double>(c) * (c - 1);
    h.pairs[0] = a0;
    h.area[0] = a0 / static_cast<double>(n);
    for (int m = 1; m <= max_lag; ++m) {
        double am = 0.0;
        for (long i = 0; i + m < n; ++i) {
            am += static_cast<double>(counts[i]) * counts[i + m];
        }
        h.pairs[m] = am;
        h.area[m] = am / static_cast<double>(n - m);
    }
    for (int m = 0; m <= max_lag; ++m) {
        h.lag[m] = m;
        h.bin_left_s[m] = (m - 0.5) * period_s;
        h.bin_right_s[m] = (m + 0.5) * period_s;
    }
    double norm = 0.0;
    for (int m = far_lag_min; m <= max_lag; ++m) norm += h.area[m];
    norm /= static_cast<double>(max_lag - far_lag_min + 1);
    if (!(norm > 0.0)) {
        throw numerical_error(
            "g2: insufficient statistics, no far-lag coincidences");
    }
    h.norm_area = norm;
    h.normalized.resize(nbins);
    h.g2_error.resize(nbins);
    for (int m = 0; m <= max_lag; ++m) {
        h.normalized[m] = h.area[m] / norm;
        h.g2_error[m] =
            h.pairs[m] > 0.0 ? h.normalized[m] / std::sqrt(h.pairs[m]) : 0.0;
    }
    h.zero_lag = h.normalized[0];
    return h;
}

G2Histogram g2_pulsed(const PhotonRecord& record, int max_lag,
                      int far_lag_min) {
    return g2_pulsed(record.counts_per_period(), record.repetition_period_s,
                     max_lag, far_lag_min);
}

std::vector<std::pair<double, double>>
window_gates(const PulseSequence& sequence) {
    std::vector<std::pair<double, double>> gates;
    double t = 0.0;
    for (const Segment& segment : sequence.segments) {
        const double dur = segment_duration(segment);
        if (std::holds_alternative<ReadoutWindow>(segment)) {
            gates.emplace_back(t, t + dur);
        }
        t += dur;
    }
    return gates;
}

PhotonRun run_photon_shots(const LevelSystem& levels,
                           const std::vector<EmitterSpec>& emitters,
                           const PulseSequence& sequence,
                           const NoiseModel& noise,
                           const PhotonRunConfig& config,
                           std::uint64_t master_seed) {
    if (emitters.empty()) {
        throw config_error("photon run: need at least one emitter");
    }
    if (config.shots < 1) {
        throw config_error("photon run: need at least one shot");
    }
    if (sequence.repetitions != 1) {
        throw config_error(
            "photon run: the shot loop replaces sequence repetitions");
    }
    sequence.validate(levels);
    noise.validate();
    config.chain.validate();
    const double period = sequence.repetition_period_s;
    if (sequence.duration_s() > period * (1.0 + 1e-12)) {
        throw config_error("photon run: sequence longer than its period");
    }

    PhotonRun out;
    std::vector<double> emitted;
    const std::size_t shots = config.shots;
    for (std::size_t e = 0; e < emitters.size(); ++e) {
        OuPath path;
        if (noise.sigma_rad_s > 0.0) {
            path = sample_ou(noise, period, shots,
                             rng::derive_seed(master_seed, "ou", e));
        }
        for (std::size_t s = 0; s < shots; ++s) {
            rng::Generator g(
                rng::derive_seed(master_seed, "shot", e * shots + s));
            const double delta = emitters[e].frequency_offset_rad_s +
                                 (path.empty() ? 0.0 : path.values[s]);
            TrajectoryResult tr =
                jump_trajectory(levels, emitters[e].rates, sequence, noise,
                                delta, config.initial_level, g, config.jump);
            const double offset = static_cast<double>(s) * period;
            for (double tj : tr.emission_times_A) {
                emitted.push_back(offset + tj);
            }
            out.jumps_A += tr.jumps_A;
            out.jumps_C += tr.jumps_C;
            out.jumps_shelf += tr.jumps_shelf;
            out.jumps_dephase += tr.jumps_dephase;
        }
    }
    out.mean_emitted_per_shot =
        static_cast<double>(emitted.size()) / static_cast<double>(shots);

    std::vector<double> clicks;
    clicks.reserve(emitted.size());
    {
        rng::Generator g(rng::derive_seed(master_seed, "detect"));
        const double eta = config.chain.total_efficiency();
        for (double t : emitted) {
            if (g.uniform() < eta) clicks.push_back(t);
        }
    }
    if (config.chain.background_rate_per_s > 0.0) {
        rng::Generator g(rng::derive_seed(master_seed, "background"));
        const auto gates = window_gates(sequence);
        for (std::size_t s = 0; s < shots; ++s) {
            for (const auto& [g0, g1] : gates) {
                const long n =
                    g.poisson(config.chain.background_rate_per_s * (g1 - g0));
                for (long k = 0; k < n; ++k) {
                    clicks.push_back(static_cast<double>(s) * period + g0 +
                                     g.uniform() * (g1 - g0));
                }
            }
        }
    }
    if (config.chain.dark_rate_per_s > 0.0) {
        rng::Generator g(rng::derive_seed(master_seed, "dark"));
        for (std::size_t s = 0; s < shots; ++s) {
            const long n = g.poisson(config.chain.dark_rate_per_s * period);
            for (long k = 0; k < n; ++k) {
                clicks.push_back((static_cast<double>(s) + g.uniform()) *
                                 period);
            }
        }
    }
    std::sort(clicks.begin(), clicks.end());

    out.record.repetition_period_s = period;
    out.record.shot_times.assign(shots, {});
    std::size_t accepted = 0;
    double last = -std::numeric_limits<double>::infinity();
    for (double t : clicks) {
        if (t - last < config.chain.dead_time_s) continue;
        last = t;
        ++accepted;
        auto idx = static_cast<long>(t / period);
        idx = std::clamp<long>(idx, 0, static_cast<long>(shots) - 1);
        out.record.shot_times[static_cast<std::size_t>(idx)].push_back(
            t - static_cast<double>(idx) * period);
    }
    out.mean_detected_per_period =
        static_cast<double>(accepted) / static_cast<double>(shots);
    if (config.compute_g2) {
        out.g2 = g2_pulsed(out.record, config.max_lag, config.far_lag_min);
    }
    return out;
}

} // namespace ybcav
