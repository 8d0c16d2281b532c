#include "ybcav/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "ybcav/detail/dp54.hpp"
#include "ybcav/errors.hpp"
#include "ybcav/rng.hpp"

namespace ybcav {

namespace {

using cd = std::complex<double>;

std::string segment_label(const Segment& segment, std::size_t index) {
    std::string kind;
    if (const auto* d = std::get_if<DrivePulse>(&segment)) {
        kind = "drive " + d->transition;
    } else if (std::holds_alternative<Delay>(segment)) {
        kind = "delay";
    } else {
        kind = "window";
    }
    return "segment " + std::to_string(index) + " (" + kind + ")";
}

} // namespace

Eigen::MatrixXcd Generator::rhs(const Eigen::Ref<const Eigen::MatrixXcd>& rho,
                                double noise_detuning_rad_s) const {
    Eigen::MatrixXcd out = cd(0.0, -1.0) * (h_base_ * rho - rho * h_base_);
    if (frame_upper_ >= 0 && noise_detuning_rad_s != 0.0) {
        // -i [delta |u><u|, rho]: touches only row and column u
        const cd idelta(0.0, noise_detuning_rad_s);
        out.row(frame_upper_) -= idelta * rho.row(frame_upper_);
        out.col(frame_upper_) += idelta * rho.col(frame_upper_);
    }
    for (const auto& ch : decays_) {
        out(ch.to, ch.to) += ch.rate * rho(ch.from, ch.from);
        out.row(ch.from) -= (0.5 * ch.rate) * rho.row(ch.from);
        out.col(ch.from) -= (0.5 * ch.rate) * rho.col(ch.from);
    }
    if (dephase_coeff_ > 0.0) {
        // L = c (|u><u| - |l><l|): element (i,j) damps at (c^2/2)(z_i-z_j)^2,
        // so the driven coherence decays at 2 c^2 = gamma_phi / 2.
        const double c2 = dephase_coeff_ * dephase_coeff_;
        const int d = dim();
        for (int j = 0; j < d; ++j) {
            const double zj =
                (j == dephase_upper_) ? 1.0 : (j == dephase_lower_ ? -1.0 : 0.0);
            for (int i = 0; i < d; ++i) {
                const double zi = (i == dephase_upper_)
                                      ? 1.0
                                      : (i == dephase_lower_ ? -1.0 : 0.0);
                const double diff = zi - zj;
                if (diff != 0.0) out(i, j) -= 0.5 * c2 * diff * diff * rho(i, j);
            }
        }
    }
    return out;
}

double Generator::emission_rate_A(
    const Eigen::Ref<const Eigen::MatrixXcd>& rho) const {
    if (emission_upper_ < 0) return 0.0;
    return rate_A_ * rho(emission_upper_, emission_upper_).real();
}

Generator build_generator(const LevelSystem& levels, const DecayRates& rates,
                          const Segment& segment, double static_detuning_rad_s,
                          const NoiseModel& noise, FrameContext& frame) {
    Generator g;
    const int d = levels.dim();
    g.h_base_ = Eigen::MatrixXcd::Zero(d, d);

    if (const auto* drive = std::get_if<DrivePulse>(&segment)) {
        if (!levels.has_transition(drive->transition)) {
            throw config_error("generator: unknown transition '" +
                               drive->transition + "'");
        }
        const Transition& tr = levels.transition(drive->transition);
        frame.upper = levels.index_of(tr.upper);
        frame.lower = levels.index_of(tr.lower);
        frame.detuning_rad_s = drive->detuning_rad_s;
        const cd coupling =
            0.5 * drive->rabi_rad_s * std::exp(cd(0.0, -drive->phase_rad));
        g.h_base_(frame.upper, frame.lower) = coupling;
        g.h_base_(frame.lower, frame.upper) = std::conj(coupling);
    }

    if (frame.upper >= 0) {
        // Laser detuning Delta lowers the framed upper level; a positive
        // spectral-diffusion shift of the ion raises it back.
        g.h_base_(frame.upper, frame.upper) =
            cd(-frame.detuning_rad_s + static_detuning_rad_s, 0.0);
        g.frame_upper_ = frame.upper;
        if (noise.gamma_phi_per_s > 0.0) {
            g.dephase_coeff_ = 0.5 * std::sqrt(noise.gamma_phi_per_s);
            g.dephase_upper_ = frame.upper;
            g.dephase_lower_ = frame.lower;
        }
    }

    const int upper = levels.upper_index();
    auto add_decay = [&](double rate, int to, bool is_A, const char* name) {
        if (rate <= 0.0) return;
        if (to < 0) {
            throw config_error(std::string("generator: nonzero ") + name +
                               " decay rate but no such level");
        }
        g.decays_.push_back(DecayChannel{upper, to, rate, is_A});
    };
    add_decay(rates.rate_A, levels.lower_index_A(), true, "A");
    add_decay(rates.rate_C, levels.lower_index_C(), false, "C");
    add_decay(rates.rate_aux, levels.shelf_index(), false, "shelving");
    g.emission_upper_ = upper;
    g.rate_A_ = rates.rate_A;
    return g;
}

namespace {

using namespace dp54;

struct Stepper {
    const Generator* gen = nullptr;
    const OuPath* trace = nullptr;
    int d = 0;
    Eigen::VectorXcd k1, k2, k3, k4, k5, k6, k7, ytmp;

    void deriv(const Eigen::VectorXcd& y, double delta, Eigen::VectorXcd& dy) {
        Eigen::Map<const Eigen::MatrixXcd> rho(y.data(), d, d);
        dy.resize(y.size());
        Eigen::Map<Eigen::MatrixXcd>(dy.data(), d, d) = gen->rhs(rho, delta);
        dy[y.size() - 1] = gen->emission_rate_A(rho);
    }
};

double error_norm(const Eigen::VectorXcd& err, const Eigen::VectorXcd& y0,
                  const Eigen::VectorXcd& y1, double rtol, double atol) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double scale =
            atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = std::abs(err[i]) / scale;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
}

void integrate_segment(Eigen::VectorXcd& y, double& t, double& h_hint,
                       Stepper& st, double t_end, const NoiseModel& noise,
                       const EvolveOptions& opt, EvolveResult& res,
                       const std::string& label) {
    const double duration = t_end - t;
    if (duration <= 0.0) return;
    const double atol = std::max(1e-14, 1e-3 * opt.tol);
    const int d = st.d;

    double h = (h_hint > 0.0) ? h_hint : 1e-3 * duration;
    while (t < t_end * (1.0 - 1e-15) && t < t_end) {
        double cap = t_end - t;
        if (opt.max_step_s > 0.0) cap = std::min(cap, opt.max_step_s);
        if (noise.sigma_rad_s > 0.0) cap = std::min(cap, noise.tau_c_s / 100.0);
        if (st.trace && !st.trace->empty()) {
            const double dt = st.trace->dt_s;
            double next = (std::floor(t / dt) + 1.0) * dt;
            if (next <= t + 1e-9 * dt) next += dt; // already at a boundary
            cap = std::min(cap, next - t);
        }
        h = std::min(h, cap);
        if (!(h > 1e-18) || h < 1e-14 * duration) {
            throw numerical_error("evolve: step size underflow in " + label);
        }
        const double delta =
            (st.trace && !st.trace->empty()) ? st.trace->at_time(t) : 0.0;

        st.deriv(y, delta, st.k1);
        st.ytmp = y + h * (a21 * st.k1);
        st.deriv(st.ytmp, delta, st.k2);
        st.ytmp = y + h * (a31 * st.k1 + a32 * st.k2);
        st.deriv(st.ytmp, delta, st.k3);
        st.ytmp = y + h * (a41 * st.k1 + a42 * st.k2 + a43 * st.k3);
        st.deriv(st.ytmp, delta, st.k4);
        st.ytmp = y + h * (a51 * st.k1 + a52 * st.k2 + a53 * st.k3 + a54 * st.k4);
        st.deriv(st.ytmp, delta, st.k5);
        st.ytmp = y + h * (a61 * st.k1 + a62 * st.k2 + a63 * st.k3 +
                           a64 * st.k4 + a65 * st.k5);
        st.deriv(st.ytmp, delta, st.k6);
        st.ytmp = y + h * (b1 * st.k1 + b3 * st.k3 + b4 * st.k4 + b5 * st.k5 +
                           b6 * st.k6);
        st.deriv(st.ytmp, delta, st.k7);

        const Eigen::VectorXcd err =
            h * (e1 * st.k1 + e3 * st.k3 + e4 * st.k4 + e5 * st.k5 +
                 e6 * st.k6 + e7 * st.k7);
        const double err_norm = error_norm(err, y, st.ytmp, opt.tol, atol);

        if (err_norm <= 1.0) {
            t += h;
            y = st.ytmp;
            // Hermiticity is preserved analytically; pin it to roundoff.
            Eigen::Map<Eigen::MatrixXcd> rho(y.data(), d, d);
            rho = 0.5 * (rho + rho.adjoint()).eval();
            ++res.steps_accepted;
        } else {
            ++res.steps_rejected;
        }
        const double factor = std::clamp(
            0.9 * std::pow(std::max(err_norm, 1e-10), -0.2), 0.2, 5.0);
        h *= factor;
    }
    h_hint = h;
    t = t_end;
}

void check_density_matrix(const Eigen::Ref<const Eigen::MatrixXcd>& rho,
                          const std::string& where, EvolveResult* res) {
    const double trace_err = std::abs(rho.trace().real() - 1.0) +
                             std::abs(rho.trace().imag());
    const double herm_err = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(
        0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (res) {
        res->max_trace_error = std::max(res->max_trace_error, trace_err);
        res->min_eigenvalue = std::min(res->min_eigenvalue, min_eig);
    }
    if (trace_err > 1e-9) {
        throw numerical_error("evolve: trace drift " + std::to_string(trace_err) +
                              " at " + where);
    }
    if (herm_err > 1e-10) {
        throw numerical_error("evolve: hermiticity loss at " + where);
    }
    if (min_eig < -1e-8) {
        throw numerical_error("evolve: negative eigenvalue " +
                              std::to_string(min_eig) + " at " + where);
    }
}

} // namespace

EvolveResult evolve(const Eigen::MatrixXcd& rho0, const LevelSystem& levels,
                    const DecayRates& rates, const PulseSequence& sequence,
                    const NoiseModel& noise, const OuPath* noise_trace,
                    const EvolveOptions& options) {
    if (!(options.tol > 1e-12 && options.tol < 1e-3)) {
        throw config_error("evolve: tol must lie in (1e-12, 1e-3)");
    }
    noise.validate();
    sequence.validate(levels);
    const int d = levels.dim();
    if (rho0.rows() != d || rho0.cols() != d) {
        throw config_error("evolve: initial state has wrong dimension");
    }
    check_density_matrix(rho0, "initial state", nullptr);

    const int n = d * d;
    Eigen::VectorXcd y(n + 1);
    Eigen::Map<Eigen::MatrixXcd>(y.data(), d, d) = rho0;
    y[n] = 0.0;

    EvolveResult res;
    res.min_eigenvalue = 1.0;
    Stepper st;
    st.trace = noise_trace;
    st.d = d;

    FrameContext frame;
    double t = 0.0;
    double h_hint = 0.0;
    const double seg_sum = sequence.duration_s() / sequence.repetitions;

    for (int rep = 0; rep < sequence.repetitions; ++rep) {
        for (std::size_t i = 0; i < sequence.segments.size(); ++i) {
            const Segment& segment = sequence.segments[i];
            const Generator gen = build_generator(
                levels, rates, segment, options.static_detuning_rad_s, noise,
                frame);
            st.gen = &gen;
            const std::string label = segment_label(segment, i);
            const bool is_window = std::holds_alternative<ReadoutWindow>(segment);
            const double before = y[n].real();

            integrate_segment(y, t, h_hint, st, t + segment_duration(segment),
                              noise, options, res, label);

            Eigen::Map<const Eigen::MatrixXcd> rho(y.data(), d, d);
            if (is_window) {
                res.window_emission_A.push_back(y[n].real() - before);
            }
            if (options.check_invariants) {
                check_density_matrix(rho, label, &res);
            }
            if (options.record_boundaries) {
                res.boundaries.push_back(SegmentBoundary{t, rho});
            }
        }
        if (rep + 1 < sequence.repetitions &&
            sequence.repetition_period_s > seg_sum) {
            // Idle stretch between shots; the frame persists and decay runs on.
            const Segment gap{Delay{sequence.repetition_period_s - seg_sum}};
            const Generator gen = build_generator(
                levels, rates, gap, options.static_detuning_rad_s, noise, frame);
            st.gen = &gen;
            integrate_segment(y, t, h_hint, st, t + segment_duration(gap), noise,
                              options, res, "repetition gap");
            if (options.check_invariants) {
                Eigen::Map<const Eigen::MatrixXcd> rho(y.data(), d, d);
                check_density_matrix(rho, "repetition gap", &res);
            }
        }
    }

    res.final_rho = Eigen::Map<const Eigen::MatrixXcd>(y.data(), d, d);
    res.final_time_s = t;
    res.total_emission_A = y[n].real();
    return res;
}

Eigen::MatrixXcd mixed_state(const LevelSystem& levels,
                             const std::map<std::string, double>& populations) {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(levels.dim(), levels.dim());
    double sum = 0.0;
    for (const auto& [name, p] : populations) {
        if (p < 0.0) {
            throw config_error("mixed_state: negative population for " + name);
        }
        rho(levels.index_of(name), levels.index_of(name)) = p;
        sum += p;
    }
    if (sum <= 0.0) {
        throw config_error("mixed_state: populations sum to zero");
    }
    return rho / sum;
}

Eigen::MatrixXcd pure_state(const LevelSystem& levels,
                            const std::string& level) {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(levels.dim(), levels.dim());
    rho(levels.index_of(level), levels.index_of(level)) = 1.0;
    return rho;
}

NoiseAverage average_over_noise(
    std::size_t n_samples, std::uint64_t master_seed, std::string_view tag,
    const std::function<double(std::size_t, std::uint64_t)>& sample_fn) {
    if (n_samples == 0) {
        throw config_error("average_over_noise: need at least one sample");
    }
    NoiseAverage out;
    out.samples.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        out.samples.push_back(sample_fn(i, rng::derive_seed(master_seed, tag, i)));
    }
    out.mean = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) /
               static_cast<double>(n_samples);
    if (n_samples > 1) {
        double ss = 0.0;
        for (double v : out.samples) ss += (v - out.mean) * (v - out.mean);
        out.std_error = std::sqrt(ss / static_cast<double>(n_samples - 1) /
                                  static_cast<double>(n_samples));
    }
    return out;
}

} // namespace ybcav
