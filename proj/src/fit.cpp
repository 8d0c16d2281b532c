#include "ybcav/fit.hpp"

#include <algorithm>
#include <cmath>

#include "ybcav/errors.hpp"

namespace ybcav {

double FitResult::param(const std::string& name) const {
    for (std::size_t i = 0; i < param_names.size(); ++i) {
        if (param_names[i] == name) return params[static_cast<Eigen::Index>(i)];
    }
    throw numerical_error("fit: unknown parameter '" + name + "'");
}

double FitResult::error(const std::string& name) const {
    for (std::size_t i = 0; i < param_names.size(); ++i) {
        if (param_names[i] == name) return errors[static_cast<Eigen::Index>(i)];
    }
    throw numerical_error("fit: unknown parameter '" + name + "'");
}

namespace {

void check_xy(std::span<const double> x, std::span<const double> y,
              std::span<const double> sigma) {
    if (x.empty() || x.size() != y.size()) {
        throw config_error("fit: x and y must be non-empty and equal length");
    }
    if (!sigma.empty() && sigma.size() != x.size()) {
        throw config_error("fit: sigma length must match the data");
    }
}

Eigen::VectorXd residuals(const FitModel& f, std::span<const double> x,
                          std::span<const double> y,
                          std::span<const double> w, const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        r[static_cast<Eigen::Index>(i)] = (f(x[i], p) - y[i]) * w[i];
    }
    return r;
}

} // namespace

FitResult fit_curve(const FitModel& f, std::span<const double> x,
                    std::span<const double> y, std::span<const double> sigma,
                    const Eigen::VectorXd& p0,
                    const std::vector<std::string>& names,
                    const std::string& model_name, FitOptions opts) {
    check_xy(x, y, sigma);
    const std::size_t n = x.size();
    const Eigen::Index np = p0.size();
    if (n < static_cast<std::size_t>(np)) {
        throw numerical_error("fit: fewer points than parameters for model " +
                              model_name);
    }

    std::vector<double> w(n, 1.0);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        w[i] = sigma[i] > 0.0 ? 1.0 / sigma[i] : 1.0;
    }

    Eigen::VectorXd p = p0;
    Eigen::VectorXd r = residuals(f, x, y, w, p);
    double chi2 = r.squaredNorm();
    if (!std::isfinite(chi2)) {
        throw numerical_error(
            "fit: residuals not finite at the initial guess for model " +
            model_name);
    }
    double lambda = 1e-3;

    FitResult result;
    result.model = model_name;
    result.param_names = names;

    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        // forward-difference Jacobian of the weighted residuals
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), np);
        for (Eigen::Index j = 0; j < np; ++j) {
            const double h =
                1e-7 * std::max(std::abs(p[j]), 1e-12 * (1.0 + std::abs(p[j])));
            Eigen::VectorXd pj = p;
            pj[j] += h;
            const Eigen::VectorXd rj = residuals(f, x, y, w, pj);
            jac.col(j) = (rj - r) / h;
        }

        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r;

        bool improved = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-30);
            const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
            const Eigen::VectorXd pn = p + step;
            const Eigen::VectorXd rn = residuals(f, x, y, w, pn);
            const double chi2n = rn.squaredNorm();
            if (std::isfinite(chi2n) && chi2n <= chi2) {
                const double rel = (chi2 - chi2n) / std::max(chi2, 1e-300);
                p = pn;
                r = rn;
                chi2 = chi2n;
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
                if (rel < opts.tolerance) {
                    result.converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if (result.converged || !improved) break;
    }

    result.iterations = iter + 1;
    result.params = p;

    // 1-sigma errors from (J^T J)^-1 scaled by the residual variance
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), np);
    for (Eigen::Index j = 0; j < np; ++j) {
        const double h =
            1e-7 * std::max(std::abs(p[j]), 1e-12 * (1.0 + std::abs(p[j])));
        Eigen::VectorXd pj = p;
        pj[j] += h;
        jac.col(j) = (residuals(f, x, y, w, pj) - r) / h;
    }
    const double dof = static_cast<double>(n) - static_cast<double>(np);
    const double var = dof > 0 ? chi2 / dof : 0.0;
    result.chi2_reduced = var;
    Eigen::MatrixXd cov =
        (jac.transpose() * jac)
            .ldlt()
            .solve(Eigen::MatrixXd::Identity(np, np));
    result.errors = (cov.diagonal().cwiseMax(0.0) * std::max(var, 1e-300))
                        .cwiseSqrt();
    return result;
}

FitResult fit_exponential_decay(std::span<const double> t,
                                std::span<const double> y,
                                std::span<const double> sigma) {
    check_xy(t, y, sigma);
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const double span = t.back() - t.front();
    Eigen::VectorXd p0(3);
    p0 << (*hi - *lo), span / 3.0, *lo;
    if (p0[0] <= 0.0) p0[0] = std::max(*hi, 1e-12);
    FitModel f = [](double x, const Eigen::VectorXd& p) {
        return p[0] * std::exp(-x / p[1]) + p[2];
    };
    return fit_curve(f, t, y, sigma, p0, {"amplitude", "tau", "offset"},
                     "exponential_decay");
}

FitResult fit_gaussian_envelope(std::span<const double> t,
                                std::span<const double> y,
                                std::span<const double> sigma) {
    check_xy(t, y, sigma);
    Eigen::VectorXd p0(2);
    const double ymax = *std::max_element(y.begin(), y.end());
    p0 << std::max(ymax, 1e-12), std::max(t.back() / 2.0, 1e-12);
    FitModel f = [](double x, const Eigen::VectorXd& p) {
        const double u = x / p[1];
        return p[0] * std::exp(-u * u);
    };
    return fit_curve(f, t, y, sigma, p0, {"amplitude", "T"},
                     "gaussian_envelope");
}

FitResult fit_exponential_envelope(std::span<const double> t,
                                   std::span<const double> y,
                                   std::span<const double> sigma) {
    check_xy(t, y, sigma);
    Eigen::VectorXd p0(2);
    const double ymax = *std::max_element(y.begin(), y.end());
    p0 << std::max(ymax, 1e-12), std::max(t.back() / 2.0, 1e-12);
    FitModel f = [](double x, const Eigen::VectorXd& p) {
        return p[0] * std::exp(-x / p[1]);
    };
    return fit_curve(f, t, y, sigma, p0, {"amplitude", "T"},
                     "exponential_envelope");
}

FitResult fit_lorentzian_dip(std::span<const double> freq,
                             std::span<const double> reflectance) {
    check_xy(freq, reflectance, {});
    const auto min_it =
        std::min_element(reflectance.begin(), reflectance.end());
    const std::size_t min_idx =
        static_cast<std::size_t>(min_it - reflectance.begin());
    const double depth = 1.0 - *min_it;
    const double f0 = freq[min_idx];

    // half-depth points bracket the width
    double half_lo = freq.front(), half_hi = freq.back();
    const double half_level = 1.0 - 0.5 * depth;
    for (std::size_t i = min_idx; i-- > 0;) {
        if (reflectance[i] >= half_level) {
            half_lo = freq[i];
            break;
        }
    }
    for (std::size_t i = min_idx; i < freq.size(); ++i) {
        if (reflectance[i] >= half_level) {
            half_hi = freq[i];
            break;
        }
    }
    Eigen::VectorXd p0(3);
    p0 << std::max(depth, 1e-6), f0, std::max((half_hi - half_lo) / 2.0, 1e-9);
    FitModel f = [](double x, const Eigen::VectorXd& p) {
        const double u = (x - p[1]) / p[2];
        return 1.0 - p[0] / (1.0 + u * u);
    };
    return fit_curve(f, freq, reflectance, {}, p0, {"depth", "f0", "hwhm"},
                     "lorentzian_dip");
}

} // namespace ybcav
