#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ybcav {

/// Fitted model parameters with 1-sigma errors from the local linearization.
struct FitResult {
    std::string model;
    std::vector<std::string> param_names;
    Eigen::VectorXd params;
    Eigen::VectorXd errors;
    double chi2_reduced = 0.0;
    bool converged = false;
    int iterations = 0;

    double param(const std::string& name) const;
    double error(const std::string& name) const;
};

/// y = f(x; p), evaluated pointwise.
using FitModel = std::function<double(double x, const Eigen::VectorXd& p)>;

struct FitOptions {
    int max_iterations = 200;
    double tolerance = 1e-12; // relative change in chi2
};

/// Levenberg-Marquardt least squares with a forward-difference Jacobian.
/// Weights are 1/sigma per point; pass empty for unit weights.
/// Throws config_error on mismatched spans and numerical_error when the
/// residuals are not finite at the initial guess; a fit that stalls before
/// reaching the tolerance comes back with converged = false.
FitResult fit_curve(const FitModel& f, std::span<const double> x,
                    std::span<const double> y, std::span<const double> sigma,
                    const Eigen::VectorXd& p0,
                    const std::vector<std::string>& names,
                    const std::string& model_name, FitOptions opts = {});

/// a * exp(-t/tau) + c ; params (a, tau, c). Initial guesses from the data.
FitResult fit_exponential_decay(std::span<const double> t,
                                std::span<const double> y,
                                std::span<const double> sigma = {});

/// a * exp(-(t/T)^2) ; params (a, T).
FitResult fit_gaussian_envelope(std::span<const double> t,
                                std::span<const double> y,
                                std::span<const double> sigma = {});

/// a * exp(-t/T) ; params (a, T).
FitResult fit_exponential_envelope(std::span<const double> t,
                                   std::span<const double> y,
                                   std::span<const double> sigma = {});

/// Reflection dip 1 - A / (1 + ((f-f0)/w)^2) ; params (A, f0, w).
/// The loaded quality factor is f0 / (2w).
FitResult fit_lorentzian_dip(std::span<const double> freq,
                             std::span<const double> reflectance);

} // namespace ybcav
