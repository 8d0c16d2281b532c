#include "doctest.h"

#include <cmath>
#include <vector>

#include "ybcav/errors.hpp"
#include "ybcav/fit.hpp"
#include "ybcav/rng.hpp"

using namespace ybcav;

TEST_SUITE("fit") {

TEST_CASE("exponential decay recovers exact parameters") {
    std::vector<double> t, y;
    const double a = 350.0, tau = 4.2e-6, c = 12.0;
    for (int i = 0; i < 40; ++i) {
        const double x = i * 0.4e-6;
        t.push_back(x);
        y.push_back(a * std::exp(-x / tau) + c);
    }
    const FitResult fit = fit_exponential_decay(t, y);
    REQUIRE(fit.converged);
    CHECK(fit.param("amplitude") == doctest::Approx(a).epsilon(1e-6));
    CHECK(fit.param("tau") == doctest::Approx(tau).epsilon(1e-6));
    CHECK(fit.param("offset") == doctest::Approx(c).epsilon(1e-4));
    CHECK(fit.chi2_reduced < 1e-10);
}

TEST_CASE("noisy exponential decay recovers tau within errors") {
    rng::Generator g(41);
    std::vector<double> t, y, s;
    const double a = 1000.0, tau = 2.8e-6;
    for (int i = 0; i < 64; ++i) {
        const double x = i * 14e-6 / 63;
        const double mu = a * std::exp(-x / tau);
        t.push_back(x);
        y.push_back(mu + std::sqrt(mu + 1.0) * g.normal());
        s.push_back(std::sqrt(mu + 1.0));
    }
    const FitResult fit = fit_exponential_decay(t, y, s);
    REQUIRE(fit.converged);
    CHECK(std::abs(fit.param("tau") - tau) < 4.0 * fit.error("tau"));
    CHECK(fit.error("tau") / tau < 0.05);
    CHECK(fit.chi2_reduced < 2.0);
}

TEST_CASE("gaussian envelope") {
    std::vector<double> t, y;
    const double a = 0.95, T = 69e-9;
    for (int i = 0; i < 21; ++i) {
        const double x = i * 140e-9 / 20;
        t.push_back(x);
        y.push_back(a * std::exp(-(x / T) * (x / T)));
    }
    const FitResult fit = fit_gaussian_envelope(t, y);
    REQUIRE(fit.converged);
    CHECK(fit.param("amplitude") == doctest::Approx(a).epsilon(1e-6));
    CHECK(fit.param("T") == doctest::Approx(T).epsilon(1e-6));
}

TEST_CASE("exponential envelope") {
    std::vector<double> t, y;
    const double a = 0.9, T = 330e-9;
    for (int i = 0; i < 21; ++i) {
        const double x = i * 660e-9 / 20;
        t.push_back(x);
        y.push_back(a * std::exp(-x / T));
    }
    const FitResult fit = fit_exponential_envelope(t, y);
    REQUIRE(fit.converged);
    CHECK(fit.param("amplitude") == doctest::Approx(a).epsilon(1e-6));
    CHECK(fit.param("T") == doctest::Approx(T).epsilon(1e-6));
}

TEST_CASE("lorentzian dip") {
    std::vector<double> f, r;
    const double depth = 0.91, f0 = 304505.0, w = 28.7;
    for (int i = 0; i < 201; ++i) {
        const double x = f0 - 150.0 + 300.0 * i / 200;
        f.push_back(x);
        r.push_back(1.0 - depth / (1.0 + ((x - f0) / w) * ((x - f0) / w)));
    }
    const FitResult fit = fit_lorentzian_dip(f, r);
    REQUIRE(fit.converged);
    CHECK(fit.param("depth") == doctest::Approx(depth).epsilon(1e-6));
    CHECK(fit.param("f0") == doctest::Approx(f0).epsilon(1e-9));
    CHECK(fit.param("hwhm") == doctest::Approx(w).epsilon(1e-6));
}

TEST_CASE("parameter lookup by name") {
    std::vector<double> t{0.0, 1.0, 2.0, 3.0}, y{4.0, 2.0, 1.2, 1.05};
    const FitResult fit = fit_exponential_decay(t, y);
    CHECK_THROWS_AS(fit.param("nope"), numerical_error);
    CHECK_THROWS_AS(fit.error("nope"), numerical_error);
    CHECK(fit.param_names.size() == 3);
}

TEST_CASE("sigma weighting suppresses a flagged outlier") {
    std::vector<double> t, y, s;
    const double a = 100.0, tau = 1.0;
    for (int i = 0; i < 30; ++i) {
        const double x = i * 0.1;
        t.push_back(x);
        y.push_back(a * std::exp(-x / tau));
        s.push_back(1.0);
    }
    y[5] = 500.0; // wild point
    s[5] = 1e6;   // flagged as worthless
    const FitResult fit = fit_exponential_decay(t, y, s);
    REQUIRE(fit.converged);
    CHECK(fit.param("tau") == doctest::Approx(tau).epsilon(1e-4));
}

TEST_CASE("non-finite residuals at the start raise numerical_error") {
    const FitModel blowup = [](double, const Eigen::VectorXd& p) {
        return std::exp(p[0]);
    };
    std::vector<double> x{0.0, 1.0, 2.0}, y{5.0, 6.0, 7.0};
    Eigen::VectorXd p0(1);
    p0 << 1e9; // exp overflows at the initial guess
    CHECK_THROWS_AS(
        fit_curve(blowup, x, y, {}, p0, {"p"}, "blowup"), numerical_error);
}

TEST_CASE("a model already at its optimum converges at once") {
    const FitModel flat = [](double, const Eigen::VectorXd&) { return 0.0; };
    std::vector<double> x{0.0, 1.0, 2.0}, y{5.0, 6.0, 7.0};
    Eigen::VectorXd p0(1);
    p0 << 1.0;
    const FitResult fit = fit_curve(flat, x, y, {}, p0, {"p"}, "flat");
    CHECK(fit.converged); // chi2 cannot improve, relative change is zero
    CHECK(fit.params[0] == doctest::Approx(1.0));
}

TEST_CASE("mismatched spans are rejected") {
    std::vector<double> x{0.0, 1.0, 2.0}, y{5.0, 6.0};
    CHECK_THROWS_AS(fit_exponential_decay(x, y), config_error);
}

} // TEST_SUITE
