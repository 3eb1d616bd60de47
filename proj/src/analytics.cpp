#include "levytax/analytics.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "levytax/quadrature.hpp"

namespace levytax {

namespace {

double log_ratio(const ScaleContext& ctx, double theta, double x, double y) {
    if (std::isinf(theta)) return ctx.log_w(x) - ctx.log_w(y);
    return ctx.log_z(theta, x) - ctx.log_z(theta, y);
}

void check_bounds(double x, double y) {
    if (x < 0.0 || y < x) throw std::invalid_argument("need 0 <= x <= y");
}

}  // namespace

double two_sided_exit(const ScaleContext& ctx, double x, double y) {
    check_bounds(x, y);
    return std::exp(ctx.log_w(x) - ctx.log_w(y));
}

double reflected_passage_transform(const ScaleContext& ctx, double theta, double x,
                                   double y) {
    check_bounds(x, y);
    return std::exp(log_ratio(ctx, theta, x, y));
}

double taxed_passage_transform(const ScaleContext& ctx, double theta, double x, double y,
                               double gamma) {
    check_bounds(x, y);
    if (gamma >= 1.0) throw std::invalid_argument("taxed transform needs gamma < 1");
    return std::exp(log_ratio(ctx, theta, x, y) / (1.0 - gamma));
}

double dividend_time_transform(const ScaleContext& ctx, double theta, double x, double y) {
    if (x < 0.0 || y < 0.0) throw std::invalid_argument("need x >= 0 and y >= 0");
    return std::exp(-ctx.lambda_exponent(theta, x) * y);
}

double survival_level_dependent(const ScaleContext& ctx, double theta, double x, double y,
                                const TaxRate& gamma) {
    check_bounds(x, y);
    if (gamma.max_gamma() >= 1.0)
        throw std::invalid_argument("level-dependent survival needs gamma < 1 everywhere");
    // Int_x^y lambda(u)/(1-gamma(u)) du piece by piece; on each piece the integral of
    // lambda is a log Z (or log W) difference, evaluated exactly.
    double log_total = 0.0;
    double u = x;
    while (u < y) {
        double next = std::min(y, gamma.next_breakpoint_above(u));
        log_total += log_ratio(ctx, theta, u, next) / (1.0 - gamma.at(u));
        u = next;
    }
    return std::exp(log_total);
}

double value_v(const ScaleContext& ctx, double theta, double x, double gamma) {
    if (!(gamma > 0.0) || !(gamma < 1.0))
        throw std::invalid_argument("value_v needs 0 < gamma < 1");
    if (x < 0.0) throw std::invalid_argument("value_v needs x >= 0");
    if (!(ctx.q() > 0.0) && !(theta > 0.0))
        throw DivergentIntegral(
            "tax value integral diverges: q = 0 and theta = 0 make Z identically 1, "
            "so the passage transform never decays");
    if (ctx.phi() <= 0.0)
        throw DivergentIntegral(
            "tax value integral diverges: Phi(q) = 0 (q = 0 with nonnegative drift), "
            "so the passage transform has no exponential decay in the target level");

    double p = 1.0 / (1.0 - gamma);
    if (p > 1e4) {
        std::cerr << "value_v: exponent 1/(1-gamma) capped at 1e4 near gamma = 1; "
                     "use value_v1 for the dividend limit\n";
        p = 1e4;
    }

    const double log_zx =
        std::isinf(theta) ? ctx.log_w(x) : ctx.log_z(theta, x);
    auto log_zy = [&](double y) {
        return std::isinf(theta) ? ctx.log_w(y) : ctx.log_z(theta, y);
    };
    auto integrand = [&](double y) { return std::exp(p * (log_zx - log_zy(y))); };

    // Truncate where the integrand has fallen 12 decades below its value 1 at x,
    // then add the geometric tail at the local decay rate.
    const double target = -12.0 * std::log(10.0);
    double ystar = x + 1.0;
    while (p * (log_zx - log_zy(ystar)) > target && ystar < x + 1e7)
        ystar = x + 2.0 * (ystar - x);
    auto quad = integrate_adaptive(integrand, x, ystar, 1e-8);
    double rate = ctx.lambda_exponent(theta, ystar) * p;
    double tail = rate > 0.0 ? integrand(ystar) / rate : 0.0;
    return gamma * p * (quad.value + tail);
}

double value_v1(const ScaleContext& ctx, double theta, double x) {
    if (x < 0.0) throw std::invalid_argument("value_v1 needs x >= 0");
    double lam = ctx.lambda_exponent(theta, x);
    if (!(lam > 0.0))
        throw InfiniteValue(
            "dividend value 1/lambda is infinite: lambda = 0 (q = 0 and theta = 0)");
    return 1.0 / lam;
}

}  // namespace levytax
