#pragma once

#include <limits>

#include "levytax/scale.hpp"

namespace levytax {

// Sentinel for the classical-ruin limit (injections forbidden): passing this as theta
// selects the W-based formulas instead of substituting a huge float into Z.
inline constexpr double kNoInjections = std::numeric_limits<double>::infinity();

struct PassageProblem {
    double x = 1.0;   // starting surplus (and initial tax barrier)
    double y = 2.0;   // passage target level
    double q = 0.01;  // discount rate
    double theta = 1.0;  // injection penalty rate, or kNoInjections
};

/*
 * Closed-form transforms for the taxed (refraction at the running maximum) and
 * injected (reflection at zero) risk process. T_y is the first passage of the taxed
 * process above y, L the cumulative injections, U the cumulative pre-tax dividends.
 */

// Classical two-sided exit: E_x[ e^{-q tau_y^+} ; tau_y^+ < tau_0^- ] = W(x)/W(y).
double two_sided_exit(const ScaleContext& ctx, double x, double y);

// Reflected-at-zero passage transform (no tax): E_x e^{-q T_y - theta L_{T_y}}
// = Z(theta, x)/Z(theta, y); theta = kNoInjections gives W(x)/W(y).
double reflected_passage_transform(const ScaleContext& ctx, double theta, double x,
                                   double y);

// Taxed passage transform, gamma < 1 constant:
// E^gamma_x e^{-q T_y - theta L_{T_y}} = (Z(theta,x)/Z(theta,y))^{1/(1-gamma)}.
double taxed_passage_transform(const ScaleContext& ctx, double theta, double x, double y,
                               double gamma);

// Dividend-barrier case gamma = 1: E^1_x e^{-q rho_y - theta L_{rho_y}}
// = exp(-lambda(theta, x) * y), rho_y = first time cumulative dividends U exceed y.
double dividend_time_transform(const ScaleContext& ctx, double theta, double x, double y);

// Piecewise-constant tax rate gamma(level), bounded away from 1:
// exp( - Int_x^y lambda(theta, u) / (1 - gamma(u)) du ), evaluated exactly per piece
// as a difference of log Z.
double survival_level_dependent(const ScaleContext& ctx, double theta, double x, double y,
                                const TaxRate& gamma);

// Expected discounted total tax paid until the injection clock rings:
// V(gamma) = gamma/(1-gamma) * Int_x^inf (Z(theta,x)/Z(theta,y))^{1/(1-gamma)} dy,
// 0 < gamma < 1. Truncated adaptive quadrature plus an analytic exponential tail.
// Throws DivergentIntegral when the integrand has no exponential decay (Phi(q) = 0).
double value_v(const ScaleContext& ctx, double theta, double x, double gamma);

// gamma = 1 limit: V(1) = 1/lambda(theta, x) = Z/Z' (W/W' when theta = kNoInjections).
// Throws InfiniteValue when lambda = 0 (q = 0 and theta = 0).
double value_v1(const ScaleContext& ctx, double theta, double x);

}  // namespace levytax
