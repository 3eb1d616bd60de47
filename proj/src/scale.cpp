#include "levytax/scale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace levytax {

namespace {

// (e^u - 1)/u, exact through u = 0.
double exprel(double u) {
    if (std::abs(u) < 1e-14) return 1.0 + 0.5 * u;
    return std::expm1(u) / u;
}

// log((e^u - 1)/u) for any real u, stable at both ends.
double log_exprel(double u) {
    if (std::abs(u) < 1e-5) return 0.5 * u + u * u / 24.0;
    if (u > 36.0) return u - std::log(u);
    if (u > 0.0) return std::log(std::expm1(u)) - std::log(u);
    return std::log(-std::expm1(u)) - std::log(-u);
}

// Signed log-sum-exp: accumulates terms sign * exp(log_mag) and returns the log of
// the (positive) total.
struct SignedLse {
    std::vector<double> logs;
    std::vector<double> signs;
    void add(double sign, double log_mag) {
        if (sign == 0.0 || log_mag == -std::numeric_limits<double>::infinity()) return;
        logs.push_back(log_mag);
        signs.push_back(sign);
    }
    double log_total() const {
        if (logs.empty()) return -std::numeric_limits<double>::infinity();
        double m = *std::max_element(logs.begin(), logs.end());
        double s = 0.0;
        for (std::size_t i = 0; i < logs.size(); ++i)
            s += signs[i] * std::exp(logs[i] - m);
        if (!(s > 0.0))
            throw std::domain_error("scale evaluation lost all precision (cancellation)");
        return m + std::log(s);
    }
};

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

ScaleContext::ScaleContext(LevyModel model, double q) : model_(std::move(model)), q_(q) {
    if (q < 0.0) throw std::invalid_argument("discount rate q must be nonnegative");
    roots_ = model_.psi_roots(q);
    coeffs_.reserve(roots_.size());
    for (double r : roots_) coeffs_.push_back(1.0 / model_.psi_prime(r));
}

double ScaleContext::log_w(double x) const {
    // Factor out the dominant exponent; remaining sum is O(1).
    const double m = roots_.front() * x;
    double s = 0.0;
    for (std::size_t j = 0; j < roots_.size(); ++j)
        s += coeffs_[j] * std::exp((roots_[j] - roots_.front()) * x);
    if (!(s > 0.0)) throw std::domain_error("W evaluated nonpositive (cancellation)");
    return m + std::log(s);
}

double ScaleContext::w(double x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < roots_.size(); ++j)
        s += coeffs_[j] * std::exp((roots_[j] - roots_.front()) * x);
    return std::exp(roots_.front() * x) * s;
}

double ScaleContext::w_prime(double x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < roots_.size(); ++j)
        s += coeffs_[j] * roots_[j] * std::exp((roots_[j] - roots_.front()) * x);
    return std::exp(roots_.front() * x) * s;
}

/*
 * Two algebraically identical representations of Z, selected for stability:
 *
 *  theta form:  Z = e^{theta x} [1 - D * sum_j coeff_j * x * exprel((root_j-theta)x)],
 *               D = psi(theta) - q. Exact at x = 0 and through theta = any root
 *               (the near-pole limit coeff_j * x * e^{theta x} emerges from exprel).
 *               Safe whenever D <= 0 (the bracket only grows) or theta is within
 *               1e-7 of Phi(q) (the bracket stays near 1).
 *
 *  sum form:    Z = sum_j B_j e^{root_j x},  B_j = D * coeff_j / (theta - root_j),
 *               from the partial fractions of 1/(psi - q). Used for theta clearly
 *               above Phi(q), where the theta form's bracket decays like
 *               e^{(Phi-theta)x} and would cancel catastrophically.
 */
double ScaleContext::log_z(double theta, double x) const {
    if (!(theta >= 0.0) || std::isinf(theta))
        throw std::invalid_argument("z requires finite theta >= 0");
    if (x < 0.0) throw std::invalid_argument("z requires x >= 0");
    const double d = model_.psi(theta) - q_;
    const double phi_q = roots_.front();

    if (theta > phi_q + 1e-7 && x > 0.0) {
        SignedLse lse;
        for (std::size_t j = 0; j < roots_.size(); ++j) {
            double bj = d * coeffs_[j] / (theta - roots_[j]);
            lse.add(sgn(bj), std::log(std::abs(bj)) + roots_[j] * x);
        }
        return lse.log_total();
    }

    if (x == 0.0) return 0.0;
    SignedLse lse;
    lse.add(1.0, 0.0);
    if (d != 0.0) {
        const double logdx = std::log(std::abs(d)) + std::log(x);
        for (std::size_t j = 0; j < roots_.size(); ++j) {
            double coef = -d * coeffs_[j];
            lse.add(sgn(coef),
                    logdx + std::log(std::abs(coeffs_[j])) + log_exprel((roots_[j] - theta) * x));
        }
    }
    return theta * x + lse.log_total();
}

double ScaleContext::z(double theta, double x) const {
    if (!(theta >= 0.0) || std::isinf(theta))
        throw std::invalid_argument("z requires finite theta >= 0");
    if (x < 0.0) throw std::invalid_argument("z requires x >= 0");
    const double d = model_.psi(theta) - q_;
    const double phi_q = roots_.front();

    if (theta > phi_q + 1e-7 && x > 0.0) {
        double s = 0.0;
        const double m = roots_.front() * x;
        for (std::size_t j = 0; j < roots_.size(); ++j)
            s += d * coeffs_[j] / (theta - roots_[j]) * std::exp(roots_[j] * x - m);
        return std::exp(m) * s;
    }

    double s = 0.0;
    for (std::size_t j = 0; j < roots_.size(); ++j)
        s += coeffs_[j] * x * exprel((roots_[j] - theta) * x);
    return std::exp(theta * x) * (1.0 - d * s);
}

double ScaleContext::z_prime(double theta, double x) const {
    return theta * z(theta, x) - (model_.psi(theta) - q_) * w(x);
}

double ScaleContext::lambda_exponent(double theta, double x) const {
    if (std::isinf(theta)) {
        // Classical limit: log-derivative of W.
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < roots_.size(); ++j) {
            double e = std::exp((roots_[j] - roots_.front()) * x);
            num += coeffs_[j] * roots_[j] * e;
            den += coeffs_[j] * e;
        }
        return std::max(num / den, 0.0);
    }
    const double d = model_.psi(theta) - q_;
    double lam = theta - d * std::exp(log_w(x) - log_z(theta, x));
    return std::max(lam, 0.0);  // exponential rate; clamp roundoff
}

ScaleEval ScaleContext::eval(double theta, double x) const {
    return {w(x), z(theta, x), z_prime(theta, x), lambda_exponent(theta, x)};
}

}  // namespace levytax
