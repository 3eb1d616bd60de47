#pragma once

#include <vector>

#include "levytax/errors.hpp"

namespace levytax {

struct MixtureComponent {
    double weight;  // positive, weights sum to 1
    double rate;    // exponential rate, positive and distinct per component
};

/*
 * Claim severity distribution: finite mixture of exponentials,
 * density  f(m) = sum_i weight_i * rate_i * exp(-rate_i * m),  m > 0.
 */
class ClaimMixture {
  public:
    explicit ClaimMixture(std::vector<MixtureComponent> components);
    static ClaimMixture exponential(double mean);  // single component with rate 1/mean

    const std::vector<MixtureComponent>& components() const { return components_; }
    double mean() const;
    // E exp(-alpha * M) for alpha > -min rate.
    double laplace(double alpha) const;

  private:
    std::vector<MixtureComponent> components_;
};

/*
 * Spectrally negative Levy surplus process of Cramer-Lundberg type:
 *   X_t = X_0 + c t - sum of claims arriving at Poisson rate jump_intensity.
 */
class LevyModel {
  public:
    LevyModel(double premium_rate, double jump_intensity, ClaimMixture claims);

    double premium_rate() const { return c_; }
    double jump_intensity() const { return lambda_; }
    const ClaimMixture& claims() const { return claims_; }

    // Laplace exponent psi(a) = c a - jump_intensity * sum_i w_i a / (rate_i + a),
    // defined for a > -min rate; psi(0) = 0.
    double psi(double alpha) const;
    double psi_prime(double alpha) const;
    // Net drift psi'(0+) = c - jump_intensity * mean claim.
    double drift() const;

    // All k+1 real roots of psi(alpha) = q for q >= 0, in descending order; the first
    // entry is the right inverse Phi(q). Bracketed bisection between the poles -rate_i
    // with Newton polish. Throws NumericalDegeneracy if two roots collide (within 1e-9),
    // e.g. q = 0 at zero drift.
    std::vector<double> psi_roots(double q) const;
    double phi(double q) const;  // largest root

  private:
    double c_;
    double lambda_;
    ClaimMixture claims_;
};

/*
 * Tax rate as a function of the surplus level (the running maximum of the taxed
 * process). Either a single constant gamma <= 1, or a piecewise-constant function
 * bounded away from 1 (each piece value <= 1 - 1e-9). gamma < 0 models subsidy;
 * gamma = 1 (constant only) is the dividend barrier case.
 */
class TaxRate {
  public:
    static TaxRate constant(double gamma);
    // values[i] applies on [levels[i], levels[i+1]); the last value extends to infinity.
    static TaxRate piecewise(std::vector<double> levels, std::vector<double> values);

    double at(double level) const;
    // First breakpoint strictly above `level`, or +infinity.
    double next_breakpoint_above(double level) const;
    bool is_constant() const { return levels_.size() <= 1; }
    double max_gamma() const;

  private:
    TaxRate() = default;
    std::vector<double> levels_;
    std::vector<double> values_;
};

}  // namespace levytax
