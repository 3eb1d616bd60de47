#pragma once

#include <vector>

#include "levytax/model.hpp"

namespace levytax {

struct ScaleEval {
    double w;
    double z;
    double z_prime;
    double lambda;
};

/*
 * Scale functions of the model at discount rate q, via partial fractions of
 * 1 / (psi(alpha) - q):
 *
 *   W(x) = sum_j coeff_j exp(root_j x),   coeff_j = 1 / psi'(root_j),
 *
 * over the k+1 simple real roots of psi(alpha) = q. The second scale function
 *
 *   Z(theta, x) = exp(theta x) [1 - (psi(theta) - q) Int_0^x exp(-theta y) W(y) dy]
 *
 * is evaluated in closed form; Z(theta, 0) = 1 exactly, and
 * Z'(theta, x) = theta Z - (psi(theta) - q) W. lambda(theta, x) = Z'/Z is the
 * exponent of the dividend-time transform. theta = +infinity selects the classical
 * (no-injection) limit where W replaces Z: lambda becomes W'/W.
 *
 * All evaluations factor out the dominant exponent, so log_w / log_z stay accurate
 * far beyond the ~exp(700) overflow range of a double.
 */
class ScaleContext {
  public:
    ScaleContext(LevyModel model, double q);

    const LevyModel& model() const { return model_; }
    double q() const { return q_; }
    const std::vector<double>& roots() const { return roots_; }             // descending
    const std::vector<double>& coefficients() const { return coeffs_; }     // 1/psi'(root)
    double phi() const { return roots_.front(); }

    double w(double x) const;
    double log_w(double x) const;
    double w_prime(double x) const;

    double z(double theta, double x) const;
    double log_z(double theta, double x) const;
    double z_prime(double theta, double x) const;

    // Z'/Z, always >= 0; accepts theta = +infinity (then W'/W).
    double lambda_exponent(double theta, double x) const;

    ScaleEval eval(double theta, double x) const;

  private:
    LevyModel model_;
    double q_;
    std::vector<double> roots_;
    std::vector<double> coeffs_;
};

}  // namespace levytax
