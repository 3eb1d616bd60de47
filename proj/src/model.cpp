#include "levytax/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace levytax {

// ---------------------------------------------------------------------------
// ClaimMixture

ClaimMixture::ClaimMixture(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
    if (components_.empty())
        throw std::invalid_argument("claim mixture needs at least one component");
    double wsum = 0.0;
    for (const auto& c : components_) {
        if (!(c.weight > 0.0)) throw std::invalid_argument("mixture weights must be positive");
        if (!(c.rate > 0.0)) throw std::invalid_argument("mixture rates must be positive");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw std::invalid_argument("mixture weights must sum to 1");
    std::sort(components_.begin(), components_.end(),
              [](const MixtureComponent& a, const MixtureComponent& b) {
                  return a.rate < b.rate;
              });
    for (std::size_t i = 1; i < components_.size(); ++i) {
        if (components_[i].rate - components_[i - 1].rate < 1e-12)
            throw std::invalid_argument("mixture rates must be distinct");
    }
}

ClaimMixture ClaimMixture::exponential(double mean) {
    if (!(mean > 0.0)) throw std::invalid_argument("claim mean must be positive");
    return ClaimMixture({{1.0, 1.0 / mean}});
}

double ClaimMixture::mean() const {
    double m = 0.0;
    for (const auto& c : components_) m += c.weight / c.rate;
    return m;
}

double ClaimMixture::laplace(double alpha) const {
    double v = 0.0;
    for (const auto& c : components_) v += c.weight * c.rate / (c.rate + alpha);
    return v;
}

// ---------------------------------------------------------------------------
// LevyModel

LevyModel::LevyModel(double premium_rate, double jump_intensity, ClaimMixture claims)
    : c_(premium_rate), lambda_(jump_intensity), claims_(std::move(claims)) {
    if (!(c_ > 0.0)) throw std::invalid_argument("premium rate must be positive");
    if (lambda_ < 0.0) throw std::invalid_argument("jump intensity must be nonnegative");
}

double LevyModel::psi(double alpha) const {
    double s = 0.0;
    for (const auto& c : claims_.components()) s += c.weight * alpha / (c.rate + alpha);
    return c_ * alpha - lambda_ * s;
}

double LevyModel::psi_prime(double alpha) const {
    double s = 0.0;
    for (const auto& c : claims_.components()) {
        double d = c.rate + alpha;
        s += c.weight * c.rate / (d * d);
    }
    return c_ - lambda_ * s;
}

double LevyModel::drift() const { return c_ - lambda_ * claims_.mean(); }

namespace {

// Bisection on [lo, hi] assuming f(lo) and f(hi) have opposite signs, followed by a
// Newton polish against the analytic derivative. Residual target 1e-12 (scaled).
double refine_root(const LevyModel& m, double q, double lo, double hi) {
    double flo = m.psi(lo) - q;
    for (int i = 0; i < 120 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = m.psi(mid) - q;
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double r = 0.5 * (lo + hi);
    const double scale = 1.0 + std::abs(q) + m.premium_rate() * std::abs(r);
    for (int i = 0; i < 50; ++i) {
        double f = m.psi(r) - q;
        if (std::abs(f) <= 1e-12 * scale) break;
        double fp = m.psi_prime(r);
        if (fp == 0.0) break;
        double step = f / fp;
        double next = r - step;
        if (next <= lo || next >= hi) break;  // keep the bracket; bisection value stands
        r = next;
        if (std::abs(step) < 1e-16 * (1.0 + std::abs(r))) break;
    }
    return r;
}

// Walks from `start` toward the pole (halving the distance) until f has the wanted
// sign; f diverges to the wanted sign at the pole, so this terminates.
template <class F>
double nudge_to_sign(F&& f, double pole, double start, bool want_positive) {
    double d = start - pole;
    for (int i = 0; i < 400; ++i) {
        double v = f(pole + d);
        if (want_positive ? (v > 0.0) : (v < 0.0)) return pole + d;
        d *= 0.5;
    }
    throw NumericalDegeneracy("could not bracket a scale-function root near a pole");
}

}  // namespace

std::vector<double> LevyModel::psi_roots(double q) const {
    if (q < 0.0) throw std::invalid_argument("q must be nonnegative");
    const auto& comps = claims_.components();  // sorted ascending by rate
    const std::size_t k = comps.size();
    std::vector<double> roots;
    roots.reserve(k + 1);

    auto f = [&](double a) { return psi(a) - q; };
    auto fp = [&](double a) { return psi_prime(a); };

    // Rightmost interval (-rate_min, inf): psi is convex with a unique minimizer;
    // two roots straddle it (they merge exactly when q = min psi, the degenerate case).
    const double mu1 = comps.front().rate;
    double a = nudge_to_sign(fp, -mu1, -mu1 + 0.5 * std::min(mu1, 1.0), false);
    double b = std::max(1.0, std::abs(a) + 1.0);
    while (psi_prime(b) <= 0.0) b *= 2.0;
    for (int i = 0; i < 200 && b - a > 1e-14 * (1.0 + std::abs(a)); ++i) {
        double mid = 0.5 * (a + b);
        if (psi_prime(mid) < 0.0)
            a = mid;
        else
            b = mid;
    }
    const double argmin = 0.5 * (a + b);

    // Right root: psi increases on [argmin, inf) and psi(argmin) <= psi(0) = 0 <= q.
    double right_hi = argmin + std::max(1.0, (q - psi(argmin) + 1.0) / c_);
    while (f(right_hi) <= 0.0) right_hi = argmin + 2.0 * (right_hi - argmin);
    roots.push_back(refine_root(*this, q, argmin, right_hi));

    // Left root: psi decreases from +inf at the pole down to psi(argmin).
    double left_lo = nudge_to_sign(f, -mu1, argmin, true);
    roots.push_back(refine_root(*this, q, left_lo, argmin));

    // One root per interval between consecutive poles: psi runs from +inf (right of
    // the left pole) down to -inf (left of the right pole).
    for (std::size_t i = 0; i + 1 < k; ++i) {
        const double pr = comps[i].rate;      // right pole (closer to zero)
        const double pl = comps[i + 1].rate;  // left pole
        double mid = -0.5 * (pl + pr);
        double bl = nudge_to_sign(f, -pl, mid, true);
        double br = nudge_to_sign(f, -pr, mid, false);
        roots.push_back(refine_root(*this, q, bl, br));
    }

    // q = 0 always has the structural root at the origin; snap the numeric twin.
    if (q == 0.0) {
        for (double& r : roots)
            if (std::abs(r) < 1e-10) r = 0.0;
    }

    std::sort(roots.begin(), roots.end(), std::greater<double>());
    for (std::size_t i = 1; i < roots.size(); ++i) {
        if (roots[i - 1] - roots[i] < 1e-9)
            throw NumericalDegeneracy(
                "scale-function roots coincide (double root of psi(a) = q); the "
                "partial-fraction form is invalid here");
    }
    for (double r : roots) {
        if (std::abs(psi(r) - q) > 1e-9)
            throw NumericalDegeneracy("root refinement failed to meet residual target");
    }
    return roots;
}

double LevyModel::phi(double q) const { return psi_roots(q).front(); }

// ---------------------------------------------------------------------------
// TaxRate

TaxRate TaxRate::constant(double gamma) {
    if (gamma > 1.0) throw std::invalid_argument("tax rate must be <= 1");
    TaxRate t;
    t.levels_ = {0.0};
    t.values_ = {gamma};
    return t;
}

TaxRate TaxRate::piecewise(std::vector<double> levels, std::vector<double> values) {
    if (levels.empty() || levels.size() != values.size())
        throw std::invalid_argument("piecewise tax rate needs matching levels/values");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (!(levels[i] > levels[i - 1]))
            throw std::invalid_argument("tax rate levels must be strictly increasing");
    for (double v : values)
        if (v > 1.0 - 1e-9)
            throw std::invalid_argument("piecewise tax rates must stay bounded away from 1");
    TaxRate t;
    t.levels_ = std::move(levels);
    t.values_ = std::move(values);
    return t;
}

double TaxRate::at(double level) const {
    // Last piece whose level is <= `level`; below the first level the first piece applies.
    auto it = std::upper_bound(levels_.begin(), levels_.end(), level);
    std::size_t idx = it == levels_.begin() ? 0 : static_cast<std::size_t>(it - levels_.begin()) - 1;
    return values_[idx];
}

double TaxRate::next_breakpoint_above(double level) const {
    auto it = std::upper_bound(levels_.begin(), levels_.end(), level);
    if (it == levels_.end()) return std::numeric_limits<double>::infinity();
    return *it;
}

double TaxRate::max_gamma() const {
    return *std::max_element(values_.begin(), values_.end());
}

}  // namespace levytax
