#pragma once

#include <cmath>
#include <functional>

#include "levytax/model.hpp"

// Reference model used throughout: unit premium, unit claim intensity, exponential
// claims with mean 0.7, so net drift 0.3.
inline levytax::LevyModel reference_model(double claim_mean = 0.7) {
    return levytax::LevyModel(1.0, 1.0, levytax::ClaimMixture::exponential(claim_mean));
}

inline levytax::LevyModel three_component_model() {
    return levytax::LevyModel(
        1.2, 0.9,
        levytax::ClaimMixture({{0.5, 2.0}, {0.3, 0.8}, {0.2, 5.0}}));
}

// Oracle root finder: plain bisection on a bracket with a guaranteed sign change.
// Deliberately naive and independent of the library's Newton-polished implementation.
inline double bisect_oracle(const std::function<double(double)>& f, double lo, double hi,
                            int iters = 200) {
    double flo = f(lo);
    for (int i = 0; i < iters; ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if ((flo < 0) == (fm < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}
