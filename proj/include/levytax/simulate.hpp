#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "levytax/model.hpp"
#include "levytax/rng.hpp"

namespace levytax {

/*
 * Event-driven exact simulation. Paths of the Cramer-Lundberg process and all its
 * refracted/reflected transforms are piecewise linear between events, so every
 * passage time, barrier touch and injection is computed in closed form; there is no
 * time discretization anywhere.
 */

enum class EventKind { jump, injection, barrier_touch, passage };

const char* to_string(EventKind k);

struct PathEvent {
    double time;
    EventKind kind;
    double pre_value;   // value just before the event
    double post_value;  // value just after (injection events land on the boundary)
    double l_total;     // cumulative lower local time (raw, unscaled by gamma_l)
    double u_total;     // cumulative upper local time (pre-tax dividends)
};

struct RefractedPath {
    double x0 = 0.0;
    double gamma_l = 1.0;  // lower rate: 1 = reflection (full injection)
    double gamma_u = 0.0;  // upper rate: tax fraction at the running maximum
    std::vector<PathEvent> events;  // strictly increasing in time
    double t_end = 0.0;
    double value_end = 0.0;
    bool reached_target = false;
    bool capped = false;  // hit the time cap before any stop rule fired
};

// Free path over a finite horizon: initial value, premium slope, downward jumps.
struct FreeJump {
    double time;
    double size;
};
struct FreePath {
    double x0;
    double premium_rate;
    std::vector<FreeJump> jumps;  // strictly increasing times
    double horizon;
};

struct SimConfig {
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;  // substream tag; estimates with different tags are independent
    long n_paths = 100000;
    double t_max = 0.0;  // 0 = default: 5000/q when q > 0, else 1e6
    int threads = 1;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long n = 0;
    double capped_fraction = 0.0;  // fraction of paths that hit the time cap
    double bias_bound = 0.0;       // bound on truncation bias from capped/early-stopped paths
};

// Exact free path: exponential inter-jump times, mixture claim sizes.
FreePath sample_free_path(const LevyModel& model, CounterRng& rng, double horizon);

// Stop rules for single-path simulation.
struct StopRule {
    enum class Kind { passage_above, dividends_exceed, time_cap_only };
    Kind kind = Kind::time_cap_only;
    double threshold = 0.0;
    static StopRule passage_above(double y) { return {Kind::passage_above, y}; }
    static StopRule dividends_exceed(double y) { return {Kind::dividends_exceed, y}; }
    static StopRule time_cap_only() { return {}; }
};

struct PathOptions {
    bool reflect_at_zero = true;   // false: no lower boundary (bankruptcy setting)
    bool track_occupation = false; // accumulate time spent strictly below zero
};

// Taxed + injected process per the loss-carry-forward model: refraction at rate
// gamma(level) at the running maximum, full reflection at zero (a claim carrying the
// value below 0 triggers an injection lump equal to the deficit). Returns the full
// event list. gamma constant = 1 freezes the barrier (pure dividend collection).
RefractedPath refract_reflect(const LevyModel& model, CounterRng& rng, const TaxRate& gamma,
                              double x0, const StopRule& stop, double t_max,
                              const PathOptions& opts = {});

// Lebesgue time the path spends strictly below zero on [0, t], from the piecewise
// linear interpolation of the events.
double occupation_below_zero(const RefractedPath& path, double t);

// Anchor policy for the lower barrier in two-sided refraction.
enum class LowerAnchor {
    running_min,     // textbook alternating construction: barrier = historical minimum
    fixed_level,     // every lower episode refracts at the original level a
    fixed_distance,  // every lower episode refracts at (current running max - param)
};

// Two-sided refraction of a given free path: alternating one-sided refraction episodes
// glued at the crossing times, giving Y = X + gamma_l * L - gamma_u * U. Starts in the
// upper episode when x0 = b. Throws NonTermination beyond 1e6 episodes/segments.
RefractedPath two_sided_refract(const FreePath& free, double gamma_l, double gamma_u,
                                double a, double b,
                                LowerAnchor anchor = LowerAnchor::running_min,
                                double anchor_param = 0.0,
                                double passage_target = -1.0);

// Monte Carlo estimators. Payoffs use the exact weights exp(-q T - theta L): the
// exponential discount and injection clocks are integrated out analytically instead of
// sampled, which removes two sources of variance. Paths stopped by the time cap (or
// once their weight falls below 1e-15) contribute 0 and their remaining weight is
// accumulated into bias_bound.

// E^gamma_x exp(-q T_y - theta L_{T_y}) for the taxed + injected process.
McEstimate estimate_passage_transform(const LevyModel& model, const TaxRate& gamma,
                                      double q, double theta, double x, double y,
                                      const SimConfig& cfg);

// gamma = 1: E^1_x exp(-q rho_y - theta L_{rho_y}), rho_y = first time U > y.
McEstimate estimate_dividend_transform(const LevyModel& model, double q, double theta,
                                       double x, double y, const SimConfig& cfg);

// gamma/(1-gamma) * E Int exp(-q t - theta L_t) dYbar_t (gamma < 1), or
// E Int exp(-q t - theta L_t) dU_t (gamma = 1). Requires q > 0.
McEstimate estimate_value(const LevyModel& model, double gamma, double q, double theta,
                          double x, const SimConfig& cfg);

// Refraction-only process (no reflection at zero) with occupation-time bankruptcy:
// E^gamma_x[ exp(-q tau_y^+) ; tau_y^+ < nu_theta ]
//   = E^gamma_x exp(-q tau_y^+ - theta * occupation below 0 before tau_y^+).
McEstimate estimate_bankruptcy_transform(const LevyModel& model, double gamma, double q,
                                         double theta, double x, double y,
                                         const SimConfig& cfg);

// E exp(-q T_y - theta L_{T_y}) for the two-sided refracted process (T_y = passage of
// Y above y, L the raw lower local time).
McEstimate estimate_two_sided_transform(const LevyModel& model, double gamma_l,
                                        double gamma_u, double a, double q, double theta,
                                        double x, double y, const SimConfig& cfg,
                                        LowerAnchor anchor = LowerAnchor::running_min,
                                        double anchor_param = 0.0);

}  // namespace levytax
