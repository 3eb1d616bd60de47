#include "levytax/simulate.hpp"

#include "levytax/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

namespace levytax {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Paths whose remaining discount weight exp(-q t - theta L) falls below this floor are
// abandoned; the weight itself is added to bias_bound.
constexpr double kWeightFloor = 1e-15;
constexpr long kSegmentBudget = 1000000;

double default_t_max(double q, double requested) {
    if (requested > 0.0) return requested;
    return q > 0.0 ? 5000.0 / q : 1e6;
}

// exp(-q t - theta l), with theta = inf meaning "any injection kills the payoff".
double discount_weight(double q, double t, double theta, double l) {
    if (std::isinf(theta)) return l > 0.0 ? 0.0 : std::exp(-q * t);
    return std::exp(-q * t - theta * l);
}

struct ClaimSampler {
    std::vector<double> cum_weight;
    std::vector<double> rate;

    explicit ClaimSampler(const ClaimMixture& mix) {
        double c = 0.0;
        for (const auto& comp : mix.components()) {
            c += comp.weight;
            cum_weight.push_back(c);
            rate.push_back(comp.rate);
        }
        cum_weight.back() = 1.0;
    }

    double sample(CounterRng& rng) const {
        std::size_t idx = 0;
        if (rate.size() > 1) {
            double u = rng.uniform01();
            while (idx + 1 < rate.size() && u > cum_weight[idx]) ++idx;
        }
        return rng.exponential(rate[idx]);
    }
};

// Jump sources: the walkers only ever ask "how long until the next claim, and how big
// is it once it lands", so a recorded path and a live generator are interchangeable.
struct GenerativeJumps {
    const LevyModel* model;
    const ClaimSampler* sampler;
    CounterRng* rng;
    double next_wait() {
        if (model->jump_intensity() <= 0.0) return kInf;
        return rng->exponential(model->jump_intensity());
    }
    double claim_size() { return sampler->sample(*rng); }
};

struct ReplayJumps {
    const FreePath* path;
    std::size_t idx = 0;
    double t_prev = 0.0;
    double next_wait() {
        if (idx >= path->jumps.size()) return kInf;
        return path->jumps[idx].time - t_prev;
    }
    double claim_size() {
        double s = path->jumps[idx].size;
        t_prev = path->jumps[idx].time;
        ++idx;
        return s;
    }
};

}  // namespace

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::jump: return "jump";
        case EventKind::injection: return "injection";
        case EventKind::barrier_touch: return "barrier_touch";
        case EventKind::passage: return "passage";
    }
    return "?";
}

FreePath sample_free_path(const LevyModel& model, CounterRng& rng, double horizon) {
    FreePath out;
    out.x0 = 0.0;
    out.premium_rate = model.premium_rate();
    out.horizon = horizon;
    ClaimSampler sampler(model.claims());
    GenerativeJumps src{&model, &sampler, &rng};
    double t = 0.0;
    while (true) {
        double w = src.next_wait();
        if (!(t + w <= horizon)) break;
        t += w;
        out.jumps.push_back({t, src.claim_size()});
    }
    return out;
}

// ---------------------------------------------------------------------------
// One-sided walker: refraction at the running maximum, optional reflection at zero.

namespace {

enum class WalkEnd { target, capped, visitor_stop };

struct WalkResult {
    WalkEnd end = WalkEnd::capped;
    double t = 0.0;
    double value = 0.0;
    double l = 0.0;
    double u = 0.0;
    double occupation = 0.0;
};

struct NullVisitor {
    bool on_event(const PathEvent&) { return true; }
    void on_at_max_segment(double, double, double, double, double) {}
};

/*
 * Exact stepping of the taxed/injected process. The path is linear between events:
 * slope c strictly below the running maximum, slope (1 - gamma(level)) * c while at it
 * (the level and the maximum move together), claims are instantaneous. Reflection at
 * zero converts the deficit of a crossing claim into an injection lump. Every slope
 * change (barrier touch, tax breakpoint) is an emitted event, so consumers may treat
 * consecutive events as linear segments.
 */
template <class Jumps, class Visitor>
WalkResult walk_refracted(const LevyModel& model, const TaxRate& gamma, double x0,
                          const StopRule& stop, double t_max, const PathOptions& opts,
                          Jumps& jumps, Visitor& vis) {
    const double c = model.premium_rate();
    double t = 0.0, v = x0, lvl = x0, l = 0.0, u = 0.0, occ = 0.0;
    bool at_max = true;
    long steps = 0;

    auto result = [&](WalkEnd end) {
        return WalkResult{end, t, v, l, u, occ};
    };
    auto emit = [&](EventKind kind, double pre, double post) {
        return vis.on_event(PathEvent{t, kind, pre, post, l, u});
    };

    const bool want_level = stop.kind == StopRule::Kind::passage_above;
    const bool want_u = stop.kind == StopRule::Kind::dividends_exceed;

    if (want_level && x0 >= stop.threshold) {
        emit(EventKind::passage, v, v);
        return result(WalkEnd::target);
    }
    if (want_u && stop.threshold <= 0.0) {
        emit(EventKind::passage, v, v);
        return result(WalkEnd::target);
    }

    while (true) {
        if (++steps > kSegmentBudget)
            throw NonTermination("refracted path exceeded the segment budget");
        double t_jump = t + jumps.next_wait();

        // Drift phase until the jump (or cap / stop rule).
        bool jump_due = false;
        while (true) {
            if (at_max) {
                const double g = gamma.at(lvl);
                const double s = (1.0 - g) * c;
                double t_end = std::min(t_jump, t_max);
                int what = t_jump <= t_max ? 0 : 1;  // 0 jump, 1 cap, 2 passage, 3 u-target, 4 break
                if (want_level && s > 0.0) {
                    double tp = t + (stop.threshold - lvl) / s;
                    if (tp <= t_end) {
                        t_end = tp;
                        what = 2;
                    }
                }
                if (want_u) {
                    double tu = t + (stop.threshold - u) / c;
                    if (tu <= t_end) {
                        t_end = tu;
                        what = 3;
                    }
                }
                double brk = gamma.next_breakpoint_above(lvl);
                if (s > 0.0 && std::isfinite(brk)) {
                    double tb = t + (brk - lvl) / s;
                    if (tb < t_end) {
                        t_end = tb;
                        what = 4;
                    }
                }
                const double dt = t_end - t;
                if (dt > 0.0) vis.on_at_max_segment(t, t_end, lvl, s, l);
                lvl += s * dt;
                v = lvl;
                u += c * dt;
                t = t_end;
                if (what == 2) {
                    lvl = stop.threshold;  // land exactly on the target
                    v = lvl;
                    emit(EventKind::passage, v, v);
                    return result(WalkEnd::target);
                }
                if (what == 3) {
                    u = stop.threshold;
                    emit(EventKind::passage, v, v);
                    return result(WalkEnd::target);
                }
                if (what == 4) {
                    lvl = brk;
                    v = lvl;
                    if (!emit(EventKind::barrier_touch, v, v))
                        return result(WalkEnd::visitor_stop);
                    continue;
                }
                if (what == 1) return result(WalkEnd::capped);
                jump_due = true;
                break;
            } else {
                // Strictly below the maximum: slope c toward the barrier.
                double t_touch = t + (lvl - v) / c;
                double t_end = std::min({t_jump, t_max, t_touch});
                if (opts.track_occupation && v < 0.0) {
                    occ += std::min(t_end - t, -v / c);
                }
                double dt = t_end - t;
                v += c * dt;
                t = t_end;
                if (t == t_touch && t_touch <= std::min(t_jump, t_max)) {
                    v = lvl;
                    at_max = true;
                    if (!emit(EventKind::barrier_touch, v, v))
                        return result(WalkEnd::visitor_stop);
                    if (t_jump == t) {
                        jump_due = true;
                        break;
                    }
                    continue;
                }
                if (t == t_jump && t_jump <= t_max) {
                    jump_due = true;
                    break;
                }
                return result(WalkEnd::capped);
            }
        }
        if (!jump_due) continue;

        const double m = jumps.claim_size();
        const double pre = v;
        double post = v - m;
        at_max = false;
        if (opts.reflect_at_zero && post < 0.0) {
            double dl = -post;
            l += dl;
            v = 0.0;
            if (!emit(EventKind::injection, pre, v)) return result(WalkEnd::visitor_stop);
        } else {
            v = post;
            if (!emit(EventKind::jump, pre, v)) return result(WalkEnd::visitor_stop);
        }
    }
}

struct EventCollector {
    std::vector<PathEvent>* out;
    bool on_event(const PathEvent& e) {
        out->push_back(e);
        return true;
    }
    void on_at_max_segment(double, double, double, double, double) {}
};

}  // namespace

RefractedPath refract_reflect(const LevyModel& model, CounterRng& rng, const TaxRate& gamma,
                              double x0, const StopRule& stop, double t_max,
                              const PathOptions& opts) {
    if (x0 < 0.0) throw std::invalid_argument("x0 must be nonnegative");
    RefractedPath path;
    path.x0 = x0;
    path.gamma_l = opts.reflect_at_zero ? 1.0 : 0.0;
    path.gamma_u = gamma.is_constant() ? gamma.at(x0) : -1.0;
    ClaimSampler sampler(model.claims());
    GenerativeJumps src{&model, &sampler, &rng};
    EventCollector vis{&path.events};
    auto r = walk_refracted(model, gamma, x0, stop, t_max, opts, src, vis);
    path.t_end = r.t;
    path.value_end = r.value;
    path.reached_target = r.end == WalkEnd::target;
    path.capped = r.end == WalkEnd::capped;
    return path;
}

double occupation_below_zero(const RefractedPath& path, double t) {
    // Piecewise-linear interpolation between consecutive events; jumps are vertical.
    auto below = [](double t0, double v0, double t1, double v1, double cut) {
        // time in [t0, min(t1, cut)] with the linear segment strictly below zero
        double end = std::min(t1, cut);
        if (end <= t0) return 0.0;
        if (v0 >= 0.0 && v1 >= 0.0) return 0.0;
        double slope = t1 > t0 ? (v1 - v0) / (t1 - t0) : 0.0;
        if (v0 < 0.0 && v1 < 0.0) return end - t0;
        if (v0 < 0.0) {  // rising through zero
            double tz = t0 - v0 / slope;
            return std::min(end, tz) - t0;
        }
        // falling through zero (does not occur for upward-drifting segments, kept for
        // completeness)
        double tz = t0 - v0 / slope;
        return tz >= end ? 0.0 : end - tz;
    };
    double acc = 0.0;
    double t0 = 0.0, v0 = path.x0;
    for (const auto& e : path.events) {
        if (t0 >= t) break;
        acc += below(t0, v0, e.time, e.pre_value, t);
        t0 = e.time;
        v0 = e.post_value;
    }
    // Tail after the last event, linear toward (t_end, value_end). Queries beyond
    // t_end clamp there: the path carries no information past its own end.
    if (t0 < t && path.t_end > t0) {
        acc += below(t0, v0, path.t_end, path.value_end, t);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Two-sided refraction: alternating one-sided episodes glued at crossing times.

namespace {

struct TwoSidedResult {
    WalkEnd end = WalkEnd::capped;
    double t = 0.0;
    double value = 0.0;
    double l = 0.0;
    double u = 0.0;
};

/*
 * Episode automaton for Y = X + gamma_l * L - gamma_u * U. An upper episode refracts
 * at the barrier reached so far and ends when a claim drops Y below the lower trigger;
 * a lower episode refracts (from below) at its anchor level and ends when the drift
 * carries Y back up to the barrier. The anchor policy decides where refraction from
 * below acts: the historical minimum (textbook construction), the fixed level a, or a
 * fixed distance below the running maximum.
 */
template <class Jumps, class Visitor>
TwoSidedResult walk_two_sided(double premium_rate, double x0, double gamma_l,
                              double gamma_u, double a, double b, LowerAnchor anchor,
                              double anchor_param, double target, double t_max,
                              Jumps& jumps, Visitor& vis) {
    if (!(b >= a)) throw std::invalid_argument("two-sided refraction needs a <= b");
    if (x0 < a || x0 > b) throw std::invalid_argument("two-sided refraction needs x0 in [a, b]");
    const double c = premium_rate;
    const bool want_target = target >= x0;

    double t = 0.0, v = x0, l = 0.0, u = 0.0;
    double bar = b;       // running maximum once touched; refraction level of upper episodes
    double a_hist = a;    // historical minimum barrier (running_min anchor)
    enum class Phase { free_run, upper, lower };
    Phase phase = x0 >= b ? Phase::upper : Phase::free_run;
    bool at_max = x0 >= b;

    // Lower-episode state.
    double a_epi = a, x_min = a, l_epi = 0.0, epi_min = a;

    auto lower_trigger = [&]() {
        switch (anchor) {
            case LowerAnchor::running_min: return a_hist;
            case LowerAnchor::fixed_level: return a;
            case LowerAnchor::fixed_distance: return bar - anchor_param;
        }
        return a_hist;
    };

    auto result = [&](WalkEnd end) { return TwoSidedResult{end, t, v, l, u}; };
    auto emit = [&](EventKind kind, double pre, double post) {
        return vis.on_event(PathEvent{t, kind, pre, post, l, u});
    };

    auto enter_lower = [&](double entry_x) {
        // entry_x is the free-frame value (already below the anchor level).
        phase = Phase::lower;
        a_epi = lower_trigger();
        x_min = entry_x;
        l_epi = a_epi - entry_x;
        epi_min = entry_x + gamma_l * l_epi;
        l += l_epi;
        v = epi_min;
    };

    long steps = 0;
    while (true) {
        if (++steps > kSegmentBudget)
            throw NonTermination("two-sided refraction exceeded the segment budget");
        double t_jump = t + jumps.next_wait();

        // ---- drift until the jump (or cap/target/phase change)
        bool jump_due = false;
        while (true) {
            if (phase == Phase::upper && at_max) {
                const double s = (1.0 - gamma_u) * c;
                double t_end = std::min(t_jump, t_max);
                int what = t_jump <= t_max ? 0 : 1;
                if (want_target) {
                    double tp = bar >= target ? t : (s > 0.0 ? t + (target - bar) / s : kInf);
                    if (tp <= t_end) {
                        t_end = tp;
                        what = 2;
                    }
                }
                double dt = t_end - t;
                bar += s * dt;
                v = bar;
                u += c * dt;
                t = t_end;
                if (what == 2) {
                    bar = std::max(bar, target);
                    v = bar;
                    emit(EventKind::passage, v, v);
                    return result(WalkEnd::target);
                }
                if (what == 1) return result(WalkEnd::capped);
                jump_due = true;
                break;
            }
            // Linear climb at slope c: free episode, below-max upper episode, or lower
            // episode (refraction from below never slows the drift).
            double ceiling = phase == Phase::upper ? bar : (phase == Phase::free_run ? b : bar);
            double t_touch = v < ceiling ? t + (ceiling - v) / c : t;
            double t_end = std::min({t_jump, t_max, t_touch});
            int what = 0;  // 0 jump, 1 cap, 2 target, 3 touch
            if (t_touch <= std::min(t_jump, t_max)) what = 3;
            else if (t_max < t_jump) what = 1;
            if (want_target && target <= v + c * (t_end - t) && target > v) {
                double tp = t + (target - v) / c;
                if (tp <= t_end) {
                    t_end = tp;
                    what = 2;
                }
            }
            double dt = t_end - t;
            v += c * dt;
            t = t_end;
            if (what == 2) {
                v = target;
                emit(EventKind::passage, v, v);
                return result(WalkEnd::target);
            }
            if (what == 1) return result(WalkEnd::capped);
            if (what == 3) {
                v = ceiling;
                if (phase == Phase::free_run) {
                    bar = b;
                } else if (phase == Phase::lower) {
                    a_hist = std::min(a_hist, epi_min);
                }
                phase = Phase::upper;
                at_max = true;
                if (!emit(EventKind::barrier_touch, v, v)) return result(WalkEnd::visitor_stop);
                if (t_jump == t) {
                    jump_due = true;
                    break;
                }
                continue;
            }
            jump_due = true;
            break;
        }
        if (!jump_due) continue;

        // ---- claim
        const double m = jumps.claim_size();
        const double pre = v;
        if (phase == Phase::lower) {
            double x_cur = v - gamma_l * l_epi;
            double x_post = x_cur - m;
            if (x_post < x_min) {
                double dl = x_min - x_post;
                x_min = x_post;
                l_epi += dl;
                l += dl;
                v = x_post + gamma_l * l_epi;
                epi_min = std::min(epi_min, v);
                if (!emit(dl > 0.0 ? EventKind::injection : EventKind::jump, pre, v))
                    return result(WalkEnd::visitor_stop);
            } else {
                v -= m;
                epi_min = std::min(epi_min, v);
                if (!emit(EventKind::jump, pre, v)) return result(WalkEnd::visitor_stop);
            }
        } else {
            double post = v - m;
            at_max = false;
            double trig = lower_trigger();
            if (phase != Phase::free_run && post < trig) {
                // Upper episode ends; the lower refraction responds to this claim
                // immediately (one merged event).
                enter_lower(post);
                if (!emit(gamma_l > 0.0 ? EventKind::injection : EventKind::jump, pre, v))
                    return result(WalkEnd::visitor_stop);
            } else if (phase == Phase::free_run && post < a) {
                enter_lower(post);
                if (!emit(gamma_l > 0.0 ? EventKind::injection : EventKind::jump, pre, v))
                    return result(WalkEnd::visitor_stop);
            } else {
                v = post;
                if (!emit(EventKind::jump, pre, v)) return result(WalkEnd::visitor_stop);
            }
        }
    }
}

}  // namespace

RefractedPath two_sided_refract(const FreePath& free, double gamma_l, double gamma_u,
                                double a, double b, LowerAnchor anchor, double anchor_param,
                                double passage_target) {
    if (gamma_l < 0.0 || gamma_l > 1.0 || gamma_u < 0.0 || gamma_u > 1.0)
        throw std::invalid_argument("two-sided rates must lie in [0, 1]");
    RefractedPath path;
    path.x0 = free.x0;
    path.gamma_l = gamma_l;
    path.gamma_u = gamma_u;
    ReplayJumps src{&free};
    EventCollector vis{&path.events};
    auto r = walk_two_sided(free.premium_rate, free.x0, gamma_l, gamma_u, a, b, anchor,
                            anchor_param, passage_target, free.horizon, src, vis);
    path.t_end = r.t;
    path.value_end = r.value;
    path.reached_target = r.end == WalkEnd::target;
    path.capped = r.end == WalkEnd::capped;
    return path;
}

// ---------------------------------------------------------------------------
// Monte Carlo driver: fixed-size blocks accumulated in index order, so the estimate is
// bit-identical for any worker count.

namespace {

struct PathOutcome {
    double payoff = 0.0;
    bool capped = false;
    double bias = 0.0;
};

struct BlockAccum {
    double sum = 0.0;
    double sum_sq = 0.0;
    long capped = 0;
    double bias = 0.0;
};

template <class PathFn>
McEstimate run_mc(const SimConfig& cfg, PathFn&& per_path) {
    if (cfg.n_paths <= 0) throw std::invalid_argument("n_paths must be positive");
    const long n = cfg.n_paths;
    const long block = 1024;
    const long nblocks = (n + block - 1) / block;
    std::vector<BlockAccum> acc(static_cast<std::size_t>(nblocks));

    auto run_block = [&](long bi) {
        BlockAccum a;
        const long lo = bi * block;
        const long hi = std::min(n, lo + block);
        for (long i = lo; i < hi; ++i) {
            PathOutcome o = per_path(static_cast<std::uint64_t>(i));
            a.sum += o.payoff;
            a.sum_sq += o.payoff * o.payoff;
            if (o.capped) ++a.capped;
            a.bias += o.bias;
        }
        acc[static_cast<std::size_t>(bi)] = a;
    };

    int workers = std::max(1, cfg.threads);
    if (workers == 1 || nblocks == 1) {
        for (long bi = 0; bi < nblocks; ++bi) run_block(bi);
    } else {
        std::atomic<long> next{0};
        std::vector<std::thread> pool;
        int nw = static_cast<int>(std::min<long>(workers, nblocks));
        pool.reserve(static_cast<std::size_t>(nw));
        for (int w = 0; w < nw; ++w) {
            pool.emplace_back([&] {
                long bi;
                while ((bi = next.fetch_add(1)) < nblocks) run_block(bi);
            });
        }
        for (auto& th : pool) th.join();
    }

    double sum = 0.0, sum_sq = 0.0, bias = 0.0;
    long capped = 0;
    for (const auto& a : acc) {
        sum += a.sum;
        sum_sq += a.sum_sq;
        capped += a.capped;
        bias += a.bias;
    }
    McEstimate est;
    est.n = n;
    est.mean = sum / static_cast<double>(n);
    double var = n > 1 ? std::max(0.0, (sum_sq - sum * sum / n) / (n - 1)) : 0.0;
    est.std_error = std::sqrt(var / static_cast<double>(n));
    est.capped_fraction = static_cast<double>(capped) / static_cast<double>(n);
    est.bias_bound = bias / static_cast<double>(n);
    return est;
}

// Visitor that abandons a path once its discount weight cannot matter.
struct FloorVisitor {
    double q, theta;
    double stop_weight = 0.0;
    bool on_event(const PathEvent& e) {
        double w = discount_weight(q, e.time, theta, e.l_total);
        if (w < kWeightFloor) {
            stop_weight = w;
            return false;
        }
        return true;
    }
    void on_at_max_segment(double, double, double, double, double) {}
};

void check_rates(double q, double theta) {
    if (q < 0.0) throw std::invalid_argument("q must be nonnegative");
    if (!(theta >= 0.0)) throw std::invalid_argument("theta must be nonnegative");
}

}  // namespace

McEstimate estimate_passage_transform(const LevyModel& model, const TaxRate& gamma,
                                      double q, double theta, double x, double y,
                                      const SimConfig& cfg) {
    check_rates(q, theta);
    if (x < 0.0 || y < x) throw std::invalid_argument("need 0 <= x <= y");
    if (gamma.max_gamma() >= 1.0)
        throw std::invalid_argument("passage estimation needs gamma < 1 (use the dividend estimator)");
    if (model.drift() <= 0.0 && q == 0.0 && theta == 0.0)
        throw std::invalid_argument("with nonpositive drift the passage time is heavy-tailed; need q > 0 or theta > 0");
    const double t_max = default_t_max(q, cfg.t_max);
    ClaimSampler sampler(model.claims());
    auto stop = StopRule::passage_above(y);
    return run_mc(cfg, [&, t_max](std::uint64_t i) {
        CounterRng rng(cfg.seed, cfg.stream, i);
        GenerativeJumps src{&model, &sampler, &rng};
        FloorVisitor vis{q, theta};
        auto r = walk_refracted(model, gamma, x, stop, t_max, PathOptions{}, src, vis);
        PathOutcome o;
        if (r.end == WalkEnd::target) {
            o.payoff = discount_weight(q, r.t, theta, r.l);
        } else {
            o.capped = r.end == WalkEnd::capped;
            o.bias = discount_weight(q, r.t, theta, r.l);
        }
        return o;
    });
}

McEstimate estimate_dividend_transform(const LevyModel& model, double q, double theta,
                                       double x, double y, const SimConfig& cfg) {
    check_rates(q, theta);
    if (x < 0.0 || y < 0.0) throw std::invalid_argument("need x >= 0 and y >= 0");
    const double t_max = default_t_max(q, cfg.t_max);
    ClaimSampler sampler(model.claims());
    auto gamma = TaxRate::constant(1.0);
    auto stop = StopRule::dividends_exceed(y);
    return run_mc(cfg, [&, t_max](std::uint64_t i) {
        CounterRng rng(cfg.seed, cfg.stream, i);
        GenerativeJumps src{&model, &sampler, &rng};
        FloorVisitor vis{q, theta};
        auto r = walk_refracted(model, gamma, x, stop, t_max, PathOptions{}, src, vis);
        PathOutcome o;
        if (r.end == WalkEnd::target) {
            o.payoff = discount_weight(q, r.t, theta, r.l);
        } else {
            o.capped = r.end == WalkEnd::capped;
            o.bias = discount_weight(q, r.t, theta, r.l);
        }
        return o;
    });
}

namespace {

// Accumulates gamma * c * Int exp(-q t - theta L_t) dt over at-max stretches, which
// equals gamma/(1-gamma) Int e^{-qt-theta L} dYbar (and Int e^{-qt-theta L} dU at
// gamma = 1).
struct ValueVisitor {
    double q, theta, gamma, c;
    double integral = 0.0;
    bool on_event(const PathEvent& e) {
        return discount_weight(q, e.time, theta, e.l_total) >= kWeightFloor;
    }
    void on_at_max_segment(double t0, double t1, double, double, double l) {
        double wl = std::isinf(theta) ? (l > 0.0 ? 0.0 : 1.0) : std::exp(-theta * l);
        if (wl == 0.0) return;
        // Int_{t0}^{t1} e^{-qt} dt = e^{-q t0} (1 - e^{-q dt})/q
        double seg = std::exp(-q * t0) * (-std::expm1(-q * (t1 - t0))) / q;
        integral += gamma * c * wl * seg;
    }
};

}  // namespace

McEstimate estimate_value(const LevyModel& model, double gamma, double q, double theta,
                          double x, const SimConfig& cfg) {
    check_rates(q, theta);
    if (!(q > 0.0)) throw std::invalid_argument("value estimation needs q > 0");
    if (!(gamma > 0.0) || gamma > 1.0)
        throw std::invalid_argument("value estimation needs 0 < gamma <= 1");
    if (x < 0.0) throw std::invalid_argument("need x >= 0");
    const double t_max = default_t_max(q, cfg.t_max);
    ClaimSampler sampler(model.claims());
    auto rate = TaxRate::constant(gamma);
    auto stop = StopRule::time_cap_only();
    const double c = model.premium_rate();
    return run_mc(cfg, [&, t_max, c](std::uint64_t i) {
        CounterRng rng(cfg.seed, cfg.stream, i);
        GenerativeJumps src{&model, &sampler, &rng};
        ValueVisitor vis{q, theta, gamma, c};
        auto r = walk_refracted(model, rate, x, stop, t_max, PathOptions{}, src, vis);
        PathOutcome o;
        o.payoff = vis.integral;
        o.capped = r.end == WalkEnd::capped;
        // Remaining tax stream is at most gamma * c * weight / q.
        double w = discount_weight(q, r.t, theta, r.l);
        o.bias = gamma * c * w / q;
        return o;
    });
}

McEstimate estimate_bankruptcy_transform(const LevyModel& model, double gamma, double q,
                                         double theta, double x, double y,
                                         const SimConfig& cfg) {
    check_rates(q, theta);
    if (x < 0.0 || y < x) throw std::invalid_argument("need 0 <= x <= y");
    if (gamma >= 1.0) throw std::invalid_argument("bankruptcy estimation needs gamma < 1");
    if (model.drift() <= 0.0 && q == 0.0 && theta == 0.0)
        throw std::invalid_argument("with nonpositive drift the passage time is heavy-tailed; need q > 0 or theta > 0");
    const double t_max = default_t_max(q, cfg.t_max);
    ClaimSampler sampler(model.claims());
    auto rate = TaxRate::constant(gamma);
    auto stop = StopRule::passage_above(y);
    PathOptions opts;
    opts.reflect_at_zero = false;
    opts.track_occupation = true;
    return run_mc(cfg, [&, t_max](std::uint64_t i) {
        CounterRng rng(cfg.seed, cfg.stream, i);
        GenerativeJumps src{&model, &sampler, &rng};
        // Floor on the time weight alone: the occupation term only shrinks the payoff
        // further, so exp(-q t) < floor still bounds the abandoned mass.
        FloorVisitor vis{q, 0.0};
        auto r = walk_refracted(model, rate, x, stop, t_max, opts, src, vis);
        PathOutcome o;
        if (r.end == WalkEnd::target) {
            o.payoff = discount_weight(q, r.t, theta, r.occupation);
        } else {
            o.capped = r.end == WalkEnd::capped;
            o.bias = discount_weight(q, r.t, theta, r.occupation);
        }
        return o;
    });
}

McEstimate estimate_two_sided_transform(const LevyModel& model, double gamma_l,
                                        double gamma_u, double a, double q, double theta,
                                        double x, double y, const SimConfig& cfg,
                                        LowerAnchor anchor, double anchor_param) {
    check_rates(q, theta);
    if (gamma_l < 0.0 || gamma_l > 1.0 || gamma_u < 0.0 || gamma_u >= 1.0)
        throw std::invalid_argument("need gamma_l in [0,1] and gamma_u in [0,1)");
    if (x < a || y < x) throw std::invalid_argument("need a <= x <= y");
    const double t_max = default_t_max(q, cfg.t_max);
    ClaimSampler sampler(model.claims());
    return run_mc(cfg, [&, t_max](std::uint64_t i) {
        CounterRng rng(cfg.seed, cfg.stream, i);
        GenerativeJumps src{&model, &sampler, &rng};
        FloorVisitor vis{q, theta};
        auto r = walk_two_sided(model.premium_rate(), x, gamma_l, gamma_u, a, x, anchor,
                                anchor_param, y, t_max, src, vis);
        PathOutcome o;
        if (r.end == WalkEnd::target) {
            o.payoff = discount_weight(q, r.t, theta, r.l);
        } else {
            o.capped = r.end == WalkEnd::capped;
            o.bias = discount_weight(q, r.t, theta, r.l);
        }
        return o;
    });
}

}  // namespace levytax
