#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "levytax/analytics.hpp"
#include "levytax/scale.hpp"
#include "levytax/simulate.hpp"
#include "test_helpers.hpp"

using namespace levytax;

namespace {

// Rebuild the free process from the event list and compare against the recorded
// values: Y = X + L - gamma * U with X = x0 + c t - sum of claims.
void check_reconstruction(const RefractedPath& path, double c, double gamma) {
    double claims = 0.0;
    double prev_l = 0.0;
    for (const auto& e : path.events) {
        if (e.kind == EventKind::jump) {
            claims += e.pre_value - e.post_value;
        } else if (e.kind == EventKind::injection) {
            double dl = e.l_total - prev_l;
            claims += e.pre_value - e.post_value + dl;
        }
        prev_l = e.l_total;
        double x_free = path.x0 + c * e.time - claims;
        double rebuilt = x_free + e.l_total - gamma * e.u_total;
        CHECK(e.post_value == doctest::Approx(rebuilt).epsilon(1e-10));
    }
}

}  // namespace

TEST_CASE("free path sampling: slope, jump statistics, ordering") {
    auto m = reference_model();
    const double horizon = 100.0;
    const int n = 400;
    double sum_end = 0.0, sum_count = 0.0;
    for (int i = 0; i < n; ++i) {
        CounterRng rng(11, 0, static_cast<std::uint64_t>(i));
        FreePath p = sample_free_path(m, rng, horizon);
        CHECK(p.premium_rate == m.premium_rate());
        double prev = 0.0, total = 0.0;
        for (const auto& j : p.jumps) {
            CHECK(j.time > prev);
            CHECK(j.time <= horizon);
            CHECK(j.size > 0.0);
            prev = j.time;
            total += j.size;
        }
        sum_end += p.x0 + p.premium_rate * horizon - total;
        sum_count += static_cast<double>(p.jumps.size());
    }
    // E X_H = drift * H; Var X_H = lambda H E[M^2] = 100 * 2 * 0.49 = 98.
    double mean_end = sum_end / n;
    double se_end = std::sqrt(98.0 / n);
    CHECK(std::abs(mean_end - m.drift() * horizon) < 3.0 * se_end);
    // Jump count is Poisson(lambda H = 100).
    double mean_count = sum_count / n;
    double se_count = std::sqrt(100.0 / n);
    CHECK(std::abs(mean_count - 100.0) < 3.0 * se_count);
}

TEST_CASE("event kind names") {
    CHECK(std::string(to_string(EventKind::jump)) == "jump");
    CHECK(std::string(to_string(EventKind::injection)) == "injection");
    CHECK(std::string(to_string(EventKind::barrier_touch)) == "barrier_touch");
    CHECK(std::string(to_string(EventKind::passage)) == "passage");
}

TEST_CASE("refracted path: event ordering, passage lands exactly, reconstruction") {
    auto m = reference_model();
    auto gamma = TaxRate::constant(0.5);
    int reached = 0;
    for (int i = 0; i < 100; ++i) {
        CounterRng rng(21, 0, static_cast<std::uint64_t>(i));
        auto path = refract_reflect(m, rng, gamma, 1.0, StopRule::passage_above(3.0), 400.0);
        double prev_t = 0.0, prev_l = -1.0, prev_u = -1.0;
        for (const auto& e : path.events) {
            CHECK(e.time > prev_t);
            CHECK(e.l_total >= prev_l);
            CHECK(e.u_total >= prev_u);
            prev_t = e.time;
            prev_l = e.l_total;
            prev_u = e.u_total;
            if (e.kind == EventKind::injection) CHECK(e.post_value == 0.0);
            if (e.kind == EventKind::barrier_touch || e.kind == EventKind::passage)
                CHECK(e.pre_value == e.post_value);
        }
        if (path.reached_target) {
            ++reached;
            CHECK(path.value_end == 3.0);
            CHECK(path.events.back().kind == EventKind::passage);
        }
        check_reconstruction(path, m.premium_rate(), 0.5);

        // Supremum identity for constant tax: (running max - x0) = (1 - gamma) * U.
        // A jump off the barrier records the barrier level as its pre_value, so the
        // running max must fold in pre_value, not just post-event levels.
        double run_max = path.x0;
        for (const auto& e : path.events) {
            run_max = std::max(run_max, std::max(e.pre_value, e.post_value));
            CHECK(run_max - path.x0 == doctest::Approx(0.5 * e.u_total).epsilon(1e-10));
        }
    }
    CHECK(reached > 50);  // positive drift: most paths make it to 3 within t = 400
}

TEST_CASE("full tax freezes the barrier and pays dividends at the premium rate") {
    auto m = reference_model();
    auto gamma = TaxRate::constant(1.0);
    for (int i = 0; i < 50; ++i) {
        CounterRng rng(31, 0, static_cast<std::uint64_t>(i));
        auto path = refract_reflect(m, rng, gamma, 1.0, StopRule::dividends_exceed(2.0), 1e6);
        REQUIRE(path.reached_target);
        CHECK(path.value_end == 1.0);  // stops while sitting at the frozen barrier
        for (const auto& e : path.events) {
            CHECK(e.post_value <= 1.0 + 1e-12);
        }
        CHECK(path.events.back().u_total == 2.0);
    }
}

TEST_CASE("occupation below zero from the event geometry") {
    RefractedPath p;
    p.x0 = 1.0;
    p.gamma_l = 0.0;
    p.events = {
        {2.0, EventKind::jump, 3.0, -1.0, 0.0, 0.0},
        {5.0, EventKind::jump, 2.0, -2.0, 0.0, 0.0},
        {9.0, EventKind::passage, 2.0, 2.0, 0.0, 0.0},
    };
    p.t_end = 9.0;
    p.value_end = 2.0;
    CHECK(occupation_below_zero(p, 2.0) == doctest::Approx(0.0));
    CHECK(occupation_below_zero(p, 2.5) == doctest::Approx(0.5));
    CHECK(occupation_below_zero(p, 3.0) == doctest::Approx(1.0));
    CHECK(occupation_below_zero(p, 4.0) == doctest::Approx(1.0));
    CHECK(occupation_below_zero(p, 6.0) == doctest::Approx(2.0));
    CHECK(occupation_below_zero(p, 7.0) == doctest::Approx(3.0));
    CHECK(occupation_below_zero(p, 9.0) == doctest::Approx(3.0));
    CHECK(occupation_below_zero(p, 100.0) == doctest::Approx(3.0));  // clamped at t_end

    // Monotone in t.
    CHECK(occupation_below_zero(p, 4.5) <= occupation_below_zero(p, 9.0));

    // Tail segment without a closing event.
    RefractedPath p2;
    p2.x0 = -1.0;
    p2.t_end = 4.0;
    p2.value_end = 3.0;
    CHECK(occupation_below_zero(p2, 4.0) == doctest::Approx(1.0));
    CHECK(occupation_below_zero(p2, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("trivial start at the target: mean one, zero error") {
    auto m = reference_model();
    SimConfig cfg;
    cfg.n_paths = 128;
    auto est = estimate_passage_transform(m, TaxRate::constant(0.3), 0.01, 1.0, 2.0, 2.0, cfg);
    CHECK(est.mean == 1.0);
    CHECK(est.std_error == 0.0);
    CHECK(est.capped_fraction == 0.0);

    auto est2 = estimate_two_sided_transform(m, 0.5, 0.5, 0.0, 0.01, 1.0, 2.0, 2.0, cfg);
    CHECK(est2.mean == 1.0);
    CHECK(est2.std_error == 0.0);
}

TEST_CASE("passage estimator agrees with the closed form") {
    auto m = reference_model();
    ScaleContext ctx(m, 0.01);
    SimConfig cfg;
    cfg.n_paths = 20000;
    cfg.seed = 5;

    int stream = 0;
    for (double g : {0.0, 0.5}) {
        cfg.stream = static_cast<std::uint64_t>(stream++);
        double a = taxed_passage_transform(ctx, 1.0, 1.0, 2.0, g);
        auto est = estimate_passage_transform(m, TaxRate::constant(g), 0.01, 1.0, 1.0, 2.0, cfg);
        CHECK(std::abs(est.mean - a) < 3.0 * est.std_error);
        CHECK(est.mean > 0.0);
        CHECK(est.mean < 1.0);
    }

    // theta = infinity: only injection-free passages count, and the closed form
    // switches to the ruin-avoiding ratio.
    cfg.stream = 90;
    double a_inf = taxed_passage_transform(ctx, kNoInjections, 1.0, 2.0, 0.5);
    auto est_inf =
        estimate_passage_transform(m, TaxRate::constant(0.5), 0.01, kNoInjections, 1.0, 2.0, cfg);
    CHECK(std::abs(est_inf.mean - a_inf) < 3.0 * est_inf.std_error);
    CHECK(est_inf.capped_fraction == 0.0);
}

TEST_CASE("level-dependent tax estimator agrees with the stepwise closed form") {
    auto m = reference_model();
    ScaleContext ctx(m, 0.01);
    auto pw = TaxRate::piecewise({1.0, 1.5}, {0.2, 0.6});
    double a = survival_level_dependent(ctx, 1.0, 1.0, 2.0, pw);
    SimConfig cfg;
    cfg.n_paths = 20000;
    cfg.seed = 6;
    auto est = estimate_passage_transform(m, pw, 0.01, 1.0, 1.0, 2.0, cfg);
    CHECK(std::abs(est.mean - a) < 3.0 * est.std_error);
}

TEST_CASE("dividend estimator: closed form, memorylessness, stderr scaling") {
    auto m = reference_model();
    ScaleContext ctx(m, 0.01);
    SimConfig cfg;
    cfg.n_paths = 20000;
    cfg.seed = 7;

    double a = dividend_time_transform(ctx, 1.0, 1.0, 1.0);
    auto est1 = estimate_dividend_transform(m, 0.01, 1.0, 1.0, 1.0, cfg);
    CHECK(std::abs(est1.mean - a) < 3.0 * est1.std_error);

    cfg.stream = 1;
    auto est2 = estimate_dividend_transform(m, 0.01, 1.0, 1.0, 2.0, cfg);
    double a2 = dividend_time_transform(ctx, 1.0, 1.0, 2.0);
    CHECK(std::abs(est2.mean - a2) < 3.0 * est2.std_error);

    // log E exp(-q rho_y - theta L) is linear in y.
    double lm1 = std::log(est1.mean), lm2 = std::log(est2.mean);
    double se = std::sqrt(std::pow(est2.std_error / est2.mean, 2) +
                          4.0 * std::pow(est1.std_error / est1.mean, 2));
    CHECK(std::abs(lm2 - 2.0 * lm1) < 3.0 * se);

    // stderr ~ n^{-1/2}.
    SimConfig small = cfg, big = cfg;
    small.n_paths = 4000;
    small.stream = 11;
    big.n_paths = 16000;
    big.stream = 12;
    auto es = estimate_dividend_transform(m, 0.01, 1.0, 1.0, 1.0, small);
    auto eb = estimate_dividend_transform(m, 0.01, 1.0, 1.0, 1.0, big);
    double ratio = es.std_error / eb.std_error;
    CHECK(ratio > 2.0 / 1.5);
    CHECK(ratio < 2.0 * 1.5);
}

TEST_CASE("value estimator agrees with the integral formula and its dividend limit") {
    auto m = reference_model();
    const double q = 0.05;
    ScaleContext ctx(m, q);
    SimConfig cfg;
    cfg.n_paths = 4000;
    cfg.seed = 8;

    double a = value_v(ctx, 1.0, 1.0, 0.5);
    auto est = estimate_value(m, 0.5, q, 1.0, 1.0, cfg);
    CHECK(std::abs(est.mean - a) < 3.0 * est.std_error);

    cfg.stream = 1;
    double a1 = value_v1(ctx, 1.0, 1.0);
    auto est1 = estimate_value(m, 1.0, q, 1.0, 1.0, cfg);
    CHECK(std::abs(est1.mean - a1) < 3.0 * est1.std_error);

    // Injection pricing: theta = inf values only the pre-injection stream.
    cfg.stream = 2;
    double a_inf = value_v(ctx, kNoInjections, 1.0, 0.5);
    auto est_inf = estimate_value(m, 0.5, q, kNoInjections, 1.0, cfg);
    CHECK(std::abs(est_inf.mean - a_inf) < 3.0 * est_inf.std_error);
}

TEST_CASE("estimates are bit-identical across thread counts") {
    auto m = reference_model();
    SimConfig c1;
    c1.n_paths = 8192;
    c1.seed = 7;
    c1.stream = 3;
    c1.threads = 1;
    SimConfig c4 = c1;
    c4.threads = 4;
    auto e1 = estimate_passage_transform(m, TaxRate::constant(0.5), 0.01, 1.0, 1.0, 2.0, c1);
    auto e4 = estimate_passage_transform(m, TaxRate::constant(0.5), 0.01, 1.0, 1.0, 2.0, c4);
    CHECK(e1.mean == e4.mean);
    CHECK(e1.std_error == e4.std_error);
    CHECK(e1.capped_fraction == e4.capped_fraction);
    CHECK(e1.bias_bound == e4.bias_bound);

    SimConfig other = c1;
    other.seed = 8;
    auto eo = estimate_passage_transform(m, TaxRate::constant(0.5), 0.01, 1.0, 1.0, 2.0, other);
    CHECK(eo.mean != e1.mean);
}

TEST_CASE("two-sided replay without refraction reproduces the free path") {
    FreePath fp;
    fp.x0 = 1.0;
    fp.premium_rate = 1.0;
    fp.jumps = {{1.0, 2.0}, {3.5, 0.5}};
    fp.horizon = 10.0;
    auto path = two_sided_refract(fp, 0.0, 0.0, 0.0, 1.0);
    CHECK(path.t_end == 10.0);
    CHECK(path.value_end == 8.5);  // 1 + 10 - 2.5
    double run_max = fp.x0;
    for (const auto& e : path.events) {
        CHECK(e.l_total == 0.0);
        // gamma_u = 0 diverts nothing, but U still clocks gross premium while at
        // the running maximum, so U equals the max's total growth.
        run_max = std::max(run_max, std::max(e.pre_value, e.post_value));
        CHECK(e.u_total == doctest::Approx(run_max - fp.x0).epsilon(1e-12));
        double free_val = fp.x0 + e.time - (e.time >= 3.5 ? 2.5 : (e.time >= 1.0 ? 2.0 : 0.0));
        CHECK(e.post_value == doctest::Approx(free_val).epsilon(1e-12));
    }
    double prev = -1.0;
    for (const auto& e : path.events) {
        CHECK(e.time > prev);
        prev = e.time;
    }
}

TEST_CASE("two-sided with full lower reflection matches the one-sided walker") {
    auto m = reference_model();
    auto gamma = TaxRate::constant(0.5);
    const double horizon = 300.0;
    for (int i = 0; i < 50; ++i) {
        CounterRng rng_a(41, 0, static_cast<std::uint64_t>(i));
        FreePath fp = sample_free_path(m, rng_a, horizon);
        fp.x0 = 1.0;
        auto two = two_sided_refract(fp, 1.0, 0.5, 0.0, 1.0, LowerAnchor::running_min, 0.0, 3.0);

        CounterRng rng_b(41, 0, static_cast<std::uint64_t>(i));
        auto one = refract_reflect(m, rng_b, gamma, 1.0, StopRule::passage_above(3.0), horizon);

        CHECK(two.reached_target == one.reached_target);
        CHECK(two.t_end == doctest::Approx(one.t_end).epsilon(1e-12));
        CHECK(two.value_end == doctest::Approx(one.value_end).epsilon(1e-12));
        REQUIRE(!two.events.empty());
        REQUIRE(!one.events.empty());
        CHECK(two.events.back().l_total == doctest::Approx(one.events.back().l_total).epsilon(1e-12));
        CHECK(two.events.back().u_total == doctest::Approx(one.events.back().u_total).epsilon(1e-12));
    }
}

TEST_CASE("two-sided with both rates at one stays inside the band") {
    auto m = reference_model();
    CounterRng rng(51, 0, 0);
    FreePath fp = sample_free_path(m, rng, 200.0);
    fp.x0 = 1.0;
    auto path = two_sided_refract(fp, 1.0, 1.0, 0.0, 1.0);
    REQUIRE(path.events.size() > 10);
    for (const auto& e : path.events) {
        CHECK(e.post_value >= -1e-12);
        CHECK(e.post_value <= 1.0 + 1e-12);
    }
    CHECK(path.value_end >= -1e-12);
    CHECK(path.value_end <= 1.0 + 1e-12);
}

TEST_CASE("bankruptcy estimator: zero rate closed form and occupation consistency") {
    auto m = reference_model();
    const double q = 0.05;
    const double phi = m.phi(q);
    SimConfig cfg;
    cfg.n_paths = 20000;
    cfg.seed = 9;

    int stream = 0;
    for (double g : {0.0, 0.5}) {
        cfg.stream = static_cast<std::uint64_t>(stream++);
        double a = std::exp(-phi * (2.0 - 1.0) / (1.0 - g));
        auto est = estimate_bankruptcy_transform(m, g, q, 0.0, 1.0, 2.0, cfg);
        CHECK(std::abs(est.mean - a) < 3.0 * est.std_error);
    }

    // A positive occupation rate can only shrink the transform.
    cfg.stream = 10;
    auto e0 = estimate_bankruptcy_transform(m, 0.5, q, 0.0, 1.0, 2.0, cfg);
    cfg.stream = 11;
    auto e2 = estimate_bankruptcy_transform(m, 0.5, q, 2.0, 1.0, 2.0, cfg);
    CHECK(e2.mean < e0.mean);

    // The estimator's internal occupation accumulator agrees with the event-geometry
    // reading of the same paths.
    PathOptions opts;
    opts.reflect_at_zero = false;
    opts.track_occupation = true;
    SimConfig tiny = cfg;
    tiny.n_paths = 20;
    tiny.stream = 12;
    double acc = 0.0;
    auto rate = TaxRate::constant(0.5);
    for (long i = 0; i < tiny.n_paths; ++i) {
        CounterRng rng(tiny.seed, tiny.stream, static_cast<std::uint64_t>(i));
        auto path = refract_reflect(m, rng, rate, 1.0, StopRule::passage_above(2.0),
                                    5000.0 / q, opts);
        REQUIRE(path.reached_target);
        double occ = occupation_below_zero(path, path.t_end);
        acc += std::exp(-q * path.t_end - 2.0 * occ);
    }
    auto est = estimate_bankruptcy_transform(m, 0.5, q, 2.0, 1.0, 2.0, tiny);
    CHECK(est.mean == doctest::Approx(acc / tiny.n_paths).epsilon(1e-10));
}

TEST_CASE("time cap reporting is honest") {
    auto m = reference_model();
    ScaleContext ctx(m, 0.01);
    SimConfig cfg;
    cfg.n_paths = 2000;
    cfg.seed = 10;
    cfg.t_max = 5.0;
    auto est = estimate_passage_transform(m, TaxRate::constant(0.9), 0.01, 0.0, 0.0, 6.0, cfg);
    CHECK(est.capped_fraction > 0.5);
    CHECK(est.bias_bound > 0.0);
    // With theta = 0 every capped path carries weight exp(-q t_max) exactly.
    CHECK(est.bias_bound == doctest::Approx(est.capped_fraction * std::exp(-0.05)).epsilon(1e-12));
    // Truncation bias is one-sided: analytic value sits within mean + bound (+ noise).
    double a = taxed_passage_transform(ctx, 0.0, 0.0, 6.0, 0.9);
    CHECK(est.mean <= a + 3.0 * est.std_error);
    CHECK(a <= est.mean + est.bias_bound + 3.0 * est.std_error);
}

TEST_CASE("estimator argument validation") {
    auto m = reference_model();
    SimConfig cfg;
    cfg.n_paths = 10;
    CHECK_THROWS_AS(estimate_passage_transform(m, TaxRate::constant(1.0), 0.01, 1.0, 1.0,
                                               2.0, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_passage_transform(m, TaxRate::constant(0.5), 0.01, 1.0, 2.0,
                                               1.0, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_value(m, 0.5, 0.0, 1.0, 1.0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(estimate_value(m, 0.0, 0.01, 1.0, 1.0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(estimate_two_sided_transform(m, 0.5, 1.0, 0.0, 0.01, 1.0, 1.0, 2.0, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(two_sided_refract(FreePath{1.0, 1.0, {}, 10.0}, -0.1, 0.0, 0.0, 2.0),
                    std::invalid_argument);
}
