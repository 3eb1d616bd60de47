#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "levytax/verify.hpp"
#include "test_helpers.hpp"

using namespace levytax;

TEST_CASE("identity suite: expected checks present, sorted, and passing") {
    auto m = reference_model();
    VerifySettings settings;
    SimConfig cfg;
    cfg.n_paths = 20000;
    cfg.seed = 3;
    auto reports = run_identity_suite(m, settings, cfg);

    std::vector<std::string> names;
    for (const auto& r : reports) names.push_back(r.check_name);
    auto sorted = names;
    std::sort(sorted.begin(), sorted.end());
    CHECK(names == sorted);

    std::set<std::string> have(names.begin(), names.end());
    for (const char* expect :
         {"power_gamma_0.00", "power_gamma_0.30", "power_gamma_0.50", "power_gamma_0.80",
          "dividend_y_0.50", "dividend_y_1.00", "dividend_y_2.00", "dividend_loglinear",
          "value_gamma_0.50", "value_dividends", "leveldep_two_piece", "bankruptcy_power",
          "twosided_violation", "twosided_fixed_level"}) {
        CAPTURE(expect);
        CHECK(have.count(expect) == 1);
    }

    for (const auto& r : reports) {
        CAPTURE(r.check_name);
        CAPTURE(r.z);
        CHECK(r.pass);
        if (r.expected_fail) {
            CHECK(r.check_name == "twosided_violation");
            CHECK(std::abs(r.z) > 5.0);
        }
    }
    CHECK(all_passed(reports));
}

TEST_CASE("zero tolerance makes every stochastic check fail") {
    auto m = reference_model();
    VerifySettings settings;
    settings.k_sigma = 0.0;
    settings.checks = {"power"};
    SimConfig cfg;
    cfg.n_paths = 2000;
    cfg.seed = 4;
    auto reports = run_identity_suite(m, settings, cfg);
    REQUIRE(reports.size() == 4);
    for (const auto& r : reports) CHECK(!r.pass);
    CHECK(!all_passed(reports));
}

TEST_CASE("check family selection") {
    auto m = reference_model();
    VerifySettings settings;
    settings.checks = {"dividend"};
    SimConfig cfg;
    cfg.n_paths = 2000;
    cfg.seed = 5;
    auto reports = run_identity_suite(m, settings, cfg);
    REQUIRE(reports.size() == 4);  // three levels plus the log-linearity check
    for (const auto& r : reports)
        CHECK(r.check_name.rfind("dividend", 0) == 0);
}

TEST_CASE("report CSV format") {
    std::vector<VerifyReport> reports;
    VerifyReport a;
    a.check_name = "alpha";
    a.analytic = 0.5;
    a.mc_mean = 0.51;
    a.mc_stderr = 0.01;
    a.z = 1.0;
    a.pass = true;
    VerifyReport b;
    b.check_name = "beta";
    b.mc_mean = -0.02;
    b.mc_stderr = 0.01;
    b.z = -2.0;
    b.pass = false;
    reports = {a, b};

    std::ostringstream out;
    write_reports_csv(out, reports, "cfg line");
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "# cfg line");
    std::getline(in, line);
    CHECK(line == "check_name,analytic,mc_mean,mc_stderr,z,pass");
    std::getline(in, line);
    CHECK(line == "alpha,0.5,0.51000000000000001,0.01,1,1");
    std::getline(in, line);
    CHECK(line == "beta,,-0.02,0.01,-2,0");  // MC-vs-MC rows have no analytic field

    std::ostringstream bare;
    write_reports_csv(bare, reports);
    CHECK(bare.str().rfind("check_name,", 0) == 0);
}

TEST_CASE("true identities hold across many seeds") {
    auto m = reference_model();
    VerifySettings settings;
    settings.checks = {"power"};
    settings.gammas = {0.5};
    SimConfig cfg;
    cfg.n_paths = 4000;
    int failures = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        cfg.seed = seed;
        auto reports = run_identity_suite(m, settings, cfg);
        REQUIRE(reports.size() == 1);
        if (!reports[0].pass) ++failures;
    }
    // Each check is a 3-sigma test: ~0.3% false-positive rate per seed.
    CHECK(failures <= 2);
}

TEST_CASE("two-sided falsification: genuine model violates, fixed-level variant does not") {
    auto m = reference_model();
    SimConfig cfg;
    cfg.n_paths = 100000;
    cfg.seed = 12;

    // Pinned fixture (gamma_l 0.5, gamma_u 0.9, q 0.01, theta 0.5, x 0.3, y 1.3):
    // measured z is ~+31 for the running-min anchor at this path count.
    auto bad = falsify_two_sided_identity(m, 0.5, 0.9, 0.01, 0.5, 0.3, 1.3, cfg,
                                          LowerAnchor::running_min);
    CAPTURE(bad.z);
    CHECK(std::abs(bad.z) > 5.0);
    CHECK(!bad.pass);

    cfg.stream = 40;
    auto good = falsify_two_sided_identity(m, 0.5, 0.9, 0.01, 0.5, 0.3, 1.3, cfg,
                                           LowerAnchor::fixed_level);
    CAPTURE(good.z);
    CHECK(std::abs(good.z) <= 3.0);
    CHECK(good.pass);
}
