#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "levytax/analytics.hpp"
#include "levytax/simulate.hpp"

namespace levytax {

/*
 * Statistical verification harness: every closed-form identity is checked against an
 * independent Monte Carlo estimate via a z-score. A check passes when |z| <= k_sigma
 * (default 3), except expected-fail checks, which pass when the violation is decisive
 * (|z| > 5).
 */
struct VerifyReport {
    std::string check_name;
    std::optional<double> analytic;  // absent for MC-vs-MC checks
    double mc_mean = 0.0;
    double mc_stderr = 0.0;  // pooled for two-sample checks
    double z = 0.0;
    bool pass = false;
    bool expected_fail = false;  // pass criterion inverted: requires |z| > 5
};

struct VerifySettings {
    double x = 1.0;
    double y = 2.0;
    double q = 0.01;
    double theta = 1.0;
    std::vector<double> gammas = {0.0, 0.3, 0.5, 0.8};
    double k_sigma = 3.0;
    // Empty = all families. Known names: power, dividend, value, leveldep, bankruptcy,
    // twosided.
    std::vector<std::string> checks;
};

// Runs the identity suite and returns one report per check, sorted by check name.
std::vector<VerifyReport> run_identity_suite(const LevyModel& model,
                                             const VerifySettings& settings,
                                             const SimConfig& cfg);

// MC-vs-MC falsification of the passage power identity under two-sided refraction:
// compares the (gamma_l, gamma_u) estimate against the (gamma_l, 0) estimate raised to
// 1/(1-gamma_u), with delta-method pooled stderr. anchor = running_min reproduces the
// genuine two-sided model (identity fails); fixed_level / fixed_distance are the
// modified lower-barrier models that restore it.
VerifyReport falsify_two_sided_identity(const LevyModel& model, double gamma_l,
                                        double gamma_u, double q, double theta, double x,
                                        double y, const SimConfig& cfg,
                                        LowerAnchor anchor = LowerAnchor::running_min,
                                        double anchor_param = 0.0);

// CSV with columns: check_name, analytic, mc_mean, mc_stderr, z, pass.
// config_comment, when nonempty, is written first as a "# ..." line.
void write_reports_csv(std::ostream& os, const std::vector<VerifyReport>& reports,
                       const std::string& config_comment = "");

bool all_passed(const std::vector<VerifyReport>& reports);

}  // namespace levytax
