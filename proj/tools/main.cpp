#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "levytax/analytics.hpp"
#include "levytax/model.hpp"
#include "levytax/scale.hpp"
#include "levytax/simulate.hpp"
#include "levytax/verify.hpp"

using namespace levytax;

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_theta(const std::string& s) {
    std::string t = s;
    for (auto& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (t == "inf" || t == "infinity") return kNoInjections;
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw CLI::ValidationError("--theta", "not a number or 'inf': " + s);
    return v;
}

std::vector<double> parse_grid(const std::string& s) {
    // "lo:hi:step", inclusive of hi up to rounding
    double lo, hi, step;
    char c1, c2;
    std::istringstream in(s);
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0)
        throw CLI::ValidationError("grid", "expected lo:hi:step with step > 0: " + s);
    std::vector<double> out;
    for (int i = 0;; ++i) {
        double v = lo + step * i;
        if (v > hi + 1e-9 * std::max(1.0, std::abs(hi))) break;
        out.push_back(v);
    }
    return out;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw CLI::ValidationError("list", "empty list: " + s);
    return out;
}

// "a:b,c:d" -> two parallel vectors
std::pair<std::vector<double>, std::vector<double>> parse_pairs(const std::string& s,
                                                                const char* what) {
    std::vector<double> first, second;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        auto colon = tok.find(':');
        if (colon == std::string::npos)
            throw CLI::ValidationError(what, "expected a:b pairs separated by commas: " + s);
        first.push_back(std::stod(tok.substr(0, colon)));
        second.push_back(std::stod(tok.substr(colon + 1)));
    }
    if (first.empty()) throw CLI::ValidationError(what, "empty pair list: " + s);
    return {first, second};
}

struct ModelFlags {
    double c = 1.0;
    double jump_rate = 1.0;
    double claim_mean = 0.7;
    std::string claim_mix;  // "w:r,w:r"; overrides claim_mean when set

    void attach(CLI::App* app) {
        app->add_option("--c", c, "premium rate")->capture_default_str();
        app->add_option("--jump-rate", jump_rate, "claim arrival intensity")
            ->capture_default_str();
        app->add_option("--claim-mean", claim_mean,
                        "mean of exponential claims (ignored when --claim-mix is given)")
            ->capture_default_str();
        app->add_option("--claim-mix", claim_mix,
                        "mixture claims as weight:rate,weight:rate,...");
    }

    LevyModel build() const {
        if (!claim_mix.empty()) {
            auto [w, r] = parse_pairs(claim_mix, "--claim-mix");
            std::vector<MixtureComponent> comps;
            for (std::size_t i = 0; i < w.size(); ++i) comps.push_back({w[i], r[i]});
            return LevyModel(c, jump_rate, ClaimMixture(comps));
        }
        return LevyModel(c, jump_rate, ClaimMixture::exponential(claim_mean));
    }

    std::string describe() const {
        std::string s = "c=" + num(c) + " jump_rate=" + num(jump_rate);
        if (!claim_mix.empty())
            s += " claim_mix=" + claim_mix;
        else
            s += " claim_mean=" + num(claim_mean);
        return s;
    }
};

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw CLI::ValidationError("--out", "cannot open for writing: " + path);
    return file;
}

// Config file: one `key = value` per line, `#` comments, keys are long option names
// without the leading dashes. Values from the file are injected before the explicit
// command-line flags, so flags win; every option takes the last value given.
std::vector<std::string> read_config_args(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot read: " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto strip = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = strip(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--config", "expected key = value: " + line);
        std::string key = strip(line.substr(0, eq));
        std::string val = strip(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw CLI::ValidationError("--config", "expected key = value: " + line);
        out.push_back("--" + key + "=" + val);
    }
    return out;
}

void write_trace(const std::string& path, const std::vector<RefractedPath>& paths) {
    std::ofstream out(path);
    if (!out) throw CLI::ValidationError("--trace", "cannot open for writing: " + path);
    out << "path_id,time,kind,pre_value,post_value,l_total,u_total\n";
    for (std::size_t i = 0; i < paths.size(); ++i) {
        for (const auto& e : paths[i].events) {
            out << i << ',' << num(e.time) << ',' << to_string(e.kind) << ','
                << num(e.pre_value) << ',' << num(e.post_value) << ',' << num(e.l_total)
                << ',' << num(e.u_total) << "\n";
        }
    }
}

// ---------------------------------------------------------------------------

struct ScaleCmd {
    ModelFlags model;
    double q = 0.01;
    std::string theta_s = "1.0";
    std::string x_grid = "0:5:0.5";
    std::string out_path;
};

int run_scale(const ScaleCmd& o) {
    auto model = o.model.build();
    double theta = parse_theta(o.theta_s);
    ScaleContext ctx(model, o.q);
    auto xs = parse_grid(o.x_grid);
    std::ofstream file;
    std::ostream& os = open_out(file, o.out_path);
    os << "# levytax scale " << o.model.describe() << " q=" << num(o.q)
       << " theta=" << o.theta_s << " x_grid=" << o.x_grid;
    if (std::isinf(theta)) os << " (Z column shows c*W: the no-injection limit)";
    os << "\n";
    os << "x,W,Z,lambda\n";
    for (double x : xs) {
        double w = ctx.w(x);
        double z = std::isinf(theta) ? model.premium_rate() * w : ctx.z(theta, x);
        double lam = ctx.lambda_exponent(theta, x);
        os << num(x) << ',' << num(w) << ',' << num(z) << ',' << num(lam) << "\n";
    }
    return 0;
}

struct ValueCmd {
    ModelFlags model;
    double q = 0.01;
    std::string theta_s = "1.0";
    double x0 = 1.0;
    std::string gamma_grid = "0.1:0.9:0.1";
    std::string drifts = "0.3";
    std::string out_path;
};

int run_value(const ValueCmd& o) {
    double theta = parse_theta(o.theta_s);
    auto gammas = parse_grid(o.gamma_grid);
    auto drifts = parse_list(o.drifts);
    std::ofstream file;
    std::ostream& os = open_out(file, o.out_path);
    os << "# levytax value c=" << num(o.model.c) << " jump_rate=" << num(o.model.jump_rate)
       << " q=" << num(o.q) << " theta=" << o.theta_s << " x0=" << num(o.x0)
       << " gamma_grid=" << o.gamma_grid << " drifts=" << o.drifts
       << " (claim mean per drift: (c - drift)/jump_rate)\n";
    os << "gamma,drift,v,v_inf,v_diff\n";
    for (double d : drifts) {
        double mean = (o.model.c - d) / o.model.jump_rate;
        if (mean <= 0.0)
            throw CLI::ValidationError("--drifts", "drift " + num(d) +
                                                       " implies nonpositive claim mean");
        LevyModel m(o.model.c, o.model.jump_rate, ClaimMixture::exponential(mean));
        ScaleContext ctx(m, o.q);
        for (double g : gammas) {
            double v = value_v(ctx, theta, o.x0, g);
            double v_inf = value_v(ctx, kNoInjections, o.x0, g);
            os << num(g) << ',' << num(d) << ',' << num(v) << ',' << num(v_inf) << ','
               << num(v - v_inf) << "\n";
        }
    }
    return 0;
}

struct SimulateCmd {
    ModelFlags model;
    std::string estimator = "passage";
    double q = 0.01;
    std::string theta_s = "1.0";
    double x0 = 1.0;
    double y = 2.0;
    double gamma = 0.5;
    std::string gamma_pieces;  // "level:rate,level:rate"
    double gamma_l = 1.0;
    double lower_level = 0.0;
    std::string anchor = "running_min";
    double anchor_param = 0.0;
    long paths = 100000;
    std::uint64_t seed = 1;
    double t_max = 0.0;
    int threads = 1;
    bool analytic = false;
    std::string trace_path;
    std::string out_path;
};

LowerAnchor parse_anchor(const std::string& s) {
    if (s == "running_min") return LowerAnchor::running_min;
    if (s == "fixed_level") return LowerAnchor::fixed_level;
    if (s == "fixed_distance") return LowerAnchor::fixed_distance;
    throw CLI::ValidationError("--anchor",
                               "expected running_min|fixed_level|fixed_distance: " + s);
}

int run_simulate(const SimulateCmd& o) {
    auto model = o.model.build();
    double theta = parse_theta(o.theta_s);
    TaxRate rate = TaxRate::constant(o.gamma);
    if (!o.gamma_pieces.empty()) {
        auto [levels, values] = parse_pairs(o.gamma_pieces, "--gamma-pieces");
        rate = TaxRate::piecewise(levels, values);
    }
    SimConfig cfg;
    cfg.seed = o.seed;
    cfg.n_paths = o.paths;
    cfg.t_max = o.t_max;
    cfg.threads = o.threads;

    McEstimate est;
    bool have_analytic = false;
    double analytic = 0.0;
    if (o.estimator == "passage") {
        est = estimate_passage_transform(model, rate, o.q, theta, o.x0, o.y, cfg);
        if (o.analytic) {
            ScaleContext ctx(model, o.q);
            analytic = o.gamma_pieces.empty()
                           ? taxed_passage_transform(ctx, theta, o.x0, o.y, o.gamma)
                           : survival_level_dependent(ctx, theta, o.x0, o.y, rate);
            have_analytic = true;
        }
    } else if (o.estimator == "dividend") {
        est = estimate_dividend_transform(model, o.q, theta, o.x0, o.y, cfg);
        if (o.analytic) {
            ScaleContext ctx(model, o.q);
            analytic = dividend_time_transform(ctx, theta, o.x0, o.y);
            have_analytic = true;
        }
    } else if (o.estimator == "value") {
        est = estimate_value(model, o.gamma, o.q, theta, o.x0, cfg);
        if (o.analytic) {
            ScaleContext ctx(model, o.q);
            analytic = o.gamma >= 1.0 ? value_v1(ctx, theta, o.x0)
                                      : value_v(ctx, theta, o.x0, o.gamma);
            have_analytic = true;
        }
    } else if (o.estimator == "bankruptcy") {
        est = estimate_bankruptcy_transform(model, o.gamma, o.q, theta, o.x0, o.y, cfg);
        if (o.analytic && theta == 0.0) {
            analytic = std::exp(-model.phi(o.q) * (o.y - o.x0) / (1.0 - o.gamma));
            have_analytic = true;
        }
    } else if (o.estimator == "twosided") {
        est = estimate_two_sided_transform(model, o.gamma_l, o.gamma, o.lower_level, o.q,
                                           theta, o.x0, o.y, cfg, parse_anchor(o.anchor),
                                           o.anchor_param);
    } else {
        throw CLI::ValidationError(
            "--estimator", "expected passage|dividend|value|bankruptcy|twosided: " + o.estimator);
    }

    std::ofstream file;
    std::ostream& os = open_out(file, o.out_path);
    os << "# levytax simulate estimator=" << o.estimator << ' ' << o.model.describe()
       << " q=" << num(o.q) << " theta=" << o.theta_s << " x0=" << num(o.x0)
       << " y=" << num(o.y);
    if (!o.gamma_pieces.empty())
        os << " gamma_pieces=" << o.gamma_pieces;
    else
        os << " gamma=" << num(o.gamma);
    if (o.estimator == "twosided")
        os << " gamma_l=" << num(o.gamma_l) << " lower_level=" << num(o.lower_level)
           << " anchor=" << o.anchor << " anchor_param=" << num(o.anchor_param);
    os << " paths=" << o.paths << " seed=" << o.seed << " t_max=" << num(o.t_max) << "\n";
    os << "estimator,mean,std_error,n,capped_fraction,bias_bound";
    if (have_analytic) os << ",analytic";
    os << "\n";
    os << o.estimator << ',' << num(est.mean) << ',' << num(est.std_error) << ',' << est.n
       << ',' << num(est.capped_fraction) << ',' << num(est.bias_bound);
    if (have_analytic) os << ',' << num(analytic);
    os << "\n";

    if (!o.trace_path.empty()) {
        // Replays the first few paths of the same streams and dumps their events.
        const long n_trace = std::min<long>(o.paths, 10);
        const double t_max = o.t_max > 0.0 ? o.t_max : (o.q > 0.0 ? 5000.0 / o.q : 1e6);
        std::vector<RefractedPath> traces;
        for (long i = 0; i < n_trace; ++i) {
            CounterRng rng(o.seed, 0, static_cast<std::uint64_t>(i));
            if (o.estimator == "twosided") {
                FreePath fp = sample_free_path(model, rng, t_max);
                fp.x0 = o.x0;
                traces.push_back(two_sided_refract(fp, o.gamma_l, o.gamma, o.lower_level,
                                                   o.x0, parse_anchor(o.anchor),
                                                   o.anchor_param, o.y));
            } else {
                StopRule stop = o.estimator == "dividend" ? StopRule::dividends_exceed(o.y)
                                : o.estimator == "value"
                                    ? StopRule::time_cap_only()
                                    : StopRule::passage_above(o.y);
                PathOptions opts;
                if (o.estimator == "bankruptcy") {
                    opts.reflect_at_zero = false;
                    opts.track_occupation = true;
                }
                TaxRate r2 = o.estimator == "dividend" ? TaxRate::constant(1.0) : rate;
                traces.push_back(refract_reflect(model, rng, r2, o.x0, stop, t_max, opts));
            }
        }
        write_trace(o.trace_path, traces);
    }
    return 0;
}

struct VerifyCmd {
    ModelFlags model;
    double q = 0.01;
    std::string theta_s = "1.0";
    double x0 = 1.0;
    double y = 2.0;
    double k_sigma = 3.0;
    std::string checks;  // comma list; empty = all
    long paths = 100000;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_path;
};

int run_verify(const VerifyCmd& o) {
    auto model = o.model.build();
    VerifySettings settings;
    settings.x = o.x0;
    settings.y = o.y;
    settings.q = o.q;
    settings.theta = parse_theta(o.theta_s);
    settings.k_sigma = o.k_sigma;
    if (!o.checks.empty()) {
        std::istringstream in(o.checks);
        std::string tok;
        while (std::getline(in, tok, ','))
            if (!tok.empty()) settings.checks.push_back(tok);
    }
    SimConfig cfg;
    cfg.seed = o.seed;
    cfg.n_paths = o.paths;
    cfg.threads = o.threads;

    auto reports = run_identity_suite(model, settings, cfg);

    std::string comment = "levytax verify " + o.model.describe() + " q=" + num(o.q) +
                          " theta=" + o.theta_s + " x0=" + num(o.x0) + " y=" + num(o.y) +
                          " k_sigma=" + num(o.k_sigma) + " paths=" + std::to_string(o.paths) +
                          " seed=" + std::to_string(o.seed) +
                          (o.checks.empty() ? "" : " checks=" + o.checks);
    std::ofstream file;
    std::ostream& os = open_out(file, o.out_path);
    write_reports_csv(os, reports, comment);
    return all_passed(reports) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectrally negative risk models with tax at the running maximum and "
                 "capital injections at zero: scale functions, closed-form transforms, "
                 "exact simulation, statistical verification."};
    app.require_subcommand(1);

    ScaleCmd sc;
    ValueCmd vc;
    SimulateCmd mc;
    VerifyCmd fc;
    std::string config_path;

    auto* scale = app.add_subcommand("scale", "tabulate W, Z and the dividend exponent");
    sc.model.attach(scale);
    scale->add_option("--q", sc.q, "discount rate")->capture_default_str();
    scale->add_option("--theta", sc.theta_s, "injection price (number or 'inf')")
        ->capture_default_str();
    scale->add_option("--x-grid", sc.x_grid, "surplus grid lo:hi:step")->capture_default_str();
    scale->add_option("--out", sc.out_path, "output CSV path (default stdout)");
    scale->add_option("--config", config_path, "config file with key = value lines");

    auto* value = app.add_subcommand("value", "tax-value curves across gamma and drift");
    vc.model.attach(value);
    value->add_option("--q", vc.q, "discount rate")->capture_default_str();
    value->add_option("--theta", vc.theta_s, "injection price (number or 'inf')")
        ->capture_default_str();
    value->add_option("--x0", vc.x0, "initial surplus")->capture_default_str();
    value->add_option("--gamma-grid", vc.gamma_grid, "tax grid lo:hi:step")
        ->capture_default_str();
    value->add_option("--drifts", vc.drifts, "comma list of drifts; claim mean = (c - drift)/jump_rate")
        ->capture_default_str();
    value->add_option("--out", vc.out_path, "output CSV path (default stdout)");
    value->add_option("--config", config_path, "config file with key = value lines");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo transform estimators");
    mc.model.attach(simulate);
    simulate->add_option("--estimator", mc.estimator,
                         "passage|dividend|value|bankruptcy|twosided")
        ->capture_default_str();
    simulate->add_option("--q", mc.q, "discount rate")->capture_default_str();
    simulate->add_option("--theta", mc.theta_s, "injection price (number or 'inf')")
        ->capture_default_str();
    simulate->add_option("--x0", mc.x0, "initial surplus")->capture_default_str();
    simulate->add_option("--y", mc.y, "target level / dividend budget")->capture_default_str();
    simulate->add_option("--gamma", mc.gamma, "tax rate (upper rate for twosided)")
        ->capture_default_str();
    simulate->add_option("--gamma-pieces", mc.gamma_pieces,
                         "level-dependent tax as level:rate,level:rate");
    simulate->add_option("--gamma-l", mc.gamma_l, "twosided: lower refraction rate")
        ->capture_default_str();
    simulate->add_option("--lower-level", mc.lower_level, "twosided: lower barrier level")
        ->capture_default_str();
    simulate->add_option("--anchor", mc.anchor,
                         "twosided: running_min|fixed_level|fixed_distance")
        ->capture_default_str();
    simulate->add_option("--anchor-param", mc.anchor_param, "twosided: anchor distance")
        ->capture_default_str();
    simulate->add_option("--paths", mc.paths, "number of Monte Carlo paths")
        ->capture_default_str();
    simulate->add_option("--seed", mc.seed, "RNG seed")->capture_default_str();
    simulate->add_option("--t-max", mc.t_max, "time cap (0 = auto)")->capture_default_str();
    simulate->add_option("--threads", mc.threads, "worker threads (does not change results)")
        ->capture_default_str();
    simulate->add_flag("--analytic", mc.analytic, "append the closed-form value");
    simulate->add_option("--trace", mc.trace_path, "write an event CSV for the first 10 paths");
    simulate->add_option("--out", mc.out_path, "output CSV path (default stdout)");
    simulate->add_option("--config", config_path, "config file with key = value lines");

    auto* verify = app.add_subcommand("verify", "statistical identity checks");
    fc.model.attach(verify);
    verify->add_option("--q", fc.q, "discount rate")->capture_default_str();
    verify->add_option("--theta", fc.theta_s, "injection price (number or 'inf')")
        ->capture_default_str();
    verify->add_option("--x0", fc.x0, "initial surplus")->capture_default_str();
    verify->add_option("--y", fc.y, "target level")->capture_default_str();
    verify->add_option("--k-sigma", fc.k_sigma, "pass threshold in standard errors")
        ->capture_default_str();
    verify->add_option("--checks", fc.checks,
                       "comma list of families: power,dividend,value,leveldep,bankruptcy,twosided");
    verify->add_option("--paths", fc.paths, "paths per estimate")->capture_default_str();
    verify->add_option("--seed", fc.seed, "RNG seed")->capture_default_str();
    verify->add_option("--threads", fc.threads, "worker threads (does not change results)")
        ->capture_default_str();
    verify->add_option("--out", fc.out_path, "output CSV path (default stdout)");
    verify->add_option("--config", config_path, "config file with key = value lines");

    // Every option takes the last value, so config-file values (inserted first) are
    // overridden by explicit flags.
    for (auto* sub : {scale, value, simulate, verify})
        for (auto* opt : sub->get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        // Pre-scan for --config so its values can be injected ahead of user flags.
        std::string cfg_file;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) cfg_file = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0) cfg_file = args[i].substr(9);
        }
        if (!cfg_file.empty() && !args.empty()) {
            auto extra = read_config_args(cfg_file);
            args.insert(args.begin() + 1, extra.begin(), extra.end());
        }

        std::vector<const char*> cargs;
        cargs.push_back(argv[0]);
        for (const auto& a : args) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());

        if (*scale) return run_scale(sc);
        if (*value) return run_value(vc);
        if (*simulate) return run_simulate(mc);
        if (*verify) return run_verify(fc);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
