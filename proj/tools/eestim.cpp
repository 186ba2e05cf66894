// Command-line front end: data generation, estimation, exact oracle,
// trace diagnostics and the experiment runners.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "eestim/convergence.hpp"
#include "eestim/error.hpp"
#include "eestim/estimators.hpp"
#include "eestim/exact.hpp"
#include "eestim/experiments.hpp"
#include "eestim/io.hpp"
#include "eestim/models.hpp"
#include "eestim/sampler.hpp"

namespace fs = std::filesystem;
using namespace eestim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitNotConverged = 4;

struct EstimatorFlags {
    std::optional<double> a, c, tau;
    std::optional<std::size_t> m, steps, burnin, cd_steps;
    std::optional<double> cd_a;
    std::string stepfn = "max";
    std::string update = "sign";
};

void add_estimator_flags(CLI::App* sub, EstimatorFlags& f) {
    sub->add_option("--a", f.a, "learning rate");
    sub->add_option("--c", f.c, "step-size floor c");
    sub->add_option("--m", f.m, "MH steps per update");
    sub->add_option("--steps", f.steps, "parameter updates");
    sub->add_option("--burnin", f.burnin, "burn-in updates excluded from the tail");
    sub->add_option("--tau", f.tau, "t-ratio threshold");
    sub->add_option("--cd-steps", f.cd_steps, "CD updates used for the starting point");
    sub->add_option("--cd-a", f.cd_a, "CD learning rate");
    sub->add_option("--stepfn", f.stepfn, "step scale: max | abs-plus | sqrt")
        ->check(CLI::IsMember({"max", "abs-plus", "sqrt"}));
    sub->add_option("--update", f.update, "EE update: sign | soft")->check(CLI::IsMember({"sign", "soft"}));
}

StepSizeKind parse_stepfn(const std::string& s) {
    if (s == "abs-plus") return StepSizeKind::AbsPlusC;
    if (s == "sqrt") return StepSizeKind::MaxSqrtC;
    return StepSizeKind::MaxAbsC;
}

// Applies the flags that were given on top of `cfg`.
void apply(const EstimatorFlags& f, EstimatorConfig& cfg) {
    if (f.a) cfg.a = *f.a;
    if (f.c) cfg.c = *f.c;
    if (f.m) cfg.m = *f.m;
    if (f.steps) cfg.t_max = *f.steps;
    if (f.burnin) cfg.t_burnin = *f.burnin;
    else if (f.steps) cfg.t_burnin = cfg.t_max / 2;
    cfg.step_kind = parse_stepfn(f.stepfn);
    cfg.update = f.update == "soft" ? EeUpdate::Soft : EeUpdate::Sign;
}

void print_vector(const char* label, const Model& model, std::span<const double> v) {
    std::cout << label << ":";
    for (std::size_t i = 0; i < v.size(); ++i) std::cout << ' ' << model.stat_names()[i] << '=' << io::format_double(v[i]);
    std::cout << '\n';
}

void print_report(const ConvergenceReport& r) {
    std::cout << "t-ratio (tau " << r.tau << ", tail " << r.tail_length << "):";
    for (std::size_t i = 0; i < r.t_ratio.size(); ++i) {
        std::cout << ' ' << io::format_double(r.t_ratio[i]) << (r.degenerate[i] ? "(degenerate)" : "");
    }
    std::cout << "\nsigma ratio A:";
    for (double v : r.sigma_ratio) std::cout << ' ' << io::format_double(v);
    std::cout << "\nsigma dispersion: " << io::format_double(r.sigma_dispersion) << '\n';
    std::cout << "converged: " << (r.passed ? "yes" : "no") << '\n';
}

void ensure_dir(const fs::path& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InvalidInput("cannot create " + dir.string() + ": " + ec.message());
}

// --- model loading ---------------------------------------------------------

struct Loaded {
    std::shared_ptr<const Model> model;
    std::vector<BinaryState> states;
};

Loaded load_observations(const std::string& kind, const fs::path& in) {
    Loaded out;
    if (kind == "ergm") {
        std::ifstream f(in, std::ios::binary);
        if (!f) throw InvalidInput("cannot open " + in.string());
        BinaryState g = io::read_edge_list(f);
        out.model = build_mini_ergm(g.layout().nodes);
        out.states.push_back(std::move(g));
        return out;
    }
    out.states = io::read_states_file(in);
    const BinaryState& first = out.states.front();
    const Layout& l = first.layout();
    if (kind == "ising2d" || kind == "ising2d-field") {
        if (l.kind != LayoutKind::Grid) throw InvalidInput("ising2d needs grid states");
        out.model = build_ising2d(l.rows, l.cols, kind == "ising2d-field");
    } else if (kind == "ising1d") {
        out.model = build_ising1d_periodic(first.size());
    } else if (kind == "vbm") {
        out.model = build_vbm(first.size());
    } else {
        throw InvalidInput("unknown model '" + kind + "'");
    }
    // Chain models accept any layout with the right number of spins.
    if (kind == "ising1d" || kind == "vbm") {
        for (auto& s : out.states) {
            if (s.size() != first.size()) throw InvalidInput("states differ in size");
            s = BinaryState(Encoding::Spin, out.model->layout(), std::vector<std::int8_t>(s.values().begin(), s.values().end()));
        }
    }
    for (const auto& s : out.states) out.model->check_state(s);
    return out;
}

const std::vector<std::string> kEstimableModels{"ising2d", "ising2d-field", "ising1d", "vbm", "ergm"};

// --- subcommands -------------------------------------------------------------

struct GenerateArgs {
    std::string model;
    fs::path out;
    std::uint64_t seed = 1;
    std::size_t rows = 8, cols = 8, spins = 15, n = 1000, anneal = 100000, nodes = 4;
    std::vector<double> theta;
    double noise = 1.0;
};

int cmd_generate(const GenerateArgs& g) {
    if (g.model == "ising") {
        const auto model = build_ising2d(g.rows, g.cols, false);
        const ParamVector theta = g.theta.empty() ? ParamVector{0.3} : g.theta;
        BinaryState x = model->blank_state();
        RngStream rng(experiments::derive_seed(g.seed, 1));
        if (model->num_sites() <= kMaxEnumerationSites) {
            x = exact_sample(rng, *model, theta, 1).front();
        } else {
            for (std::size_t i = 0; i < x.size(); ++i) x.set(i, rng.uniform() < 0.5 ? -1 : 1);
            equilibrate(rng, *model, theta, x, g.anneal);
        }
        io::write_state_file(g.out, x);
    } else if (g.model == "vbm") {
        std::optional<ParamVector> theta;
        if (!g.theta.empty()) theta = g.theta;
        const auto data = experiments::generate_vbm_dataset(g.seed, g.spins, g.n, g.anneal, theta);
        ensure_dir(g.out);
        io::write_states_file(g.out / "ensemble.txt", data.ensemble);
        experiments::write_theta(g.out / "theta_star.csv", *build_vbm(g.spins), data.theta_star);
    } else if (g.model == "crf") {
        const auto data = experiments::generate_crf_dataset(g.seed, g.rows, g.cols, 10, 5, g.noise);
        ensure_dir(g.out);
        io::write_state_file(g.out / "original.txt", data.original);
        auto dump = [&](const std::string& prefix, const std::vector<std::vector<double>>& ys) {
            for (std::size_t k = 0; k < ys.size(); ++k) {
                std::ofstream f(g.out / (prefix + std::to_string(k) + ".txt"), std::ios::binary);
                io::write_image(f, io::Image{data.rows, data.cols, ys[k]});
            }
        };
        dump("train_", data.train);
        dump("test_", data.test);
    } else if (g.model == "ergm") {
        experiments::ErgmDemoConfig cfg;
        cfg.seed = g.seed;
        cfg.nodes = g.nodes;
        const auto model = build_mini_ergm(g.nodes);
        const ParamVector theta = g.theta.empty() ? cfg.theta_star : g.theta;
        if (theta.size() != 2) throw InvalidInput("ergm needs two parameters (arc, mutual)");
        RngStream rng(experiments::derive_seed(g.seed, 1));
        BinaryState x = model->blank_state();
        if (model->num_sites() <= kMaxEnumerationSites) x = exact_sample(rng, *model, theta, 1).front();
        else equilibrate(rng, *model, theta, x, 200 * model->num_sites());
        std::ofstream f(g.out, std::ios::binary);
        if (!f) throw InvalidInput("cannot open " + g.out.string() + " for writing");
        io::write_edge_list(f, x);
    } else {
        throw InvalidInput("unknown model '" + g.model + "'");
    }
    std::cout << "wrote " << g.out.string() << '\n';
    return kExitOk;
}

struct EstimateArgs {
    std::string model;
    fs::path in, out;
    std::string method = "ee";
    std::uint64_t seed = 1;
    EstimatorFlags flags;
};

int cmd_estimate(const EstimateArgs& e) {
    const Loaded data = load_observations(e.model, e.in);
    auto obs = make_observations(data.model, data.states);
    const Model& model = *data.model;

    EstimatorConfig cfg;
    cfg.t_max = 100000;
    cfg.t_burnin = 50000;
    apply(e.flags, cfg);

    EstimatorConfig cd_cfg;
    cd_cfg.a = e.flags.cd_a.value_or(0.01);
    cd_cfg.m = cfg.m;
    cd_cfg.t_max = e.flags.cd_steps.value_or(1000);

    EstimationTrace trace;
    ParamVector theta;
    bool check = false;
    if (e.method == "cd") {
        cfg.t_max = e.flags.steps.value_or(cd_cfg.t_max);
        cfg.a = e.flags.a.value_or(cd_cfg.a);
        auto r = cd_estimate(experiments::derive_seed(e.seed, 6), obs, cfg);
        theta = r.theta;
        trace = std::move(r.trace);
    } else if (e.method == "pcd") {
        PersistentContrastiveDivergence pcd(obs, {}, experiments::derive_seed(e.seed, 8));
        const double a = cfg.a;
        pcd.run(cfg.t_max, [a](std::size_t) { return a; }, cfg, trace);
        theta = tail_average(trace, cfg.t_burnin);
        check = true;
    } else {
        const auto cd = cd_estimate(experiments::derive_seed(e.seed, 6), obs, cd_cfg);
        print_vector("theta_cd", model, cd.theta);
        auto r = ee_estimate(experiments::derive_seed(e.seed, 7), obs, cd.theta, cfg, cfg.step_kind);
        theta = r.theta;
        trace = std::move(r.trace);
        check = true;
    }
    print_vector("theta", model, theta);
    if (!e.out.empty()) io::write_trace_file(e.out, trace);
    if (!check) return kExitOk;
    const auto report = diagnose(trace, cfg.t_burnin, e.flags.tau.value_or(0.1), cfg.c);
    print_report(report);
    return report.passed ? kExitOk : kExitNotConverged;
}

struct ExactArgs {
    std::string model;
    fs::path in;
};

int cmd_exact(const ExactArgs& x) {
    const Loaded data = load_observations(x.model, x.in);
    auto obs = make_observations(data.model, data.states);
    const StatVector g_bar = target_statistics(obs);
    const EnumerationTable table(*data.model);
    const MleResult mle = exact_mle(table, g_bar);
    print_vector("g_bar", *data.model, g_bar);
    print_vector("theta_mle", *data.model, mle.theta);
    std::cout << "loglik_per_sample: " << io::format_double(mle.log_likelihood) << '\n';
    std::cout << "moment_residual: " << io::format_double(mle.residual) << '\n';
    return kExitOk;
}

struct DiagnoseArgs {
    fs::path in;
    std::optional<std::size_t> burnin;
    double tau = 0.1;
    double c = 0.01;
};

int cmd_diagnose(const DiagnoseArgs& d) {
    const EstimationTrace trace = io::read_trace_file(d.in);
    const std::size_t t_b = d.burnin.value_or(trace.size() / 2);
    const auto report = diagnose(trace, t_b, d.tau, d.c);
    const auto mean = tail_average(trace, t_b);
    std::cout << "rows: " << trace.size() << "\ntail mean theta:";
    for (double v : mean) std::cout << ' ' << io::format_double(v);
    std::cout << '\n';
    print_report(report);
    return report.passed ? kExitOk : kExitNotConverged;
}

struct ExperimentArgs {
    std::string id;
    fs::path in, out;
    std::uint64_t seed = 1;
    EstimatorFlags flags;
    std::optional<std::size_t> rows, cols, nodes, spins, n, anneal, stride, handoff_vbm, handoff_ising;
    std::optional<double> theta;
};

int cmd_experiment(const ExperimentArgs& x) {
    ensure_dir(x.out);
    const fs::path out = x.out.empty() ? fs::path(".") : x.out;
    if (x.id == "ising") {
        experiments::IsingExperimentConfig cfg;
        cfg.seed = x.seed;
        if (!x.in.empty()) cfg.image = io::read_state_file(x.in);
        if (x.rows) cfg.rows = *x.rows;
        if (x.cols) cfg.cols = *x.cols;
        if (x.theta) cfg.theta_star = *x.theta;
        apply(x.flags, cfg.ee);
        if (x.flags.cd_steps) cfg.cd.t_max = *x.flags.cd_steps;
        if (x.flags.cd_a) cfg.cd.a = *x.flags.cd_a;
        if (x.flags.tau) cfg.tau = *x.flags.tau;
        const auto r = experiments::run_ising_experiment(cfg);
        const auto model = build_ising2d(r.observed.layout().rows, r.observed.layout().cols, false);
        std::cout << (r.synthetic ? "synthetic image" : "supplied image") << '\n';
        print_vector("theta_cd", *model, r.theta_cd);
        print_vector("theta_hat", *model, r.theta_hat);
        print_vector("trace_sigma", *model, r.trace_sigma);
        if (r.theta_mle) print_vector("theta_exact_mle", *model, *r.theta_mle);
        print_report(r.report);
        io::write_state_file(out / "ising_image.txt", r.observed);
        io::write_trace_file(out / "ising_trace.csv", r.trace);
        return r.report.passed ? kExitOk : kExitNotConverged;
    }
    if (x.id == "vbm") {
        experiments::VbmExperimentConfig cfg;
        cfg.seed = x.seed;
        if (x.spins) cfg.n_spins = *x.spins;
        if (x.n) cfg.n_chains = *x.n;
        if (x.anneal) cfg.anneal_steps = *x.anneal;
        if (x.stride) cfg.loglik_stride = *x.stride;
        if (x.handoff_vbm) cfg.handoff_vbm = *x.handoff_vbm;
        if (x.handoff_ising) cfg.handoff_ising = *x.handoff_ising;
        apply(x.flags, cfg.ee);
        if (x.flags.cd_steps) cfg.cd.t_max = *x.flags.cd_steps;
        if (x.flags.cd_a) cfg.cd.a = *x.flags.cd_a;
        const auto r = experiments::run_vbm_experiment(cfg);
        for (const auto* fit : {&r.vbm_fit, &r.ising_fit}) {
            if (!*fit) continue;
            const auto& f = **fit;
            std::cout << f.model_name << " fit: loglik cd " << io::format_double(f.ll_cd) << ", ee "
                      << io::format_double(f.ll_ee) << ", exact mle " << io::format_double(f.ll_mle)
                      << (f.mle_on_boundary ? " (boundary data: likelihood supremum)" : "") << '\n';
            experiments::write_likelihood_curve(out / (f.model_name + "_cd_loglik.csv"), f.cd_curve);
            experiments::write_likelihood_curve(out / (f.model_name + "_ee_loglik.csv"), f.ee_curve);
            io::write_trace_file(out / (f.model_name + "_ee_trace.csv"), f.ee_trace);
        }
        return kExitOk;
    }
    if (x.id == "crf") {
        experiments::CrfExperimentConfig cfg;
        cfg.seed = x.seed;
        if (x.rows) cfg.rows = *x.rows;
        if (x.cols) cfg.cols = *x.cols;
        if (x.anneal) cfg.anneal_steps = *x.anneal;
        if (x.flags.cd_steps) cfg.cd_steps = *x.flags.cd_steps;
        if (x.flags.cd_a) cfg.cd_a = *x.flags.cd_a;
        if (x.flags.c) cfg.ee_c = *x.flags.c;
        if (x.flags.m) cfg.ee_m = *x.flags.m;
        if (x.flags.steps) {
            // Keep the two-phase shape with the total split evenly.
            const std::size_t half = std::max<std::size_t>(1, *x.flags.steps / 2);
            cfg.ee_phases = {{half, cfg.ee_phases[0].a}, {half, cfg.ee_phases[1].a}};
        }
        const auto r = experiments::run_crf_experiment(cfg);
        const auto model = build_crf(r.data.train.front(), r.data.rows, r.data.cols);
        print_vector("theta_cd", *model, r.theta_cd);
        print_vector("theta_ee", *model, r.theta_ee);
        std::cout << "error: start " << io::format_double(r.error_curve.front()) << ", cd "
                  << io::format_double(r.final_cd_error) << ", ee " << io::format_double(r.final_ee_error) << '\n';
        experiments::write_error_curve(out / "crf_error.csv", r.error_curve);
        io::write_trace_file(out / "crf_cd_trace.csv", r.cd_trace);
        io::write_trace_file(out / "crf_ee_trace.csv", r.ee_trace);
        return kExitOk;
    }
    if (x.id == "ergm") {
        experiments::ErgmDemoConfig cfg;
        cfg.seed = x.seed;
        if (x.nodes) cfg.nodes = *x.nodes;
        if (!x.in.empty()) {
            std::ifstream f(x.in, std::ios::binary);
            if (!f) throw InvalidInput("cannot open " + x.in.string());
            cfg.graph = io::read_edge_list(f);
            cfg.nodes = cfg.graph->layout().nodes;
        }
        apply(x.flags, cfg.ee);
        if (x.flags.cd_steps) cfg.cd.t_max = *x.flags.cd_steps;
        if (x.flags.cd_a) cfg.cd.a = *x.flags.cd_a;
        if (x.flags.tau) cfg.tau = *x.flags.tau;
        const auto r = experiments::run_ergm_demo(cfg);
        const auto model = build_mini_ergm(cfg.nodes);
        std::cout << "dyads: null " << r.census.null << ", asymmetric " << r.census.asymmetric << ", mutual "
                  << r.census.mutual << '\n';
        print_vector("theta_cd", *model, r.theta_cd);
        print_vector("theta_ee", *model, r.theta_ee);
        print_vector("trace_sigma", *model, r.trace_sigma);
        if (r.theta_mle) print_vector("theta_exact_mle", *model, *r.theta_mle);
        print_report(r.report);
        io::write_trace_file(out / "ergm_trace.csv", r.trace);
        return r.report.passed ? kExitOk : kExitNotConverged;
    }
    throw InvalidInput("unknown experiment '" + x.id + "'");
}

// `--config FILE` entries become trailing `--key=value` arguments. With the
// take-first policy, flags given explicitly on the command line win.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::vector<std::string> extra;
    for (std::size_t i = 0; i < args.size(); ++i) {
        fs::path path;
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
        else continue;
        for (const auto& [k, v] : io::read_config_file(path)) extra.push_back("--" + k + "=" + v);
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo maximum-likelihood estimation for exponential-family models", "eestim"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeFirst);
    std::string config_path;
    auto add_config = [&](CLI::App* sub) { sub->add_option("--config", config_path, "key = value file of flags"); };

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "write a synthetic dataset");
    g->add_option("--model", gen.model, "ising | vbm | crf | ergm")->required();
    g->add_option("--out", gen.out, "output file (ising, ergm) or directory (vbm, crf)")->required();
    g->add_option("--seed", gen.seed);
    g->add_option("--rows", gen.rows);
    g->add_option("--cols", gen.cols);
    g->add_option("--spins", gen.spins);
    g->add_option("--n", gen.n, "ensemble size");
    g->add_option("--anneal", gen.anneal, "MH steps of annealing");
    g->add_option("--nodes", gen.nodes);
    g->add_option("--theta", gen.theta, "generating parameters");
    g->add_option("--noise", gen.noise, "CRF noise scale");
    add_config(g);

    EstimateArgs est;
    auto* e = app.add_subcommand("estimate", "estimate parameters from observed states");
    e->add_option("--model", est.model)->required()->check(CLI::IsMember(kEstimableModels));
    e->add_option("--in", est.in, "state file (edge list for ergm)")->required();
    e->add_option("--out", est.out, "trace CSV");
    e->add_option("--method", est.method)->check(CLI::IsMember({"ee", "cd", "pcd"}));
    e->add_option("--seed", est.seed);
    add_estimator_flags(e, est.flags);
    add_config(e);

    ExactArgs ex;
    auto* x = app.add_subcommand("exact", "exact MLE by enumeration (at most 20 variables)");
    x->add_option("--model", ex.model)->required()->check(CLI::IsMember(kEstimableModels));
    x->add_option("--in", ex.in)->required();
    add_config(x);

    DiagnoseArgs dg;
    auto* d = app.add_subcommand("diagnose", "t-ratio and sigma diagnostics of a trace CSV");
    d->add_option("--in", dg.in)->required();
    d->add_option("--burnin", dg.burnin);
    d->add_option("--tau", dg.tau);
    d->add_option("--c", dg.c);
    add_config(d);

    ExperimentArgs xa;
    auto* r = app.add_subcommand("experiment", "run an experiment: ising | vbm | crf | ergm");
    r->add_option("id", xa.id)->required()->check(CLI::IsMember({"ising", "vbm", "crf", "ergm"}));
    r->add_option("--in", xa.in, "input image (ising) or edge list (ergm)");
    r->add_option("--out", xa.out, "output directory");
    r->add_option("--seed", xa.seed);
    r->add_option("--rows", xa.rows);
    r->add_option("--cols", xa.cols);
    r->add_option("--nodes", xa.nodes);
    r->add_option("--spins", xa.spins);
    r->add_option("--n", xa.n);
    r->add_option("--anneal", xa.anneal);
    r->add_option("--stride", xa.stride, "likelihood evaluation stride");
    r->add_option("--handoff-vbm", xa.handoff_vbm);
    r->add_option("--handoff-ising", xa.handoff_ising);
    r->add_option("--theta", xa.theta, "generating parameter of the synthetic image");
    add_estimator_flags(r, xa.flags);
    add_config(r);

    try {
        auto args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
        app.parse(args);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? kExitOk : kExitInvalid;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInvalid;
    }

    try {
        if (*g) return cmd_generate(gen);
        if (*e) return cmd_estimate(est);
        if (*x) return cmd_exact(ex);
        if (*d) return cmd_diagnose(dg);
        if (*r) return cmd_experiment(xa);
    } catch (const DivergenceError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitDivergence;
    } catch (const NonexistenceError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitDivergence;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInvalid;
    } catch (const std::length_error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInvalid;
    } catch (const ParseError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitInvalid;
    }
    return kExitOk;
}
