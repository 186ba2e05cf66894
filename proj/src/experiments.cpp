#include "eestim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "eestim/error.hpp"
#include "eestim/exact.hpp"
#include "eestim/io.hpp"
#include "eestim/parallel.hpp"
#include "eestim/sampler.hpp"

namespace eestim::experiments {
namespace {

// Tags for derive_seed; one per independent random component.
enum SeedTag : std::uint64_t {
    kThetaStar = 1,
    kChainInit,
    kAnneal,
    kNoise,
    kSynthetic,
    kCd,
    kEe,
    kTestInit,
    kTestAnneal,
    kGraph,
    kTiming,
};

void random_spins(RngStream& rng, BinaryState& x) {
    for (std::size_t i = 0; i < x.size(); ++i) x.set(i, rng.uniform() < 0.5 ? -1 : 1);
}

double mean_of_tail(std::span<const double> values, std::size_t window) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t n = std::min(window == 0 ? values.size() : window, values.size());
    double s = 0.0;
    for (std::size_t i = values.size() - n; i < values.size(); ++i) s += values[i];
    return s / static_cast<double>(n);
}

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
    return out;
}

EstimatorConfig with_fixed(EstimatorConfig cfg, const std::vector<bool>& fixed) {
    if (!fixed.empty()) cfg.fixed = fixed;
    return cfg;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

VbmDataset generate_vbm_dataset(std::uint64_t seed, std::size_t n_spins, std::size_t n_chains,
                                std::size_t anneal_steps, const std::optional<ParamVector>& theta_override) {
    if (n_chains == 0) throw InvalidInput("need at least one chain");
    const auto model = build_vbm(n_spins);
    VbmDataset data;
    if (theta_override) {
        if (theta_override->size() != model->num_stats()) throw InvalidInput("theta override has the wrong length");
        data.theta_star = *theta_override;
    } else {
        RngStream rng(derive_seed(seed, kThetaStar));
        data.theta_star.resize(model->num_stats());
        for (auto& v : data.theta_star) v = rng.normal();
    }
    data.ensemble.reserve(n_chains);
    for (std::size_t k = 0; k < n_chains; ++k) {
        RngStream rng(derive_seed(seed, kChainInit), k);
        BinaryState x = model->blank_state();
        random_spins(rng, x);
        data.ensemble.push_back(std::move(x));
    }
    equilibrate_ensemble(derive_seed(seed, kAnneal), *model, data.theta_star, data.ensemble, anneal_steps);
    data.g_bar = ensemble_mean_stats(data.ensemble, *model);
    return data;
}

BinaryState x_shape(std::size_t rows, std::size_t cols) {
    BinaryState x(Encoding::Spin, Layout::grid(rows, cols));
    const auto anti = static_cast<long>(rows) - 1;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const long rl = static_cast<long>(r), cl = static_cast<long>(c);
            const bool on = std::abs(rl - cl) <= 2 || std::abs(rl + cl - anti) <= 2;
            x.set(r * cols + c, on ? 1 : -1);
        }
    }
    return x;
}

CrfDataset generate_crf_dataset(std::uint64_t seed, std::size_t rows, std::size_t cols, std::size_t n_train,
                                std::size_t n_test, double noise_sigma) {
    if (rows < 5 || cols < 5) throw InvalidInput("CRF images need at least 5 x 5 pixels");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidInput("noise scale must be >= 0");
    CrfDataset data;
    data.rows = rows;
    data.cols = cols;
    data.original = x_shape(rows, cols);
    RngStream rng(derive_seed(seed, kNoise));
    auto noisy = [&] {
        std::vector<double> y(data.original.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double z = rng.normal();
            y[i] = data.original[i] + noise_sigma * z;
        }
        return y;
    };
    for (std::size_t k = 0; k < n_train; ++k) data.train.push_back(noisy());
    for (std::size_t k = 0; k < n_test; ++k) data.test.push_back(noisy());
    return data;
}

double classification_error(std::span<const BinaryState> test_states, const BinaryState& original) {
    if (test_states.empty()) throw InvalidInput("no test states");
    double wrong = 0.0;
    for (const auto& x : test_states) {
        if (x.size() != original.size()) throw InvalidInput("test state size differs from the original");
        for (std::size_t i = 0; i < x.size(); ++i) wrong += std::abs(x[i] - original[i]);
    }
    return wrong / (2.0 * static_cast<double>(test_states.size()) * static_cast<double>(original.size()));
}

// ---------------------------------------------------------------------------

IsingExperimentResult run_ising_experiment(const IsingExperimentConfig& cfg) {
    IsingExperimentResult res;
    std::shared_ptr<const Model> model;
    if (cfg.image) {
        const Layout& l = cfg.image->layout();
        if (cfg.image->encoding() != Encoding::Spin || l.kind != LayoutKind::Grid) {
            throw InvalidInput("the Ising experiment needs a spin image on a grid");
        }
        model = build_ising2d(l.rows, l.cols, false);
        res.observed = *cfg.image;
        if (model->num_sites() <= kMaxEnumerationSites) {
            try {
                res.theta_mle = exact_mle(*model, suff_stats(*model, res.observed));
            } catch (const NonexistenceError&) {
            }
        }
    } else {
        model = build_ising2d(cfg.rows, cfg.cols, false);
        if (model->num_sites() > kMaxEnumerationSites) throw SizeError("synthetic image too large to sample exactly");
        res.synthetic = true;
        RngStream rng(derive_seed(cfg.seed, kSynthetic));
        const ParamVector theta_star{cfg.theta_star};
        // Redraw images whose statistic sits on the boundary (no MLE).
        for (int attempt = 0; attempt < 100 && !res.theta_mle; ++attempt) {
            res.observed = exact_sample(rng, *model, theta_star, 1).front();
            try {
                res.theta_mle = exact_mle(*model, suff_stats(*model, res.observed));
            } catch (const NonexistenceError&) {
            }
        }
        if (!res.theta_mle) throw NonexistenceError("no synthetic image with an interior statistic in 100 draws");
    }

    std::vector<Observation> obs{{model, res.observed}};
    auto cd = cd_estimate(derive_seed(cfg.seed, kCd), obs, cfg.cd);
    res.theta_cd = cd.theta;
    res.cd_trace = std::move(cd.trace);
    auto ee = ee_estimate(derive_seed(cfg.seed, kEe), obs, res.theta_cd, cfg.ee, cfg.ee.step_kind);
    res.theta_hat = ee.theta;
    res.trace = std::move(ee.trace);
    res.report = diagnose(res.trace, cfg.ee.t_burnin, cfg.tau, cfg.ee.c);
    res.trace_sigma = tail_stddev(res.trace, cfg.ee.t_burnin);
    return res;
}

// ---------------------------------------------------------------------------

FitResult fit_ensemble(std::shared_ptr<const Model> model, std::span<const BinaryState> ensemble,
                       const EstimatorConfig& cd, const EstimatorConfig& ee, std::size_t handoff,
                       std::size_t loglik_stride, std::uint64_t seed) {
    const std::size_t L = model->num_stats();
    cd.validate(L, false);
    ee.validate(L, true);
    if (handoff > cd.t_max) throw InvalidConfig("EE handoff step lies beyond the CD run");
    if (loglik_stride == 0) throw InvalidConfig("likelihood stride must be >= 1");

    FitResult fit;
    fit.model_name = std::string(model->name());
    auto obs = make_observations(model, ensemble);
    const StatVector g_bar = target_statistics(obs);

    // The oracle only observes theta values handed out by the callbacks.
    const EnumerationTable table(*model);
    // Boundary ensembles (a pair always aligned) have no MLE; the oracle then
    // supplies a point attaining the likelihood supremum to within tolerance.
    MleOptions opt;
    opt.allow_boundary = true;
    const MleResult mle = exact_mle(table, g_bar, opt);
    fit.theta_mle = mle.theta;
    fit.mle_on_boundary = mle.boundary;
    fit.ll_mle = mle.log_likelihood;

    ContrastiveDivergence cd_run(obs, {}, derive_seed(seed, kCd));
    ParamVector theta0 = cd_run.theta();
    fit.cd_curve.push_back({0, table.log_likelihood(theta0, g_bar)});
    cd_run.run(cd.t_max, cd, fit.cd_trace, [&](std::size_t t, const ParamVector& theta) {
        if (t == handoff) theta0 = theta;
        if (t % loglik_stride == 0 || t == cd.t_max) fit.cd_curve.push_back({t, table.log_likelihood(theta, g_bar)});
    });
    fit.theta_cd = cd_run.theta();
    fit.ll_cd = table.log_likelihood(fit.theta_cd, g_bar);

    EquilibriumExpectation ee_run(obs, theta0, derive_seed(seed, kEe));
    fit.ee_curve.push_back({0, table.log_likelihood(theta0, g_bar)});
    ee_run.run(ee.t_max, ee, fit.ee_trace, [&](std::size_t t, const ParamVector& theta) {
        if (t % loglik_stride == 0 || t == ee.t_max) fit.ee_curve.push_back({t, table.log_likelihood(theta, g_bar)});
    });
    fit.theta_ee = tail_average(fit.ee_trace, ee.t_burnin);
    fit.ll_ee = table.log_likelihood(fit.theta_ee, g_bar);
    return fit;
}

VbmExperimentResult run_vbm_experiment(const VbmExperimentConfig& cfg) {
    VbmExperimentResult res;
    res.data = generate_vbm_dataset(cfg.seed, cfg.n_spins, cfg.n_chains, cfg.anneal_steps);
    if (cfg.fit_vbm) {
        res.vbm_fit = fit_ensemble(build_vbm(cfg.n_spins), res.data.ensemble, cfg.cd, cfg.ee, cfg.handoff_vbm,
                                   cfg.loglik_stride, derive_seed(cfg.seed, 100));
    }
    if (cfg.fit_ising) {
        res.ising_fit = fit_ensemble(build_ising1d_periodic(cfg.n_spins), res.data.ensemble, cfg.cd, cfg.ee,
                                     cfg.handoff_ising, cfg.loglik_stride, derive_seed(cfg.seed, 200));
    }
    return res;
}

// ---------------------------------------------------------------------------

CrfExperimentResult run_crf_experiment(const CrfExperimentConfig& cfg) {
    if (cfg.n_train == 0 || cfg.n_test == 0) throw InvalidConfig("need training and test samples");
    if (cfg.cd_steps == 0) throw InvalidConfig("CD needs at least one step");
    if (cfg.ee_phases.empty()) throw InvalidConfig("EE needs at least one phase");
    for (const auto& ph : cfg.ee_phases) {
        if (ph.steps == 0 || !(ph.a > 0.0)) throw InvalidConfig("EE phases need steps >= 1 and a > 0");
    }

    CrfExperimentResult res;
    res.data = generate_crf_dataset(cfg.seed, cfg.rows, cfg.cols, cfg.n_train, cfg.n_test, cfg.noise_sigma);
    const auto& data = res.data;

    std::vector<Observation> obs;
    for (const auto& y : data.train) obs.push_back({build_crf(y, data.rows, data.cols), data.original});

    // Persistent test chains from random labels, re-annealed after every update.
    std::vector<std::shared_ptr<const Model>> test_models;
    std::vector<BinaryState> test_states;
    std::vector<RngStream> test_rngs;
    for (std::size_t k = 0; k < data.test.size(); ++k) {
        test_models.push_back(build_crf(data.test[k], data.rows, data.cols));
        RngStream init(derive_seed(cfg.seed, kTestInit), k);
        BinaryState x = test_models.back()->blank_state();
        random_spins(init, x);
        test_states.push_back(std::move(x));
        test_rngs.emplace_back(derive_seed(cfg.seed, kTestAnneal), k);
    }
    auto evaluate = [&](std::span<const double> theta) {
        parallel_for(test_states.size(), [&](std::size_t k) {
            equilibrate(test_rngs[k], *test_models[k], theta, test_states[k], cfg.anneal_steps);
        });
        res.error_curve.push_back(classification_error(test_states, data.original));
    };

    evaluate(ParamVector(4, 0.0));

    EstimatorConfig cd;
    cd.a = cfg.cd_a;
    cd.m = cfg.cd_m;
    cd.t_max = cfg.cd_steps;
    cd.theta_guard = cfg.theta_guard;
    ContrastiveDivergence cd_run(obs, {}, derive_seed(cfg.seed, kCd));
    cd_run.run(cfg.cd_steps, cd, res.cd_trace, [&](std::size_t, const ParamVector& th) { evaluate(th); });
    res.theta_cd = cd_run.theta();
    res.final_cd_error =
        mean_of_tail(std::span<const double>(res.error_curve).subspan(1, cfg.cd_steps), cfg.error_window);

    // EE chains start at the labels. With one proposal per update a thresholded-y start
    // never relaxes and the multiplicative step runs J1 off.
    EquilibriumExpectation ee_run(obs, res.theta_cd, derive_seed(cfg.seed, kEe));
    for (const auto& ph : cfg.ee_phases) {
        EstimatorConfig ee;
        ee.a = ph.a;
        ee.c = cfg.ee_c;
        ee.m = cfg.ee_m == 0 ? data.rows * data.cols : cfg.ee_m;
        ee.t_max = ph.steps;
        ee.theta_guard = cfg.theta_guard;
        ee_run.run(ph.steps, ee, res.ee_trace, [&](std::size_t, const ParamVector& th) { evaluate(th); });
    }
    res.theta_ee = tail_average(res.ee_trace, res.ee_trace.size() - cfg.ee_phases.back().steps);
    res.final_ee_error =
        mean_of_tail(std::span<const double>(res.error_curve).subspan(1 + cfg.cd_steps), cfg.error_window);
    return res;
}

// ---------------------------------------------------------------------------

ErgmDemoResult run_ergm_demo(const ErgmDemoConfig& cfg) {
    if (cfg.nodes < 2 || cfg.nodes > 200) throw InvalidInput("the ERGM demo takes 2 to 200 nodes");
    const auto model = build_mini_ergm(cfg.nodes);
    const auto& ergm = dynamic_cast<const MiniErgm&>(*model);
    if (cfg.theta_star.size() != 2) throw InvalidInput("theta_star needs 2 entries (arc, mutual)");

    ErgmDemoResult res;
    const bool enumerable = model->num_sites() <= kMaxEnumerationSites;
    if (cfg.graph) {
        model->check_state(*cfg.graph);
        res.observed = *cfg.graph;
    } else if (enumerable) {
        RngStream rng(derive_seed(cfg.seed, kGraph));
        for (int attempt = 0; attempt < 100; ++attempt) {
            res.observed = exact_sample(rng, *model, cfg.theta_star, 1).front();
            if (ergm_statistics_interior(dyad_census(ergm, res.observed))) break;
        }
    } else {
        RngStream rng(derive_seed(cfg.seed, kGraph));
        res.observed = model->blank_state();
        equilibrate(rng, *model, cfg.theta_star, res.observed, 200 * model->num_sites());
    }

    res.census = dyad_census(ergm, res.observed);
    if (!ergm_statistics_interior(res.census)) {
        std::string missing;
        auto note = [&](std::size_t count, const char* kind) {
            if (count == 0) missing += (missing.empty() ? " " : " or ") + std::string(kind);
        };
        note(res.census.null, "null");
        note(res.census.asymmetric, "asymmetric");
        note(res.census.mutual, "mutual");
        throw NonexistenceError("observed graph has no" + missing +
                                " dyads; the arc/mutual statistics lie on the boundary and the MLE does not exist");
    }
    if (enumerable) res.theta_mle = exact_mle(*model, suff_stats(*model, res.observed));

    std::vector<Observation> obs{{model, res.observed}};
    auto cd = cd_estimate(derive_seed(cfg.seed, kCd), obs, with_fixed(cfg.cd, cfg.fixed));
    res.theta_cd = cd.theta;
    res.cd_trace = std::move(cd.trace);
    const EstimatorConfig ee_cfg = with_fixed(cfg.ee, cfg.fixed);
    auto ee = ee_estimate(derive_seed(cfg.seed, kEe), obs, res.theta_cd, ee_cfg, ee_cfg.step_kind);
    res.theta_ee = ee.theta;
    res.trace = std::move(ee.trace);
    res.report = diagnose(res.trace, ee_cfg.t_burnin, cfg.tau, ee_cfg.c);
    res.trace_sigma = tail_stddev(res.trace, ee_cfg.t_burnin);
    return res;
}

double ergm_update_seconds(std::size_t nodes, std::size_t m, std::size_t updates, std::uint64_t seed,
                           std::size_t repeats) {
    if (updates == 0 || repeats == 0) throw InvalidInput("need at least one update and one repeat");
    const auto model = build_mini_ergm(nodes);
    RngStream rng(derive_seed(seed, kTiming));
    BinaryState g = model->blank_state();
    for (std::size_t i = 0; i < g.size(); ++i) g.set(i, rng.uniform() < 0.05 ? 1 : 0);
    std::vector<Observation> obs{{model, g}};

    EstimatorConfig cfg;
    cfg.a = 0.001;
    cfg.c = 0.01;
    cfg.m = m;
    cfg.t_max = updates;
    const ParamVector theta0{-3.0, 1.0};

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r <= repeats; ++r) {
        EquilibriumExpectation ee(obs, theta0, derive_seed(seed, kEe + r));
        EstimationTrace trace;
        trace.set_initial_theta(theta0);
        trace.reserve(updates);
        const auto t0 = std::chrono::steady_clock::now();
        ee.run(updates, cfg, trace);
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (r > 0) best = std::min(best, s);  // first pass warms caches
    }
    return best / static_cast<double>(updates);
}

// ---------------------------------------------------------------------------

void write_likelihood_curve(const std::filesystem::path& path, std::span<const LikelihoodPoint> curve) {
    auto out = open_csv(path);
    out << "t,loglik\n";
    for (const auto& p : curve) out << p.t << ',' << io::format_double(p.value) << '\n';
}

void write_error_curve(const std::filesystem::path& path, std::span<const double> curve) {
    auto out = open_csv(path);
    out << "t,error\n";
    for (std::size_t t = 0; t < curve.size(); ++t) out << t << ',' << io::format_double(curve[t]) << '\n';
}

void write_theta(const std::filesystem::path& path, const Model& model, std::span<const double> theta) {
    if (theta.size() != model.num_stats()) throw InvalidInput("theta length differs from the statistic count");
    auto out = open_csv(path);
    out << "statistic,theta\n";
    for (std::size_t i = 0; i < theta.size(); ++i) {
        out << model.stat_names()[i] << ',' << io::format_double(theta[i]) << '\n';
    }
}

}  // namespace eestim::experiments
