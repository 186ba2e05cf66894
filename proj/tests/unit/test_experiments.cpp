#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "eestim/error.hpp"
#include "eestim/exact.hpp"
#include "eestim/experiments.hpp"
#include "support.hpp"

using namespace eestim;
namespace ex = eestim::experiments;

TEST_CASE("derived seeds are distinct and stable") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t tag = 0; tag < 50; ++tag) seen.insert(ex::derive_seed(7, tag));
    CHECK(seen.size() == 50);
    CHECK(ex::derive_seed(7, 3) == ex::derive_seed(7, 3));
    CHECK(ex::derive_seed(7, 3) != ex::derive_seed(8, 3));
}

TEST_CASE("VBM dataset") {
    const auto a = ex::generate_vbm_dataset(3, 15, 20, 500);
    CHECK(a.theta_star.size() == 105);
    CHECK(a.ensemble.size() == 20);
    CHECK(a.g_bar.size() == 105);
    const auto b = ex::generate_vbm_dataset(3, 15, 20, 500);
    CHECK(a.g_bar == b.g_bar);
    CHECK(a.theta_star == b.theta_star);
    CHECK(ex::generate_vbm_dataset(4, 15, 20, 500).g_bar != a.g_bar);
    auto model = build_vbm(15);
    CHECK(ensemble_mean_stats(a.ensemble, *model) == a.g_bar);
}

TEST_CASE("VBM dataset at zero coupling has zero mean statistics") {
    const std::size_t n = 1000;
    const auto d = ex::generate_vbm_dataset(5, 6, n, 300, ParamVector(15, 0.0));
    CHECK(d.theta_star == ParamVector(15, 0.0));
    for (double g : d.g_bar) CHECK(std::abs(g) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK_THROWS_AS(ex::generate_vbm_dataset(5, 6, n, 300, ParamVector(3, 0.0)), InvalidInput);
}

TEST_CASE("X-shaped original image") {
    const auto x = ex::x_shape(40, 40);
    auto at = [&](std::size_t r, std::size_t c) { return x[r * 40 + c]; };
    CHECK(at(0, 39) == 1);
    CHECK(at(0, 0) == 1);
    CHECK(at(20, 20) == 1);
    CHECK(at(0, 20) == -1);
    for (std::size_t r = 0; r < 40; ++r) {
        for (std::size_t c = 0; c < 40; ++c) {
            CHECK(at(r, c) == at(c, r));
            CHECK(at(r, c) == at(39 - c, 39 - r));
            const bool band = (r > c ? r - c : c - r) <= 2 ||
                              std::abs(static_cast<long>(r + c) - 39) <= 2;
            CHECK(at(r, c) == (band ? 1 : -1));
        }
    }
}

TEST_CASE("CRF dataset") {
    const auto d = ex::generate_crf_dataset(2, 10, 12, 3, 2, 1.0);
    CHECK(d.train.size() == 3);
    CHECK(d.test.size() == 2);
    CHECK(d.train[0].size() == 120);
    CHECK(d.original == ex::x_shape(10, 12));
    const auto clean = ex::generate_crf_dataset(2, 10, 12, 2, 2, 0.0);
    for (const auto& y : clean.train) {
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == clean.original[i]);
    }
    CHECK_THROWS_AS(ex::generate_crf_dataset(2, 4, 10), InvalidInput);
    CHECK(ex::generate_crf_dataset(2, 10, 12, 3, 2).train == d.train);
}

TEST_CASE("classification error") {
    const auto x0 = ex::x_shape(40, 40);
    CHECK(ex::classification_error(std::vector<BinaryState>{x0, x0}, x0) == 0.0);
    BinaryState flipped = x0;
    for (std::size_t i = 0; i < flipped.size(); ++i) flipped.flip(i);
    CHECK(ex::classification_error(std::vector<BinaryState>{flipped}, x0) == 1.0);
    BinaryState partial = x0;
    for (std::size_t i = 0; i < 160; ++i) partial.flip(i * 10);
    CHECK(ex::classification_error(std::vector<BinaryState>{partial}, x0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK_THROWS_AS(ex::classification_error(std::vector<BinaryState>{ex::x_shape(5, 5)}, x0), InvalidInput);
    CHECK_THROWS_AS(ex::classification_error(std::vector<BinaryState>{}, x0), InvalidInput);
}

TEST_CASE("small Ising experiment") {
    ex::IsingExperimentConfig cfg;
    cfg.rows = 3;
    cfg.cols = 3;
    cfg.ee.t_max = 20000;
    cfg.ee.t_burnin = 10000;
    const auto r = ex::run_ising_experiment(cfg);
    CHECK(r.synthetic);
    CHECK(r.trace.size() == 20000);
    CHECK(r.cd_trace.size() == cfg.cd.t_max);
    REQUIRE(r.theta_mle.has_value());
    CHECK(r.theta_hat == tail_average(r.trace, 10000));
    CHECK(r.trace.initial_theta() == r.theta_cd);
    CHECK(r.report.t_ratio.size() == 1);
    CHECK(r.trace_sigma.size() == 1);

    // bond statistics are integers, so every logged gap is too
    for (std::size_t t = 0; t < r.trace.size(); t += 97) CHECK(r.trace.d(t)[0] == std::round(r.trace.d(t)[0]));

    const auto again = ex::run_ising_experiment(cfg);
    CHECK(again.theta_hat == r.theta_hat);
    CHECK(again.observed == r.observed);
}

TEST_CASE("Ising experiment with a supplied image") {
    ex::IsingExperimentConfig cfg;
    cfg.image = BinaryState(Encoding::Spin, Layout::grid(3, 3), {1, 1, -1, 1, -1, -1, 1, 1, -1});
    cfg.ee.t_max = 5000;
    cfg.ee.t_burnin = 2500;
    const auto r = ex::run_ising_experiment(cfg);
    CHECK_FALSE(r.synthetic);
    CHECK(r.observed == *cfg.image);
    REQUIRE(r.theta_mle.has_value());
    cfg.image = BinaryState(Encoding::Tie, Layout::grid(3, 3));
    CHECK_THROWS_AS(ex::run_ising_experiment(cfg), InvalidInput);
}

TEST_CASE("EE d columns equal suff_stats minus target at every logged step") {
    auto model = build_ising2d(4, 4, true);
    RngStream rng(3, 0);
    const auto x0 = testing::random_state(rng, *model);
    EquilibriumExpectation ee(make_observations(model, std::vector<BinaryState>{x0}), ParamVector{0.2, 0.0}, 5);
    EstimationTrace trace;
    std::vector<StatVector> logged;
    EstimatorConfig cfg;
    ee.run(2000, cfg, trace, [&](std::size_t, const ParamVector&) {
        auto g = suff_stats(*model, ee.states()[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= ee.target()[i];
        logged.push_back(g);
    });
    for (std::size_t t = 0; t < trace.size(); ++t) {
        CHECK(trace.d(t)[0] == logged[t][0]);
        CHECK(trace.d(t)[1] == logged[t][1]);
    }
}

TEST_CASE("small VBM experiment") {
    ex::VbmExperimentConfig cfg;
    cfg.n_spins = 6;
    cfg.n_chains = 100;
    cfg.anneal_steps = 2000;
    cfg.cd.t_max = 2000;
    cfg.ee.t_max = 2000;
    cfg.ee.t_burnin = 1000;
    cfg.loglik_stride = 100;
    const auto r = ex::run_vbm_experiment(cfg);
    REQUIRE(r.vbm_fit.has_value());
    REQUIRE(r.ising_fit.has_value());
    const auto& v = *r.vbm_fit;
    CHECK(v.theta_ee.size() == 15);
    CHECK(r.ising_fit->theta_ee.size() == 6);
    CHECK(v.cd_trace.size() == 2000);
    CHECK(v.ee_trace.size() == 2000);
    CHECK(v.cd_curve.size() == 21);
    CHECK(v.ee_curve.size() == 21);
    CHECK(v.ee_trace.initial_theta() == ParamVector(v.cd_trace.theta(cfg.handoff_vbm - 1).begin(),
                                                    v.cd_trace.theta(cfg.handoff_vbm - 1).end()));
    // curve values come from the exact oracle
    auto model = build_vbm(6);
    const auto& last = v.ee_curve.back();
    CHECK(last.t == 2000);
    CHECK(last.value == doctest::Approx(log_likelihood(*model, v.ee_trace.theta(1999), r.data.g_bar)).epsilon(1e-12));
    CHECK(v.ll_mle >= v.ll_cd - 1e-9);
    CHECK(v.ll_mle >= v.ll_ee - 1e-9);
    CHECK(v.ll_ee == doctest::Approx(log_likelihood(*model, v.theta_ee, r.data.g_bar)).epsilon(1e-12));

    cfg.handoff_vbm = 5000;
    CHECK_THROWS_AS(ex::run_vbm_experiment(cfg), InvalidConfig);
}

TEST_CASE("small CRF experiment") {
    ex::CrfExperimentConfig cfg;
    cfg.rows = 8;
    cfg.cols = 8;
    cfg.n_train = 3;
    cfg.n_test = 2;
    cfg.cd_steps = 50;
    cfg.ee_phases = {{30, 0.01}, {20, 0.001}};
    cfg.anneal_steps = 50;
    cfg.error_window = 10;
    const auto r = ex::run_crf_experiment(cfg);
    CHECK(r.error_curve.size() == 1 + 50 + 50);
    CHECK(r.cd_trace.size() == 50);
    CHECK(r.ee_trace.size() == 50);
    for (double e : r.error_curve) {
        CHECK(e >= 0.0);
        CHECK(e <= 1.0);
    }
    double cd_tail = 0.0, ee_tail = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
        cd_tail += r.error_curve[50 - i];
        ee_tail += r.error_curve[100 - i];
    }
    CHECK(r.final_cd_error == doctest::Approx(cd_tail / 10.0));
    CHECK(r.final_ee_error == doctest::Approx(ee_tail / 10.0));
    CHECK(r.theta_cd.size() == 4);
    CHECK(r.theta_ee == tail_average(r.ee_trace, 30));
    cfg.ee_phases.clear();
    CHECK_THROWS_AS(ex::run_crf_experiment(cfg), InvalidConfig);
}

TEST_CASE("small ERGM demo") {
    ex::ErgmDemoConfig cfg;
    cfg.ee.t_max = 20000;
    cfg.ee.t_burnin = 10000;
    const auto r = ex::run_ergm_demo(cfg);
    CHECK(ergm_statistics_interior(r.census));
    CHECK(r.trace.size() == 20000);
    REQUIRE(r.theta_mle.has_value());
    CHECK(r.theta_ee.size() == 2);

    ex::ErgmDemoConfig empty = cfg;
    empty.graph = BinaryState(Encoding::Tie, Layout::digraph(4));
    CHECK_THROWS_AS(ex::run_ergm_demo(empty), NonexistenceError);
    ex::ErgmDemoConfig full = cfg;
    full.graph = BinaryState(Encoding::Tie, Layout::digraph(4), std::vector<std::int8_t>(12, 1));
    CHECK_THROWS_AS(ex::run_ergm_demo(full), NonexistenceError);
}

TEST_CASE("ERGM timing helper") {
    const double s = ex::ergm_update_seconds(20, 5, 200, 1, 1);
    CHECK(s > 0.0);
    CHECK(s < 0.01);
}

TEST_CASE("output writers") {
    const auto dir = std::filesystem::temp_directory_path() / "eestim_writers_test";
    std::filesystem::create_directories(dir);
    ex::write_likelihood_curve(dir / "ll.csv", std::vector<ex::LikelihoodPoint>{{0, -1.5}, {10, -1.25}});
    ex::write_error_curve(dir / "err.csv", std::vector<double>{0.5, 0.25});
    auto model = build_ising2d(2, 2, true);
    ex::write_theta(dir / "theta.csv", *model, std::vector<double>{0.1, -0.2});
    std::ifstream ll(dir / "ll.csv"), err(dir / "err.csv"), th(dir / "theta.csv");
    std::string line;
    std::getline(ll, line);
    CHECK(line == "t,loglik");
    std::getline(ll, line);
    CHECK(line == "0,-1.5");
    std::getline(err, line);
    CHECK(line == "t,error");
    std::getline(th, line);
    CHECK(line == "statistic,theta");
    std::size_t rows = 0;
    while (std::getline(th, line)) ++rows;
    CHECK(rows == 2);
    CHECK_THROWS_AS(ex::write_theta(dir / "bad.csv", *model, std::vector<double>{0.1}), InvalidInput);
    std::filesystem::remove_all(dir);
}
