#include "eestim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eestim/error.hpp"
#include "eestim/parallel.hpp"

namespace eestim {
namespace {

// Below this many MH steps per update, thread start-up costs more than the work.
constexpr std::size_t kParallelStepThreshold = 1U << 16;

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::size_t common_stat_count(const std::vector<Observation>& observations) {
    if (observations.empty()) throw InvalidInput("no observations supplied");
    const std::size_t L = observations.front().model->num_stats();
    for (const auto& ob : observations) {
        if (!ob.model) throw InvalidInput("observation without a model");
        if (ob.model->num_stats() != L) throw InvalidInput("observations disagree on the statistic count");
        ob.model->check_state(ob.state);
    }
    return L;
}

void check_theta_size(std::span<const double> theta, std::size_t L) {
    if (theta.size() != L) {
        throw InvalidInput("theta has " + std::to_string(theta.size()) + " entries, expected " + std::to_string(L));
    }
    for (double v : theta) {
        if (!std::isfinite(v)) throw InvalidInput("theta has a non-finite entry");
    }
}

// Runs `m` steps on every chain; per-chain accumulators receive the accepted
// changes. Returns the total accepted count.
std::size_t advance_chains(std::vector<MetropolisKernel>& kernels, std::vector<RngStream>& rngs,
                           std::vector<BinaryState>& states, std::vector<StatVector>& accum,
                           std::span<const double> theta, std::size_t m, bool perform_moves,
                           std::vector<std::size_t>& accepted_scratch) {
    const std::size_t K = states.size();
    accepted_scratch.assign(K, 0);
    auto body = [&](std::size_t k) {
        accepted_scratch[k] = kernels[k].sweep(rngs[k], theta, states[k], m, perform_moves, accum[k]);
    };
    if (K > 1 && K * m >= kParallelStepThreshold) {
        parallel_for(K, body);
    } else {
        for (std::size_t k = 0; k < K; ++k) body(k);
    }
    std::size_t total = 0;
    for (auto a : accepted_scratch) total += a;
    return total;
}

void mean_into(const std::vector<StatVector>& rows, StatVector& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += r[i];
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (auto& v : out) v *= inv;
}

}  // namespace

double step_size(StepSizeKind kind, double theta_i, double c) {
    const double mag = std::abs(theta_i);
    switch (kind) {
        case StepSizeKind::MaxAbsC: return std::max(mag, c);
        case StepSizeKind::AbsPlusC: return mag + c;
        case StepSizeKind::MaxSqrtC: return std::max(std::sqrt(mag), c);
    }
    return c;
}

void EstimatorConfig::validate(std::size_t num_stats, bool require_burnin) const {
    if (!(a > 0.0) || !std::isfinite(a)) throw InvalidConfig("learning rate a must be > 0");
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidConfig("constant c must be > 0");
    if (m < 1) throw InvalidConfig("m must be >= 1");
    if (!(theta_guard > 0.0)) throw InvalidConfig("theta_guard must be > 0");
    if (require_burnin && t_burnin >= t_max) {
        throw InvalidConfig("burn-in t_B = " + std::to_string(t_burnin) + " must be below t_max = " +
                            std::to_string(t_max));
    }
    if (!fixed.empty() && fixed.size() != num_stats) throw InvalidConfig("fixed mask length differs from L");
}

void EstimationTrace::set_initial_theta(ParamVector theta) {
    if (!empty() && theta.size() != num_params()) throw InvalidInput("initial theta length differs from trace rows");
    initial_theta_ = std::move(theta);
}

void EstimationTrace::append(std::span<const double> th, std::span<const double> dt, std::size_t acc) {
    if (th.size() != num_params() || dt.size() != num_params()) throw InvalidInput("trace row length mismatch");
    theta_.insert(theta_.end(), th.begin(), th.end());
    d_.insert(d_.end(), dt.begin(), dt.end());
    accepted_.push_back(acc);
}

void EstimationTrace::reserve(std::size_t rows) {
    theta_.reserve(rows * num_params());
    d_.reserve(rows * num_params());
    accepted_.reserve(rows);
}

std::vector<double> EstimationTrace::theta_column(std::size_t i, std::size_t begin) const {
    std::vector<double> out;
    for (std::size_t t = begin; t < size(); ++t) out.push_back(theta_[t * num_params() + i]);
    return out;
}

std::vector<double> EstimationTrace::d_column(std::size_t i, std::size_t begin) const {
    std::vector<double> out;
    for (std::size_t t = begin; t < size(); ++t) out.push_back(d_[t * num_params() + i]);
    return out;
}

std::vector<Observation> make_observations(std::shared_ptr<const Model> model, std::span<const BinaryState> states) {
    std::vector<Observation> out;
    out.reserve(states.size());
    for (const auto& s : states) {
        model->check_state(s);
        out.push_back(Observation{model, s});
    }
    return out;
}

StatVector target_statistics(std::span<const Observation> observations) {
    if (observations.empty()) throw InvalidInput("no observations supplied");
    const std::size_t L = observations.front().model->num_stats();
    StatVector mean(L, 0.0), g(L, 0.0);
    for (const auto& ob : observations) {
        ob.model->check_state(ob.state);
        ob.model->compute_stats(ob.state, g);
        for (std::size_t i = 0; i < L; ++i) mean[i] += g[i];
    }
    for (auto& v : mean) v /= static_cast<double>(observations.size());
    return mean;
}

void check_divergence(std::span<const double> theta, double guard, const Model* model) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!std::isfinite(theta[i]) || std::abs(theta[i]) > guard) {
            std::string label = model && i < model->num_stats() ? model->stat_names()[i] : "theta_" + std::to_string(i + 1);
            throw DivergenceError(i, theta[i],
                                  "parameter " + label + " diverged to " + std::to_string(theta[i]) +
                                      " (guard " + std::to_string(guard) + "); the MLE may not exist");
        }
    }
}

ParamVector ee_step(std::span<const double> theta, std::span<const double> d, const EstimatorConfig& cfg,
                    StepSizeKind f) {
    if (theta.size() != d.size()) throw InvalidInput("theta and d differ in length");
    ParamVector next(theta.begin(), theta.end());
    for (std::size_t i = 0; i < next.size(); ++i) {
        if (cfg.is_fixed(i)) continue;
        if (!std::isfinite(d[i])) throw InvalidInput("non-finite discrepancy");
        const double s = sign_of(d[i]);
        if (s != 0.0) next[i] = theta[i] - cfg.a * step_size(f, theta[i], cfg.c) * s;
    }
    return next;
}

ParamVector ee_soft_step(std::span<const double> theta, std::span<const double> d, const EstimatorConfig& cfg,
                         StepSizeKind f) {
    if (theta.size() != d.size()) throw InvalidInput("theta and d differ in length");
    ParamVector next(theta.begin(), theta.end());
    for (std::size_t i = 0; i < next.size(); ++i) {
        if (cfg.is_fixed(i)) continue;
        if (!std::isfinite(d[i])) throw InvalidInput("non-finite discrepancy");
        if (d[i] != 0.0) next[i] = theta[i] - cfg.a * step_size(f, theta[i], cfg.c) * d[i];
    }
    return next;
}

ParamVector tail_average(const EstimationTrace& trace, std::size_t t_burnin) {
    if (t_burnin >= trace.size()) throw InvalidInput("empty tail: burn-in covers the whole trace");
    ParamVector mean(trace.num_params(), 0.0);
    for (std::size_t t = t_burnin; t < trace.size(); ++t) {
        const auto row = trace.theta(t);
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += row[i];
    }
    for (auto& v : mean) v /= static_cast<double>(trace.size() - t_burnin);
    return mean;
}

// --- ContrastiveDivergence ---------------------------------------------------

ContrastiveDivergence::ContrastiveDivergence(std::vector<Observation> observations, ParamVector theta0,
                                             std::uint64_t seed)
    : observations_(std::move(observations)), theta_(std::move(theta0)) {
    const std::size_t L = common_stat_count(observations_);
    if (theta_.empty()) theta_.assign(L, 0.0);
    check_theta_size(theta_, L);
    for (std::size_t k = 0; k < observations_.size(); ++k) {
        states_.push_back(observations_[k].state);
        rngs_.emplace_back(seed, k);
        kernels_.emplace_back(*observations_[k].model);
    }
}

void ContrastiveDivergence::run(std::size_t updates, const EstimatorConfig& cfg, EstimationTrace& trace,
                                const UpdateCallback& callback) {
    const std::size_t L = theta_.size();
    cfg.validate(L, false);
    if (trace.num_params() == 0) trace.set_initial_theta(theta_);
    trace.reserve(trace.size() + updates);
    std::vector<StatVector> delta(states_.size(), StatVector(L, 0.0));
    std::vector<std::size_t> accepted;
    StatVector mean(L, 0.0);
    for (std::size_t u = 0; u < updates; ++u) {
        for (auto& dk : delta) std::fill(dk.begin(), dk.end(), 0.0);
        const std::size_t acc = advance_chains(kernels_, rngs_, states_, delta, theta_, cfg.m, false, accepted);
        mean_into(delta, mean);
        for (std::size_t i = 0; i < L; ++i) {
            if (!cfg.is_fixed(i)) theta_[i] -= cfg.a * mean[i];
        }
        check_divergence(theta_, cfg.theta_guard, observations_.front().model.get());
        ++t_;
        trace.append(theta_, mean, acc);
        if (callback) callback(t_, theta_);
    }
}

// --- EquilibriumExpectation --------------------------------------------------

EquilibriumExpectation::EquilibriumExpectation(std::vector<Observation> observations, ParamVector theta0,
                                               std::uint64_t seed, std::vector<BinaryState> start_states)
    : observations_(std::move(observations)), theta_(std::move(theta0)) {
    const std::size_t L = common_stat_count(observations_);
    check_theta_size(theta_, L);
    if (!start_states.empty() && start_states.size() != observations_.size()) {
        throw InvalidInput("need one start state per observation");
    }
    target_ = target_statistics(observations_);
    StatVector g_obs(L), g_start(L);
    for (std::size_t k = 0; k < observations_.size(); ++k) {
        const Model& model = *observations_[k].model;
        BinaryState start = start_states.empty() ? observations_[k].state : std::move(start_states[k]);
        model.check_state(start);
        model.compute_stats(observations_[k].state, g_obs);
        model.compute_stats(start, g_start);
        StatVector acc(L);
        for (std::size_t i = 0; i < L; ++i) acc[i] = g_start[i] - g_obs[i];
        states_.push_back(std::move(start));
        accum_.push_back(std::move(acc));
        rngs_.emplace_back(seed, k);
        kernels_.emplace_back(model);
    }
}

StatVector EquilibriumExpectation::discrepancy() const {
    StatVector d(theta_.size(), 0.0);
    mean_into(accum_, d);
    return d;
}

void EquilibriumExpectation::run(std::size_t updates, const EstimatorConfig& cfg, EstimationTrace& trace,
                                 const UpdateCallback& callback) {
    const std::size_t L = theta_.size();
    cfg.validate(L, false);
    if (trace.num_params() == 0) trace.set_initial_theta(theta_);
    trace.reserve(trace.size() + updates);
    std::vector<std::size_t> accepted;
    StatVector d(L, 0.0);
    for (std::size_t u = 0; u < updates; ++u) {
        const std::size_t acc = advance_chains(kernels_, rngs_, states_, accum_, theta_, cfg.m, true, accepted);
        mean_into(accum_, d);
        theta_ = cfg.update == EeUpdate::Sign ? ee_step(theta_, d, cfg, cfg.step_kind)
                                              : ee_soft_step(theta_, d, cfg, cfg.step_kind);
        check_divergence(theta_, cfg.theta_guard, observations_.front().model.get());
        ++t_;
        trace.append(theta_, d, acc);
        if (callback) callback(t_, theta_);
    }
}

// --- PersistentContrastiveDivergence -----------------------------------------

PersistentContrastiveDivergence::PersistentContrastiveDivergence(std::vector<Observation> observations,
                                                                 ParamVector theta0, std::uint64_t seed)
    : observations_(std::move(observations)), theta_(std::move(theta0)) {
    const std::size_t L = common_stat_count(observations_);
    if (theta_.empty()) theta_.assign(L, 0.0);
    check_theta_size(theta_, L);
    for (std::size_t k = 0; k < observations_.size(); ++k) {
        states_.push_back(observations_[k].state);
        accum_.emplace_back(L, 0.0);
        rngs_.emplace_back(seed, k);
        kernels_.emplace_back(*observations_[k].model);
    }
}

void PersistentContrastiveDivergence::run(std::size_t updates, const std::function<double(std::size_t)>& rate,
                                          const EstimatorConfig& cfg, EstimationTrace& trace) {
    const std::size_t L = theta_.size();
    cfg.validate(L, false);
    if (trace.num_params() == 0) trace.set_initial_theta(theta_);
    trace.reserve(trace.size() + updates);
    std::vector<std::size_t> accepted;
    StatVector d(L, 0.0);
    for (std::size_t u = 0; u < updates; ++u) {
        const double a_t = rate(t_ + 1);
        if (!(a_t > 0.0)) throw InvalidConfig("PCD learning rate must be > 0");
        const std::size_t acc = advance_chains(kernels_, rngs_, states_, accum_, theta_, cfg.m, true, accepted);
        mean_into(accum_, d);
        for (std::size_t i = 0; i < L; ++i) {
            if (!cfg.is_fixed(i)) theta_[i] -= a_t * d[i];
        }
        check_divergence(theta_, cfg.theta_guard, observations_.front().model.get());
        ++t_;
        trace.append(theta_, d, acc);
    }
}

// --- free-function entry points ---------------------------------------------

EstimateResult cd_estimate(std::uint64_t seed, std::vector<Observation> observations, const EstimatorConfig& cfg) {
    ContrastiveDivergence cd(std::move(observations), {}, seed);
    EstimateResult result;
    cd.run(cfg.t_max, cfg, result.trace);
    result.theta = cd.theta();
    return result;
}

EstimateResult ee_estimate(std::uint64_t seed, std::vector<Observation> observations, ParamVector theta0,
                           const EstimatorConfig& cfg, StepSizeKind f) {
    if (observations.empty()) throw InvalidInput("no observations supplied");
    cfg.validate(observations.front().model->num_stats(), true);
    EstimatorConfig run_cfg = cfg;
    run_cfg.step_kind = f;
    EquilibriumExpectation ee(std::move(observations), std::move(theta0), seed);
    EstimateResult result;
    ee.run(cfg.t_max, run_cfg, result.trace);
    result.theta = tail_average(result.trace, cfg.t_burnin);
    return result;
}

ParamVector pcd_step(RngStream& rng, const Model& model, std::span<const double> theta, BinaryState& x,
                     const BinaryState& x_obs, double a_t, double theta_guard) {
    if (!(a_t > 0.0)) throw InvalidConfig("PCD learning rate must be > 0");
    model.check_state(x_obs);
    mh_step(rng, model, theta, x);
    const StatVector g_obs = suff_stats(model, x_obs);
    const StatVector g_new = suff_stats(model, x);
    ParamVector next(theta.begin(), theta.end());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += a_t * (g_obs[i] - g_new[i]);
    check_divergence(next, theta_guard, &model);
    return next;
}

}  // namespace eestim
