#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "eestim/model.hpp"
#include "eestim/rng.hpp"
#include "eestim/sampler.hpp"
#include "eestim/state.hpp"

namespace eestim {

// Scale function f(|theta|, c) of the equilibrium-expectation update.
enum class StepSizeKind { MaxAbsC, AbsPlusC, MaxSqrtC };

double step_size(StepSizeKind kind, double theta_i, double c);

// Sign update theta - a f sign(d), or the magnitude-weighted soft variant
// theta - a f d.
enum class EeUpdate { Sign, Soft };

struct EstimatorConfig {
    double a = 0.001;           // learning rate
    double c = 0.01;            // floor letting parameters cross zero
    std::size_t m = 1;          // MH steps per parameter update
    std::size_t t_max = 1000;   // parameter updates
    std::size_t t_burnin = 500; // updates discarded by tail averaging
    double theta_guard = 50.0;  // |theta_i| above this aborts the run
    StepSizeKind step_kind = StepSizeKind::MaxAbsC;
    EeUpdate update = EeUpdate::Sign;
    // Parameters held at their initial value. Empty means all free.
    std::vector<bool> fixed;

    // Throws InvalidConfig; `require_burnin` adds t_burnin < t_max.
    void validate(std::size_t num_stats, bool require_burnin) const;
    bool is_fixed(std::size_t i) const { return i < fixed.size() && fixed[i]; }
};

// Per-update record: row t holds theta_t and the discrepancy d_t that drove
// the update into it. For EE and PCD, d_t = mean_k g(x_t^k) - target. For
// CD, whose state never moves, d_t is the mean accumulated change of the
// accepted proposals at the observation.
class EstimationTrace {
public:
    EstimationTrace() = default;
    explicit EstimationTrace(ParamVector initial_theta) : initial_theta_(std::move(initial_theta)) {}

    std::size_t size() const noexcept { return accepted_.size(); }
    bool empty() const noexcept { return accepted_.empty(); }
    std::size_t num_params() const noexcept { return initial_theta_.size(); }

    const ParamVector& initial_theta() const noexcept { return initial_theta_; }
    void set_initial_theta(ParamVector theta);

    std::span<const double> theta(std::size_t row) const {
        return {theta_.data() + row * num_params(), num_params()};
    }
    std::span<const double> d(std::size_t row) const { return {d_.data() + row * num_params(), num_params()}; }
    std::size_t accepted(std::size_t row) const { return accepted_[row]; }
    // theta_{t-1} for row t (the initial theta for row 0).
    std::span<const double> previous_theta(std::size_t row) const {
        return row == 0 ? std::span<const double>(initial_theta_) : theta(row - 1);
    }
    // One column over rows [begin, size()).
    std::vector<double> theta_column(std::size_t i, std::size_t begin = 0) const;
    std::vector<double> d_column(std::size_t i, std::size_t begin = 0) const;

    void append(std::span<const double> th, std::span<const double> dt, std::size_t acc);
    void reserve(std::size_t rows);

private:
    ParamVector initial_theta_;
    std::vector<double> theta_;  // row-major size() x L
    std::vector<double> d_;
    std::vector<std::size_t> accepted_;
};

// One training instance. Ensembles list several; models may differ per
// instance (e.g. CRF features) but must share the statistic count.
struct Observation {
    std::shared_ptr<const Model> model;
    BinaryState state;
};

std::vector<Observation> make_observations(std::shared_ptr<const Model> model, std::span<const BinaryState> states);

// Data-side target: mean over observations of g(x_obs).
StatVector target_statistics(std::span<const Observation> observations);

// Called after each update with (t, theta_t); t counts from 1.
using UpdateCallback = std::function<void(std::size_t, const ParamVector&)>;

// EE update of one parameter vector given discrepancy d = g(x_{t+1}) - g(x_0).
// sign(0) is 0.
ParamVector ee_step(std::span<const double> theta, std::span<const double> d, const EstimatorConfig& cfg,
                    StepSizeKind f = StepSizeKind::MaxAbsC);
ParamVector ee_soft_step(std::span<const double> theta, std::span<const double> d, const EstimatorConfig& cfg,
                         StepSizeKind f = StepSizeKind::MaxAbsC);

// Mean of theta_j for j > t_burnin (rows t_burnin .. size-1).
ParamVector tail_average(const EstimationTrace& trace, std::size_t t_burnin);

// Contrastive divergence over one or more observations. The working states
// are the observations themselves and are never moved.
class ContrastiveDivergence {
public:
    ContrastiveDivergence(std::vector<Observation> observations, ParamVector theta0, std::uint64_t seed);

    // `updates` parameter updates with learning rate cfg.a and cfg.m accept
    // tests per observation. Appends to `trace`.
    void run(std::size_t updates, const EstimatorConfig& cfg, EstimationTrace& trace,
             const UpdateCallback& callback = {});

    const ParamVector& theta() const noexcept { return theta_; }
    std::span<const BinaryState> working_states() const noexcept { return states_; }
    std::size_t updates_done() const noexcept { return t_; }

private:
    std::vector<Observation> observations_;
    std::vector<BinaryState> states_;
    std::vector<RngStream> rngs_;
    std::vector<MetropolisKernel> kernels_;
    ParamVector theta_;
    std::size_t t_ = 0;
};

// Equilibrium expectation: one persistent chain per observation, moves
// performed, the running statistic difference never reset.
class EquilibriumExpectation {
public:
    // Chains start at the observations unless `start_states` is given (one
    // per observation).
    EquilibriumExpectation(std::vector<Observation> observations, ParamVector theta0, std::uint64_t seed,
                           std::vector<BinaryState> start_states = {});

    // Continues from the current chain states and theta, so consecutive
    // calls may use different learning rates.
    void run(std::size_t updates, const EstimatorConfig& cfg, EstimationTrace& trace,
             const UpdateCallback& callback = {});

    const ParamVector& theta() const noexcept { return theta_; }
    std::span<const BinaryState> states() const noexcept { return states_; }
    // Per-chain running sum of realized changes, offset so that it equals
    // g(x_t^k) - g(x_obs^k).
    std::span<const StatVector> accumulators() const noexcept { return accum_; }
    // Mean over chains of the accumulators.
    StatVector discrepancy() const;
    const StatVector& target() const noexcept { return target_; }
    std::size_t updates_done() const noexcept { return t_; }

private:
    std::vector<Observation> observations_;
    std::vector<BinaryState> states_;
    std::vector<StatVector> accum_;
    std::vector<RngStream> rngs_;
    std::vector<MetropolisKernel> kernels_;
    StatVector target_;
    ParamVector theta_;
    std::size_t t_ = 0;
};

// Younes / persistent contrastive divergence with a caller-supplied
// learning-rate schedule a(t), t counting from 1.
class PersistentContrastiveDivergence {
public:
    PersistentContrastiveDivergence(std::vector<Observation> observations, ParamVector theta0, std::uint64_t seed);

    void run(std::size_t updates, const std::function<double(std::size_t)>& rate, const EstimatorConfig& cfg,
             EstimationTrace& trace);

    const ParamVector& theta() const noexcept { return theta_; }
    std::span<const BinaryState> states() const noexcept { return states_; }

private:
    std::vector<Observation> observations_;
    std::vector<BinaryState> states_;
    std::vector<StatVector> accum_;
    std::vector<RngStream> rngs_;
    std::vector<MetropolisKernel> kernels_;
    ParamVector theta_;
    std::size_t t_ = 0;
};

struct EstimateResult {
    ParamVector theta;
    EstimationTrace trace;
};

// CD from theta = 0 for cfg.t_max updates; returns the final theta.
EstimateResult cd_estimate(std::uint64_t seed, std::vector<Observation> observations, const EstimatorConfig& cfg);

// EE for cfg.t_max updates from theta0; returns the tail average over
// t > cfg.t_burnin. `f` selects the step scale (overriding cfg.step_kind);
// the sign/soft variant comes from cfg.update.
EstimateResult ee_estimate(std::uint64_t seed, std::vector<Observation> observations, ParamVector theta0,
                           const EstimatorConfig& cfg, StepSizeKind f = StepSizeKind::MaxAbsC);

// One PCD update: advance x one MH step, then
// theta += a_t (g(x_obs) - g(x_{t+1})). Throws DivergenceError past the guard.
ParamVector pcd_step(RngStream& rng, const Model& model, std::span<const double> theta, BinaryState& x,
                     const BinaryState& x_obs, double a_t, double theta_guard = 50.0);

// Throws DivergenceError naming the first |theta_i| > guard or non-finite entry.
void check_divergence(std::span<const double> theta, double guard, const Model* model = nullptr);

}  // namespace eestim
