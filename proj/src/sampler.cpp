#include "eestim/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eestim/error.hpp"
#include "eestim/parallel.hpp"

namespace eestim {
namespace {

double log_ratio(std::span<const double> theta, const ChangeList& delta, const Proposal& p) {
    double r = dot(theta, delta);
    if (p.forward_weight != p.reverse_weight) r += std::log(p.reverse_weight / p.forward_weight);
    return std::clamp(r, -kLogRatioClamp, kLogRatioClamp);
}

void check_theta(const Model& model, std::span<const double> theta) {
    if (theta.size() != model.num_stats()) {
        throw InvalidInput("theta has " + std::to_string(theta.size()) + " entries, model has " +
                           std::to_string(model.num_stats()) + " statistics");
    }
}

}  // namespace

Proposal propose_uniform_flip(RngStream& rng, const BinaryState& x) {
    if (x.empty()) throw InvalidInput("cannot propose on an empty state");
    const double w = 1.0 / static_cast<double>(x.size());
    return Proposal{rng.index(x.size()), w, w};
}

double acceptance_prob(const Model& model, std::span<const double> theta, const BinaryState& x, const Proposal& p) {
    check_theta(model, theta);
    if (p.site >= x.size()) throw InvalidInput("proposal site out of range");
    ChangeList delta;
    model.compute_changes(x, p.site, delta);
    const double r = log_ratio(theta, delta, p);
    return r >= 0.0 ? 1.0 : std::exp(r);
}

bool MetropolisKernel::step(RngStream& rng, std::span<const double> theta, BinaryState& x, bool perform_move,
                            std::span<double> accum) {
    const Proposal p = propose_uniform_flip(rng, x);
    model_->compute_changes(x, p.site, changes_);
    const double r = log_ratio(theta, changes_, p);
    if (r < 0.0 && !(rng.uniform() < std::exp(r))) return false;
    for (const auto& d : changes_) accum[d.index] += d.value;
    if (perform_move) x.flip(p.site);
    return true;
}

std::size_t MetropolisKernel::sweep(RngStream& rng, std::span<const double> theta, BinaryState& x, std::size_t m,
                                    bool perform_moves, std::span<double> accum) {
    std::size_t accepted = 0;
    for (std::size_t k = 0; k < m; ++k) accepted += step(rng, theta, x, perform_moves, accum) ? 1 : 0;
    return accepted;
}

StepResult mh_step(RngStream& rng, const Model& model, std::span<const double> theta, BinaryState& x) {
    model.check_state(x);
    check_theta(model, theta);
    MetropolisKernel kernel(model);
    StepResult result;
    result.delta.assign(model.num_stats(), 0.0);
    result.accepted = kernel.step(rng, theta, x, true, result.delta);
    return result;
}

SweepResult run_sweep(RngStream& rng, const Model& model, std::span<const double> theta, BinaryState& x,
                      std::size_t m, bool perform_moves) {
    model.check_state(x);
    check_theta(model, theta);
    if (m == 0) throw InvalidInput("sweep length m must be >= 1");
    MetropolisKernel kernel(model);
    SweepResult result;
    result.delta.assign(model.num_stats(), 0.0);
    result.accepted = kernel.sweep(rng, theta, x, m, perform_moves, result.delta);
    result.proposed = m;
    return result;
}

void equilibrate(RngStream& rng, const Model& model, std::span<const double> theta, BinaryState& x,
                 std::size_t steps) {
    model.check_state(x);
    check_theta(model, theta);
    if (steps == 0) return;
    MetropolisKernel kernel(model);
    StatVector sink(model.num_stats(), 0.0);
    kernel.sweep(rng, theta, x, steps, true, sink);
}

void equilibrate_ensemble(std::uint64_t seed, const Model& model, std::span<const double> theta,
                          std::vector<BinaryState>& chains, std::size_t steps) {
    for (const auto& x : chains) model.check_state(x);
    check_theta(model, theta);
    parallel_for(chains.size(), [&](std::size_t k) {
        RngStream rng(seed, k);
        MetropolisKernel kernel(model);
        StatVector sink(model.num_stats(), 0.0);
        if (steps > 0) kernel.sweep(rng, theta, chains[k], steps, true, sink);
    });
}

StatVector ensemble_mean_stats(std::span<const BinaryState> chains, const Model& model) {
    if (chains.empty()) throw InvalidInput("ensemble is empty");
    StatVector mean(model.num_stats(), 0.0);
    StatVector g(model.num_stats(), 0.0);
    for (const auto& x : chains) {
        model.check_state(x);
        model.compute_stats(x, g);
        for (std::size_t i = 0; i < g.size(); ++i) mean[i] += g[i];
    }
    for (auto& v : mean) v /= static_cast<double>(chains.size());
    return mean;
}

}  // namespace eestim
