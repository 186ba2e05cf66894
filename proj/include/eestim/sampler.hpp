#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "eestim/model.hpp"
#include "eestim/rng.hpp"
#include "eestim/state.hpp"

namespace eestim {

// Log acceptance ratios are clamped to this magnitude before exponentiation.
inline constexpr double kLogRatioClamp = 700.0;

// Site drawn uniformly; symmetric weights 1/len.
Proposal propose_uniform_flip(RngStream& rng, const BinaryState& x);

// min{1, exp(theta^T dg) * q_rev / q_fwd}, with dg from change statistics.
double acceptance_prob(const Model& model, std::span<const double> theta, const BinaryState& x, const Proposal& p);

struct StepResult {
    bool accepted = false;
    StatVector delta;  // realized g change; zero when rejected
};

struct SweepResult {
    StatVector delta;  // accumulated accepted changes
    std::size_t accepted = 0;
    std::size_t proposed = 0;
};

// Single-site Metropolis-Hastings kernel over one model. Holds scratch space
// so the hot loop does not allocate; one instance per thread.
class MetropolisKernel {
public:
    explicit MetropolisKernel(const Model& model) : model_(&model) {}

    const Model& model() const noexcept { return *model_; }

    // One proposal/accept test. On acceptance the change is added into
    // `accum` (size L) and, when `perform_move`, applied to x.
    bool step(RngStream& rng, std::span<const double> theta, BinaryState& x, bool perform_move,
              std::span<double> accum);

    // m steps; returns the number accepted.
    std::size_t sweep(RngStream& rng, std::span<const double> theta, BinaryState& x, std::size_t m,
                      bool perform_moves, std::span<double> accum);

    // Last computed change list (valid after step()).
    const ChangeList& last_changes() const noexcept { return changes_; }

private:
    const Model* model_;
    ChangeList changes_;
};

StepResult mh_step(RngStream& rng, const Model& model, std::span<const double> theta, BinaryState& x);

// m MH steps starting from x. With perform_moves the chain advances and
// delta == g(x_final) - g(x_initial); without, x is left untouched and
// delta sums the changes of accepted proposals made from x itself.
SweepResult run_sweep(RngStream& rng, const Model& model, std::span<const double> theta, BinaryState& x,
                      std::size_t m, bool perform_moves);

void equilibrate(RngStream& rng, const Model& model, std::span<const double> theta, BinaryState& x,
                 std::size_t steps);

// Equilibrates every chain for `steps` at fixed theta. Chain k draws from
// RngStream(seed, k), so results do not depend on the thread count.
void equilibrate_ensemble(std::uint64_t seed, const Model& model, std::span<const double> theta,
                          std::vector<BinaryState>& chains, std::size_t steps);

StatVector ensemble_mean_stats(std::span<const BinaryState> chains, const Model& model);

}  // namespace eestim
