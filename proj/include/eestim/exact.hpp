#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "eestim/model.hpp"
#include "eestim/rng.hpp"
#include "eestim/state.hpp"

namespace eestim {

// Brute-force enumeration over all 2^N states of a small model.
inline constexpr std::size_t kMaxEnumerationSites = 20;
// Kernel-level checks materialize per-state transition rows.
inline constexpr std::size_t kMaxKernelSites = 12;

// Sufficient statistics of every state, addressed by integer code (site i
// high iff bit i set). Rows are cached when they fit in memory and
// regenerated block by block otherwise. Reductions run over fixed blocks
// merged in order, so results do not depend on the thread count.
class EnumerationTable {
public:
    explicit EnumerationTable(const Model& model);

    const Model& model() const noexcept { return *model_; }
    std::size_t num_sites() const noexcept { return n_sites_; }
    std::uint64_t num_states() const noexcept { return n_states_; }
    std::size_t num_stats() const noexcept { return n_stats_; }
    bool cached() const noexcept { return !cache_.empty(); }

    // g of state `code`, computed from scratch (or read from the cache).
    StatVector stats(std::uint64_t code) const;

    // theta^T g(x) for every state.
    std::vector<double> log_weights(std::span<const double> theta) const;
    double log_partition(std::span<const double> theta) const;
    std::vector<double> probabilities(std::span<const double> theta) const;
    StatVector expectations(std::span<const double> theta) const;
    // sum_x pi(x) (target - g(x)), accurate near the hull boundary.
    StatVector gradient(std::span<const double> theta, std::span<const double> target) const;
    // Row-major L x L covariance of g under pi(theta).
    std::vector<double> covariance(std::span<const double> theta) const;
    // The same matrix accumulated about `center` instead of the mean.
    std::vector<double> covariance_about(std::span<const double> theta, std::span<const double> center) const;
    double log_likelihood(std::span<const double> theta, std::span<const double> target) const;

    // Visits blocks of consecutive states: fn(first_code, count, rows) with
    // rows row-major count x L. Blocks are handled in parallel.
    template <typename Fn>
    void for_each_block(Fn&& fn) const;

    std::uint64_t block_count() const noexcept { return (n_states_ + kBlock - 1) / kBlock; }
    static constexpr std::uint64_t kBlock = 1U << 12;

private:
    void fill_block(std::uint64_t first, std::uint64_t count, std::vector<double>& out) const;
    std::span<const double> block_rows(std::uint64_t b, std::vector<double>& scratch) const;

    const Model* model_;
    std::size_t n_sites_;
    std::uint64_t n_states_;
    std::size_t n_stats_;
    std::vector<double> cache_;
};

double log_partition(const Model& model, std::span<const double> theta);
double log_likelihood(const Model& model, std::span<const double> theta, const BinaryState& x_obs);
double log_likelihood(const Model& model, std::span<const double> theta, std::span<const double> g_bar);
StatVector exact_expectations(const Model& model, std::span<const double> theta);

struct MleOptions {
    double tolerance = 1e-8;        // max-norm moment residual
    std::size_t max_iterations = 100000;
    double theta_guard = 50.0;      // |theta_i| beyond this => no MLE
    std::vector<double> start;      // empty => zeros
    // Accept a point matching the moments to `tolerance` even when theta is
    // still running toward a boundary target; it then approximates the
    // likelihood supremum and MleResult::boundary is set.
    bool allow_boundary = false;
};

struct MleResult {
    ParamVector theta;
    double residual = 0.0;  // ||g_bar - E_theta g||_inf
    double log_likelihood = 0.0;
    std::size_t iterations = 0;
    bool boundary = false;  // see MleOptions::allow_boundary
};

// Concave maximization of theta^T g_bar - log Z(theta) by damped Newton
// steps with step halving until the log-likelihood does not decrease.
// Throws NonexistenceError when theta runs past the guard or never settles
// (target on the boundary of the achievable statistics).
MleResult exact_mle(const EnumerationTable& table, std::span<const double> g_bar, const MleOptions& options = {});
ParamVector exact_mle(const Model& model, std::span<const double> g_bar);

// iid draws from pi(theta) by inverting the cumulative distribution.
std::vector<BinaryState> exact_sample(RngStream& rng, const Model& model, std::span<const double> theta,
                                      std::size_t count);

// Single-site uniform-flip MH kernel materialized over all states, with
// acceptance probabilities taken from the sampler.
struct FlipKernel {
    std::size_t n_sites = 0;
    std::uint64_t n_states = 0;
    std::vector<double> move;  // n_states x n_sites: P(x -> flip(x, i))
    std::vector<double> stay;  // P(x -> x), rejected moves included

    double prob(std::uint64_t from, std::size_t site) const { return move[from * n_sites + site]; }
};

FlipKernel build_flip_kernel(const Model& model, std::span<const double> theta);

// ||pi P - pi||_inf.
double stationarity_residual(const Model& model, std::span<const double> theta);
// max over pairs of |pi(x) P(x->x') - pi(x') P(x'->x)|.
double detailed_balance_residual(const Model& model, std::span<const double> theta);
// || sum_x pi(x) dg(x, theta) ||_inf with dg(x) = sum_x' P(x->x') [g(x') - g(x)].
double expected_change_residual(const Model& model, std::span<const double> theta);

// Expected one-step statistic change dg(x, theta) at a single state.
StatVector expected_step_change(const Model& model, std::span<const double> theta, const BinaryState& x);

}  // namespace eestim

#include "eestim/parallel.hpp"

namespace eestim {

template <typename Fn>
void EnumerationTable::for_each_block(Fn&& fn) const {
    parallel_for(static_cast<std::size_t>(block_count()), [&](std::size_t b) {
        std::vector<double> scratch;
        const std::uint64_t first = b * kBlock;
        const std::uint64_t count = std::min<std::uint64_t>(kBlock, n_states_ - first);
        fn(first, count, block_rows(b, scratch));
    });
}

}  // namespace eestim
