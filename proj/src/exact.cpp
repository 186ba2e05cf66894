#include "eestim/exact.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eestim/error.hpp"
#include "eestim/sampler.hpp"

namespace eestim {
namespace {

constexpr std::uint64_t kCacheEntries = 1ULL << 25;

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowsMap = Eigen::Map<const RowMajor>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

void check_size(const Model& model, std::size_t cap) {
    if (model.num_sites() > cap) {
        throw SizeError(std::string(model.name()) + " has " + std::to_string(model.num_sites()) +
                        " variables; enumeration is capped at " + std::to_string(cap));
    }
}

void check_theta(const EnumerationTable& table, std::span<const double> theta) {
    if (theta.size() != table.num_stats()) throw InvalidInput("theta length differs from the statistic count");
}

double max_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

EnumerationTable::EnumerationTable(const Model& model)
    : model_(&model),
      n_sites_(model.num_sites()),
      n_states_(0),
      n_stats_(model.num_stats()) {
    check_size(model, kMaxEnumerationSites);
    n_states_ = 1ULL << n_sites_;
    if (n_states_ * n_stats_ <= kCacheEntries) {
        cache_.resize(n_states_ * n_stats_);
        parallel_for(static_cast<std::size_t>(block_count()), [&](std::size_t b) {
            std::vector<double> rows;
            const std::uint64_t first = b * kBlock;
            const std::uint64_t count = std::min<std::uint64_t>(kBlock, n_states_ - first);
            fill_block(first, count, rows);
            std::copy(rows.begin(), rows.end(), cache_.begin() + static_cast<std::ptrdiff_t>(first * n_stats_));
        });
    }
}

void EnumerationTable::fill_block(std::uint64_t first, std::uint64_t count, std::vector<double>& out) const {
    out.assign(count * n_stats_, 0.0);
    for (std::uint64_t k = 0; k < count; ++k) {
        const BinaryState x = model_->state_from_code(first + k);
        model_->compute_stats(x, std::span<double>(out.data() + k * n_stats_, n_stats_));
    }
}

std::span<const double> EnumerationTable::block_rows(std::uint64_t b, std::vector<double>& scratch) const {
    const std::uint64_t first = b * kBlock;
    const std::uint64_t count = std::min<std::uint64_t>(kBlock, n_states_ - first);
    if (cached()) return {cache_.data() + first * n_stats_, count * n_stats_};
    fill_block(first, count, scratch);
    return scratch;
}

StatVector EnumerationTable::stats(std::uint64_t code) const {
    if (code >= n_states_) throw InvalidInput("state code out of range");
    if (cached()) {
        const double* row = cache_.data() + code * n_stats_;
        return StatVector(row, row + n_stats_);
    }
    StatVector g(n_stats_, 0.0);
    model_->compute_stats(model_->state_from_code(code), g);
    return g;
}

std::vector<double> EnumerationTable::log_weights(std::span<const double> theta) const {
    check_theta(*this, theta);
    std::vector<double> w(n_states_);
    const ConstVecMap th(theta.data(), static_cast<Eigen::Index>(theta.size()));
    for_each_block([&](std::uint64_t first, std::uint64_t count, std::span<const double> rows) {
        const ConstRowsMap G(rows.data(), static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n_stats_));
        Eigen::Map<Eigen::VectorXd>(w.data() + first, static_cast<Eigen::Index>(count)) = G * th;
    });
    return w;
}

double EnumerationTable::log_partition(std::span<const double> theta) const {
    const auto w = log_weights(theta);
    const double mx = *std::max_element(w.begin(), w.end());
    double s = 0.0;
    for (double v : w) s += std::exp(v - mx);
    return mx + std::log(s);
}

std::vector<double> EnumerationTable::probabilities(std::span<const double> theta) const {
    auto w = log_weights(theta);
    const double mx = *std::max_element(w.begin(), w.end());
    double s = 0.0;
    for (double v : w) s += std::exp(v - mx);
    const double log_z = mx + std::log(s);
    for (auto& v : w) v = std::exp(v - log_z);
    return w;
}

StatVector EnumerationTable::gradient(std::span<const double> theta, std::span<const double> target) const {
    if (target.size() != n_stats_) throw InvalidInput("target length differs from the statistic count");
    const auto p = probabilities(theta);
    std::vector<Eigen::VectorXd> partial(static_cast<std::size_t>(block_count()));
    const ConstVecMap tgt(target.data(), static_cast<Eigen::Index>(n_stats_));
    for_each_block([&](std::uint64_t first, std::uint64_t count, std::span<const double> rows) {
        const ConstRowsMap G(rows.data(), static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n_stats_));
        const ConstVecMap pb(p.data() + first, static_cast<Eigen::Index>(count));
        // sum_x p_x (target - g_x), row by row so matched rows contribute exactly 0
        const Eigen::MatrixXd gap = (-G).rowwise() + tgt.transpose();
        partial[first / kBlock] = gap.transpose() * pb;
    });
    Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_stats_));
    for (const auto& v : partial) total += v;
    return StatVector(total.data(), total.data() + total.size());
}

StatVector EnumerationTable::expectations(std::span<const double> theta) const {
    const auto p = probabilities(theta);
    std::vector<Eigen::VectorXd> partial(static_cast<std::size_t>(block_count()));
    for_each_block([&](std::uint64_t first, std::uint64_t count, std::span<const double> rows) {
        const ConstRowsMap G(rows.data(), static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n_stats_));
        const ConstVecMap pb(p.data() + first, static_cast<Eigen::Index>(count));
        partial[first / kBlock] = G.transpose() * pb;
    });
    Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_stats_));
    for (const auto& v : partial) total += v;
    return StatVector(total.data(), total.data() + total.size());
}

std::vector<double> EnumerationTable::covariance(std::span<const double> theta) const {
    return covariance_about(theta, expectations(theta));
}

std::vector<double> EnumerationTable::covariance_about(std::span<const double> theta,
                                                       std::span<const double> center) const {
    if (center.size() != n_stats_) throw InvalidInput("center length differs from the statistic count");
    const auto p = probabilities(theta);
    const ConstVecMap c0(center.data(), static_cast<Eigen::Index>(n_stats_));
    const auto L = static_cast<Eigen::Index>(n_stats_);
    std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(block_count()));
    std::vector<Eigen::VectorXd> partial_mean(static_cast<std::size_t>(block_count()));
    for_each_block([&](std::uint64_t first, std::uint64_t count, std::span<const double> rows) {
        const ConstRowsMap G(rows.data(), static_cast<Eigen::Index>(count), L);
        const ConstVecMap pb(p.data() + first, static_cast<Eigen::Index>(count));
        Eigen::MatrixXd centered = G.rowwise() - c0.transpose();
        partial_mean[first / kBlock] = centered.transpose() * pb;
        centered.array().colwise() *= pb.array().sqrt();
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(L, L);
        c.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
        partial[first / kBlock] = c.selfadjointView<Eigen::Lower>();
    });
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(L, L);
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(L);
    for (std::size_t b = 0; b < partial.size(); ++b) {
        total += partial[b];
        shift += partial_mean[b];
    }
    // E[(g-c)(g-c)^T] - (E g - c)(E g - c)^T
    total -= shift * shift.transpose();
    std::vector<double> out(static_cast<std::size_t>(L * L));
    Eigen::Map<RowMajor>(out.data(), L, L) = total;
    return out;
}

double EnumerationTable::log_likelihood(std::span<const double> theta, std::span<const double> target) const {
    if (target.size() != n_stats_) throw InvalidInput("target length differs from the statistic count");
    return dot(theta, target) - log_partition(theta);
}

double log_partition(const Model& model, std::span<const double> theta) {
    return EnumerationTable(model).log_partition(theta);
}

double log_likelihood(const Model& model, std::span<const double> theta, const BinaryState& x_obs) {
    const StatVector g = suff_stats(model, x_obs);
    return EnumerationTable(model).log_likelihood(theta, g);
}

double log_likelihood(const Model& model, std::span<const double> theta, std::span<const double> g_bar) {
    return EnumerationTable(model).log_likelihood(theta, g_bar);
}

StatVector exact_expectations(const Model& model, std::span<const double> theta) {
    return EnumerationTable(model).expectations(theta);
}

MleResult exact_mle(const EnumerationTable& table, std::span<const double> g_bar, const MleOptions& options) {
    const std::size_t L = table.num_stats();
    if (g_bar.size() != L) throw InvalidInput("target length differs from the statistic count");
    for (double v : g_bar) {
        if (!std::isfinite(v)) throw InvalidInput("target has a non-finite entry");
    }
    MleResult result;
    result.theta = options.start.empty() ? ParamVector(L, 0.0) : options.start;
    if (result.theta.size() != L) throw InvalidInput("start length differs from the statistic count");

    const auto Li = static_cast<Eigen::Index>(L);
    double ll = table.log_likelihood(result.theta, g_bar);
    bool converged = false;
    std::size_t settled = 0;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        result.iterations = it + 1;
        const StatVector grad = table.gradient(result.theta, g_bar);
        result.residual = max_norm(grad);
        // Centred on the target: states matching it contribute exactly zero,
        // which keeps the Hessian accurate when theta heads for a boundary.
        const auto cov = table.covariance_about(result.theta, g_bar);

        Eigen::Map<const RowMajor> C(cov.data(), Li, Li);
        const ConstVecMap gv(grad.data(), Li);
        Eigen::VectorXd step;
        const double ridge = 1e-14 * std::max(1.0, C.diagonal().maxCoeff());
        Eigen::LDLT<Eigen::MatrixXd> ldlt(C + ridge * Eigen::MatrixXd::Identity(Li, Li));
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            step = ldlt.solve(gv);
            if (!step.allFinite() || step.dot(gv) <= 0.0) step = gv;
        } else {
            step = gv;
        }
        // An interior optimum has a vanishing Newton step; toward a boundary
        // target the step stays O(1) while the residual decays.
        if (result.residual < options.tolerance) {
            if (step.cwiseAbs().maxCoeff() < 1e-6 * (1.0 + max_norm(result.theta))) {
                converged = true;
                break;
            }
            if (options.allow_boundary) {
                result.boundary = true;
                converged = true;
                break;
            }
            // Newton converges quadratically once the residual is this small;
            // a step that stays O(1) means theta is running off to infinity.
            if (++settled > 200) {
                throw NonexistenceError("exact MLE keeps moving with a vanishing moment residual: target statistics "
                                        "lie on the boundary of the achievable set");
            }
        } else {
            settled = 0;
        }

        double scale = 1.0;
        bool moved = false;
        ParamVector trial(L);
        for (int halving = 0; halving < 60; ++halving, scale *= 0.5) {
            for (std::size_t i = 0; i < L; ++i) trial[i] = result.theta[i] + scale * step[static_cast<Eigen::Index>(i)];
            const double trial_ll = table.log_likelihood(trial, g_bar);
            if (std::isfinite(trial_ll) && trial_ll >= ll - 1e-13 * std::max(1.0, std::abs(ll))) {
                result.theta = trial;
                ll = trial_ll;
                moved = true;
                break;
            }
        }
        if (max_norm(result.theta) > options.theta_guard) {
            throw NonexistenceError("exact MLE diverged (|theta| > " + std::to_string(options.theta_guard) +
                                    "): target statistics lie on the boundary of the achievable set");
        }
        if (!moved) {
            if (result.residual < options.tolerance) {
                converged = true;
                break;
            }
            throw NonexistenceError("exact MLE ascent stalled with moment residual " +
                                    std::to_string(result.residual));
        }
    }
    result.residual = max_norm(table.gradient(result.theta, g_bar));
    result.log_likelihood = ll;
    if (!converged || !(result.residual < options.tolerance)) {
        throw NonexistenceError("exact MLE did not converge (moment residual " + std::to_string(result.residual) +
                                " after " + std::to_string(result.iterations) + " iterations)");
    }
    return result;
}

ParamVector exact_mle(const Model& model, std::span<const double> g_bar) {
    return exact_mle(EnumerationTable(model), g_bar).theta;
}

std::vector<BinaryState> exact_sample(RngStream& rng, const Model& model, std::span<const double> theta,
                                      std::size_t count) {
    check_size(model, kMaxEnumerationSites);
    std::vector<BinaryState> out;
    if (count == 0) return out;
    const EnumerationTable table(model);
    const auto p = table.probabilities(theta);
    std::vector<double> cdf(p.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) cdf[k] = (acc += p[k]);
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        const double u = rng.uniform() * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) --it;
        out.push_back(model.state_from_code(static_cast<std::uint64_t>(it - cdf.begin())));
    }
    return out;
}

FlipKernel build_flip_kernel(const Model& model, std::span<const double> theta) {
    check_size(model, kMaxKernelSites);
    FlipKernel k;
    k.n_sites = model.num_sites();
    k.n_states = 1ULL << k.n_sites;
    k.move.assign(k.n_states * k.n_sites, 0.0);
    k.stay.assign(k.n_states, 1.0);
    const double q = 1.0 / static_cast<double>(k.n_sites);
    for (std::uint64_t code = 0; code < k.n_states; ++code) {
        const BinaryState x = model.state_from_code(code);
        for (std::size_t i = 0; i < k.n_sites; ++i) {
            const double p = q * acceptance_prob(model, theta, x, Proposal{i, q, q});
            k.move[code * k.n_sites + i] = p;
            k.stay[code] -= p;
        }
    }
    return k;
}

double stationarity_residual(const Model& model, std::span<const double> theta) {
    const FlipKernel k = build_flip_kernel(model, theta);
    const auto pi = EnumerationTable(model).probabilities(theta);
    double worst = 0.0;
    for (std::uint64_t y = 0; y < k.n_states; ++y) {
        double inflow = pi[y] * k.stay[y];
        for (std::size_t i = 0; i < k.n_sites; ++i) {
            const std::uint64_t x = y ^ (1ULL << i);
            inflow += pi[x] * k.prob(x, i);
        }
        worst = std::max(worst, std::abs(inflow - pi[y]));
    }
    return worst;
}

double detailed_balance_residual(const Model& model, std::span<const double> theta) {
    const FlipKernel k = build_flip_kernel(model, theta);
    const auto pi = EnumerationTable(model).probabilities(theta);
    double worst = 0.0;
    for (std::uint64_t x = 0; x < k.n_states; ++x) {
        for (std::size_t i = 0; i < k.n_sites; ++i) {
            const std::uint64_t y = x ^ (1ULL << i);
            worst = std::max(worst, std::abs(pi[x] * k.prob(x, i) - pi[y] * k.prob(y, i)));
        }
    }
    return worst;
}

double expected_change_residual(const Model& model, std::span<const double> theta) {
    const FlipKernel k = build_flip_kernel(model, theta);
    const EnumerationTable table(model);
    const auto pi = table.probabilities(theta);
    const std::size_t L = model.num_stats();
    StatVector total(L, 0.0);
    for (std::uint64_t x = 0; x < k.n_states; ++x) {
        const StatVector gx = table.stats(x);
        StatVector dg(L, 0.0);
        for (std::size_t i = 0; i < k.n_sites; ++i) {
            const StatVector gy = table.stats(x ^ (1ULL << i));
            for (std::size_t j = 0; j < L; ++j) dg[j] += k.prob(x, i) * (gy[j] - gx[j]);
        }
        for (std::size_t j = 0; j < L; ++j) total[j] += pi[x] * dg[j];
    }
    return max_norm(total);
}

StatVector expected_step_change(const Model& model, std::span<const double> theta, const BinaryState& x) {
    model.check_state(x);
    const std::size_t n = x.size();
    const double q = 1.0 / static_cast<double>(n);
    StatVector dg(model.num_stats(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Proposal p{i, q, q};
        const double alpha = acceptance_prob(model, theta, x, p);
        const StatVector delta = change_stats(model, x, p);
        for (std::size_t j = 0; j < dg.size(); ++j) dg[j] += q * alpha * delta[j];
    }
    return dg;
}

}  // namespace eestim
