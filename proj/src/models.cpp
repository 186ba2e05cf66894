#include "eestim/models.hpp"

#include <cmath>
#include <string>

#include "eestim/error.hpp"

namespace eestim {
namespace {

Adjacency build_adjacency(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                          const std::vector<double>* weights) {
    Adjacency adj;
    adj.offsets.assign(n + 1, 0);
    for (const auto& [i, j] : edges) {
        ++adj.offsets[i + 1];
        ++adj.offsets[j + 1];
    }
    for (std::size_t i = 0; i < n; ++i) adj.offsets[i + 1] += adj.offsets[i];
    adj.targets.resize(adj.offsets[n]);
    adj.weights.resize(adj.offsets[n]);
    std::vector<std::size_t> fill(adj.offsets.begin(), adj.offsets.end() - 1);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [i, j] = edges[e];
        const double w = weights ? (*weights)[e] : 1.0;
        adj.targets[fill[i]] = j;
        adj.weights[fill[i]++] = w;
        adj.targets[fill[j]] = i;
        adj.weights[fill[j]++] = w;
    }
    return adj;
}

std::vector<std::pair<std::size_t, std::size_t>> grid_edges(std::size_t rows, std::size_t cols, bool periodic) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            if (c + 1 < cols) {
                edges.emplace_back(i, i + 1);
            } else if (periodic && cols > 2) {
                edges.emplace_back(r * cols, i);
            }
            if (r + 1 < rows) {
                edges.emplace_back(i, i + cols);
            } else if (periodic && rows > 2) {
                edges.emplace_back(c, i);
            }
        }
    }
    return edges;
}

}  // namespace

// --- Ising2D --------------------------------------------------------------

Ising2D::Ising2D(std::size_t rows, std::size_t cols, bool include_field, bool periodic)
    : Model(Encoding::Spin, Layout::grid(rows, cols),
            include_field ? std::vector<std::string>{"bonds", "field"} : std::vector<std::string>{"bonds"}),
      include_field_(include_field),
      periodic_(periodic) {
    if (rows == 0 || cols == 0) throw InvalidInput("ising2d needs rows, cols >= 1");
    bonds_ = grid_edges(rows, cols, periodic);
    adj_ = build_adjacency(rows * cols, bonds_, nullptr);
}

void Ising2D::compute_stats(const BinaryState& x, std::span<double> out) const {
    double bonds = 0.0;
    for (const auto& [i, j] : bonds_) bonds -= x[i] * x[j];
    out[0] = bonds;
    if (include_field_) {
        double field = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) field -= x[i];
        out[1] = field;
    }
}

void Ising2D::compute_changes(const BinaryState& x, std::size_t site, ChangeList& out) const {
    out.clear();
    int local = 0;
    for (std::size_t k = adj_.offsets[site]; k < adj_.offsets[site + 1]; ++k) local += x[adj_.targets[k]];
    const int s = x[site];
    out.push_back({0, 2.0 * s * local});
    if (include_field_) out.push_back({1, 2.0 * s});
}

// --- Ising1DPeriodic --------------------------------------------------------

namespace {
std::vector<std::string> bond_names(std::size_t n) {
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t b = 0; b < n; ++b) names.push_back("bond_" + std::to_string(b) + "_" + std::to_string((b + 1) % n));
    return names;
}
}  // namespace

Ising1DPeriodic::Ising1DPeriodic(std::size_t n)
    : Model(Encoding::Spin, Layout::chain(n), bond_names(n)) {
    if (n < 3) throw InvalidInput("periodic 1d ising needs N >= 3");
}

void Ising1DPeriodic::compute_stats(const BinaryState& x, std::span<double> out) const {
    const std::size_t n = x.size();
    for (std::size_t b = 0; b < n; ++b) out[b] = -static_cast<double>(x[b] * x[(b + 1) % n]);
}

void Ising1DPeriodic::compute_changes(const BinaryState& x, std::size_t site, ChangeList& out) const {
    const std::size_t n = x.size();
    const std::size_t next = (site + 1) % n;
    const std::size_t prev = (site + n - 1) % n;
    out.clear();
    out.push_back({static_cast<std::uint32_t>(site), 2.0 * x[site] * x[next]});
    out.push_back({static_cast<std::uint32_t>(prev), 2.0 * x[site] * x[prev]});
}

// --- Vbm ------------------------------------------------------------------

namespace {
std::vector<std::string> pair_names(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) names.push_back("pair_" + std::to_string(i) + "_" + std::to_string(j));
    return names;
}
}  // namespace

Vbm::Vbm(std::size_t n) : Model(Encoding::Spin, Layout::chain(n), pair_names(n)), n_(n) {
    if (n < 2) throw InvalidInput("vbm needs N >= 2");
    index_.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto idx = static_cast<std::uint32_t>(pairs_.size());
            index_[i * n + j] = idx;
            index_[j * n + i] = idx;
            pairs_.emplace_back(i, j);
        }
    }
}

std::size_t Vbm::pair_index(std::size_t i, std::size_t j) const {
    if (i == j || i >= n_ || j >= n_) throw InvalidInput("vbm pair index out of range");
    return index_[i * n_ + j];
}

void Vbm::compute_stats(const BinaryState& x, std::span<double> out) const {
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
        const auto [i, j] = pairs_[p];
        out[p] = -static_cast<double>(x[i] * x[j]);
    }
}

void Vbm::compute_changes(const BinaryState& x, std::size_t site, ChangeList& out) const {
    out.clear();
    const int s2 = 2 * x[site];
    const std::uint32_t* row = &index_[site * n_];
    for (std::size_t j = 0; j < n_; ++j) {
        if (j == site) continue;
        out.push_back({row[j], static_cast<double>(s2 * x[j])});
    }
}

// --- Crf ------------------------------------------------------------------

CrfFeatures CrfFeatures::from_image(std::span<const double> y, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0 || y.size() != rows * cols) {
        throw InvalidInput("crf image has " + std::to_string(y.size()) + " pixels, expected " +
                           std::to_string(rows) + "x" + std::to_string(cols));
    }
    CrfFeatures f;
    f.rows = rows;
    f.cols = cols;
    f.y.assign(y.begin(), y.end());
    for (double v : f.y) {
        if (!std::isfinite(v)) throw InvalidInput("crf image contains a non-finite value");
    }
    f.edges = grid_edges(rows, cols, false);
    f.edge_weight.reserve(f.edges.size());
    for (const auto& [i, j] : f.edges) f.edge_weight.push_back(std::abs(f.y[i] - f.y[j]));
    return f;
}

Crf::Crf(CrfFeatures features)
    : Model(Encoding::Spin, Layout::grid(features.rows, features.cols), {"h1", "h2", "J1", "J2"}),
      features_(std::move(features)) {
    if (features_.y.size() != features_.rows * features_.cols || features_.edge_weight.size() != features_.edges.size()) {
        throw InvalidInput("crf feature tables do not match image dims");
    }
    adj_ = build_adjacency(features_.y.size(), features_.edges, &features_.edge_weight);
}

void Crf::compute_stats(const BinaryState& x, std::span<double> out) const {
    double h1 = 0.0, h2 = 0.0, j1 = 0.0, j2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        h1 -= x[i];
        h2 -= features_.y[i] * x[i];
    }
    for (std::size_t e = 0; e < features_.edges.size(); ++e) {
        const auto [i, j] = features_.edges[e];
        const double xx = x[i] * x[j];
        j1 -= xx;
        j2 -= features_.edge_weight[e] * xx;
    }
    out[0] = h1;
    out[1] = h2;
    out[2] = j1;
    out[3] = j2;
}

void Crf::compute_changes(const BinaryState& x, std::size_t site, ChangeList& out) const {
    const double s2 = 2.0 * x[site];
    int plain = 0;
    double weighted = 0.0;
    for (std::size_t k = adj_.offsets[site]; k < adj_.offsets[site + 1]; ++k) {
        const int xj = x[adj_.targets[k]];
        plain += xj;
        weighted += adj_.weights[k] * xj;
    }
    out.clear();
    out.push_back({0, s2});
    out.push_back({1, s2 * features_.y[site]});
    out.push_back({2, s2 * plain});
    out.push_back({3, s2 * weighted});
}

// --- MiniErgm -------------------------------------------------------------

MiniErgm::MiniErgm(std::size_t n) : Model(Encoding::Tie, Layout::digraph(n), {"arc", "mutual"}), n_(n) {
    if (n < 2) throw InvalidInput("mini-ergm needs N >= 2");
    reverse_.resize(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) reverse_[tie_index(n, i, j)] = static_cast<std::uint32_t>(tie_index(n, j, i));
}

void MiniErgm::compute_stats(const BinaryState& x, std::span<double> out) const {
    double arcs = 0.0, mutual = 0.0;
    for (std::size_t s = 0; s < x.size(); ++s) {
        arcs += x[s];
        if (s < reverse_[s]) mutual += x[s] * x[reverse_[s]];
    }
    out[0] = arcs;
    out[1] = mutual;
}

void MiniErgm::compute_changes(const BinaryState& x, std::size_t site, ChangeList& out) const {
    const double sign = x[site] == 0 ? 1.0 : -1.0;
    out.clear();
    out.push_back({0, sign});
    out.push_back({1, sign * x[reverse_[site]]});
}

DyadCensus dyad_census(const MiniErgm& model, const BinaryState& x) {
    model.check_state(x);
    DyadCensus census;
    for (std::size_t s = 0; s < x.size(); ++s) {
        const std::size_t r = model.reverse_site(s);
        if (s > r) continue;
        const int ties = x[s] + x[r];
        if (ties == 0) ++census.null;
        else if (ties == 1) ++census.asymmetric;
        else ++census.mutual;
    }
    return census;
}

bool ergm_statistics_interior(const DyadCensus& census) {
    return census.null > 0 && census.asymmetric > 0 && census.mutual > 0;
}

// --- builders -------------------------------------------------------------

std::shared_ptr<const Model> build_ising2d(std::size_t rows, std::size_t cols, bool include_field, bool periodic) {
    return std::make_shared<Ising2D>(rows, cols, include_field, periodic);
}

std::shared_ptr<const Model> build_ising1d_periodic(std::size_t n) { return std::make_shared<Ising1DPeriodic>(n); }

std::shared_ptr<const Model> build_vbm(std::size_t n) { return std::make_shared<Vbm>(n); }

std::shared_ptr<const Model> build_crf(std::span<const double> y, std::size_t rows, std::size_t cols) {
    return std::make_shared<Crf>(CrfFeatures::from_image(y, rows, cols));
}

std::shared_ptr<const Model> build_mini_ergm(std::size_t n) { return std::make_shared<MiniErgm>(n); }

}  // namespace eestim
