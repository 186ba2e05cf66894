#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "eestim/model.hpp"

namespace eestim {

// Undirected neighbour table in compressed-row form.
struct Adjacency {
    std::vector<std::size_t> offsets;  // size n + 1
    std::vector<std::size_t> targets;
    std::vector<double> weights;  // parallel to targets; 1 when unweighted

    std::size_t degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
};

// Square-lattice Ising model on a rows x cols grid with statistics
//   g1 = -sum_<ij> s_i s_j   (each nearest-neighbour bond once)
//   g2 = -sum_i s_i           (only when include_field)
class Ising2D final : public Model {
public:
    Ising2D(std::size_t rows, std::size_t cols, bool include_field, bool periodic = false);

    std::string_view name() const override { return "ising2d"; }
    void compute_stats(const BinaryState& x, std::span<double> out) const override;
    void compute_changes(const BinaryState& x, std::size_t site, ChangeList& out) const override;

    bool include_field() const noexcept { return include_field_; }
    bool periodic() const noexcept { return periodic_; }
    std::size_t num_bonds() const noexcept { return bonds_.size(); }

private:
    bool include_field_;
    bool periodic_;
    std::vector<std::pair<std::size_t, std::size_t>> bonds_;
    Adjacency adj_;
};

// Periodic chain of N spins with one parameter per bond:
//   g_b = -x_b x_{(b+1) mod N},  b = 0..N-1.
class Ising1DPeriodic final : public Model {
public:
    explicit Ising1DPeriodic(std::size_t n);

    std::string_view name() const override { return "ising1d"; }
    void compute_stats(const BinaryState& x, std::span<double> out) const override;
    void compute_changes(const BinaryState& x, std::size_t site, ChangeList& out) const override;
};

// Fully visible Boltzmann machine over N spins, symmetric couplings with
// zero diagonal: one statistic g_ij = -x_i x_j per pair i < j. Flat index is
// row-major over i < j: (0,1), (0,2), ..., (0,N-1), (1,2), ...
class Vbm final : public Model {
public:
    explicit Vbm(std::size_t n);

    std::string_view name() const override { return "vbm"; }
    void compute_stats(const BinaryState& x, std::span<double> out) const override;
    void compute_changes(const BinaryState& x, std::size_t site, ChangeList& out) const override;

    std::size_t pair_index(std::size_t i, std::size_t j) const;
    std::pair<std::size_t, std::size_t> pair_of(std::size_t index) const { return pairs_[index]; }

private:
    std::size_t n_;
    std::vector<std::uint32_t> index_;  // n x n, symmetric
    std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

// Node and edge features of a noisy observation y: f_j = [1, y_j] and
// f_ij = [1, |y_i - y_j|] on 4-neighbour edges.
struct CrfFeatures {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> y;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // unordered, i < j
    std::vector<double> edge_weight;                         // |y_i - y_j| per edge

    static CrfFeatures from_image(std::span<const double> y, std::size_t rows, std::size_t cols);
};

// Pairwise conditional random field for pixel labels given y, theta =
// [h1, h2, J1, J2]:
//   g_h1 = -sum_j x_j
//   g_h2 = -sum_j y_j x_j
//   g_J1 = -sum_{i~j} x_i x_j
//   g_J2 = -sum_{i~j} |y_i - y_j| x_i x_j
// with each unordered edge counted once.
class Crf final : public Model {
public:
    explicit Crf(CrfFeatures features);

    std::string_view name() const override { return "crf"; }
    void compute_stats(const BinaryState& x, std::span<double> out) const override;
    void compute_changes(const BinaryState& x, std::size_t site, ChangeList& out) const override;

    const CrfFeatures& features() const noexcept { return features_; }

private:
    CrfFeatures features_;
    Adjacency adj_;
};

// Directed graph model over the N(N-1) tie variables with statistics
//   Arc    = sum_{i != j} x_ij
//   Mutual = sum_{i < j} x_ij x_ji
class MiniErgm final : public Model {
public:
    explicit MiniErgm(std::size_t n);

    std::string_view name() const override { return "ergm"; }
    void compute_stats(const BinaryState& x, std::span<double> out) const override;
    void compute_changes(const BinaryState& x, std::size_t site, ChangeList& out) const override;

    std::size_t nodes() const noexcept { return n_; }
    std::size_t reverse_site(std::size_t site) const noexcept { return reverse_[site]; }

private:
    std::size_t n_;
    std::vector<std::uint32_t> reverse_;
};

std::shared_ptr<const Model> build_ising2d(std::size_t rows, std::size_t cols, bool include_field,
                                           bool periodic = false);
std::shared_ptr<const Model> build_ising1d_periodic(std::size_t n);
std::shared_ptr<const Model> build_vbm(std::size_t n);
std::shared_ptr<const Model> build_crf(std::span<const double> y, std::size_t rows, std::size_t cols);
std::shared_ptr<const Model> build_mini_ergm(std::size_t n);

// Dyad census of a tie state: null, asymmetric, mutual dyad counts.
struct DyadCensus {
    std::size_t null = 0;
    std::size_t asymmetric = 0;
    std::size_t mutual = 0;
};
DyadCensus dyad_census(const MiniErgm& model, const BinaryState& x);

// Arc + Mutual observed statistics have an MLE iff all three dyad types occur.
bool ergm_statistics_interior(const DyadCensus& census);

}  // namespace eestim
