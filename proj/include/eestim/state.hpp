#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace eestim {

// Canonical parameters, one per sufficient statistic.
using ParamVector = std::vector<double>;
// Sufficient statistics g(x), or differences of them.
using StatVector = std::vector<double>;

enum class Encoding : std::uint8_t { Spin, Tie };

std::string_view to_string(Encoding encoding);

enum class LayoutKind : std::uint8_t { Grid, Chain, Digraph };

// Shape metadata for a state vector. Grids are row-major rows x cols, chains
// are a plain list of `nodes` sites, and digraphs hold the N(N-1) ordered
// off-diagonal tie variables of an N-node directed graph.
struct Layout {
    LayoutKind kind = LayoutKind::Chain;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t nodes = 0;

    static Layout grid(std::size_t rows, std::size_t cols);
    static Layout chain(std::size_t n);
    static Layout digraph(std::size_t n);

    std::size_t num_sites() const;

    friend bool operator==(const Layout&, const Layout&) = default;
};

// Index of ordered tie (i -> j), i != j, inside a digraph state vector.
inline std::size_t tie_index(std::size_t n, std::size_t i, std::size_t j) {
    return i * (n - 1) + (j < i ? j : j - 1);
}

// A configuration of binary site variables: +-1 spins or 0/1 ties.
class BinaryState {
public:
    BinaryState() = default;
    // All sites at the "low" value (-1 spin, 0 tie).
    BinaryState(Encoding encoding, Layout layout);
    BinaryState(Encoding encoding, Layout layout, std::vector<std::int8_t> values);

    Encoding encoding() const noexcept { return encoding_; }
    const Layout& layout() const noexcept { return layout_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    std::int8_t operator[](std::size_t site) const { return values_[site]; }
    std::span<const std::int8_t> values() const noexcept { return values_; }

    void set(std::size_t site, std::int8_t value);
    void fill(std::int8_t value);
    // Toggle a site to the other legal value.
    void flip(std::size_t site) noexcept {
        values_[site] = encoding_ == Encoding::Spin
                            ? static_cast<std::int8_t>(-values_[site])
                            : static_cast<std::int8_t>(1 - values_[site]);
    }

    // Value legal for `encoding`?
    static bool legal(Encoding encoding, int value) noexcept;

    friend bool operator==(const BinaryState&, const BinaryState&) = default;

private:
    Encoding encoding_ = Encoding::Spin;
    Layout layout_{};
    std::vector<std::int8_t> values_;
};

// Single-site toggle proposal with its forward and reverse proposal
// probabilities q(x -> x') and q(x' -> x).
struct Proposal {
    std::size_t site = 0;
    double forward_weight = 1.0;
    double reverse_weight = 1.0;
};

// Returns `x` with the proposal's site toggled.
BinaryState apply_proposal(BinaryState x, const Proposal& p);

// One nonzero entry of a sparse statistic change.
struct StatDelta {
    std::uint32_t index;
    double value;
};

using ChangeList = std::vector<StatDelta>;

}  // namespace eestim
