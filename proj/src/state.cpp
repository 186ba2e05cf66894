#include "eestim/state.hpp"

#include <algorithm>
#include <string>

#include "eestim/error.hpp"

namespace eestim {

std::string_view to_string(Encoding encoding) {
    return encoding == Encoding::Spin ? "spin" : "tie";
}

Layout Layout::grid(std::size_t rows, std::size_t cols) {
    return Layout{LayoutKind::Grid, rows, cols, rows * cols};
}

Layout Layout::chain(std::size_t n) { return Layout{LayoutKind::Chain, 1, n, n}; }

Layout Layout::digraph(std::size_t n) { return Layout{LayoutKind::Digraph, 0, 0, n}; }

std::size_t Layout::num_sites() const {
    switch (kind) {
        case LayoutKind::Grid: return rows * cols;
        case LayoutKind::Chain: return nodes;
        case LayoutKind::Digraph: return nodes < 2 ? 0 : nodes * (nodes - 1);
    }
    return 0;
}

bool BinaryState::legal(Encoding encoding, int value) noexcept {
    return encoding == Encoding::Spin ? (value == 1 || value == -1) : (value == 0 || value == 1);
}

BinaryState::BinaryState(Encoding encoding, Layout layout)
    : encoding_(encoding),
      layout_(layout),
      values_(layout.num_sites(), encoding == Encoding::Spin ? std::int8_t{-1} : std::int8_t{0}) {}

BinaryState::BinaryState(Encoding encoding, Layout layout, std::vector<std::int8_t> values)
    : encoding_(encoding), layout_(layout), values_(std::move(values)) {
    if (values_.size() != layout_.num_sites()) {
        throw InvalidInput("state has " + std::to_string(values_.size()) + " entries, layout expects " +
                           std::to_string(layout_.num_sites()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!legal(encoding_, values_[i])) {
            throw InvalidInput("illegal " + std::string(to_string(encoding_)) + " value " +
                               std::to_string(values_[i]) + " at site " + std::to_string(i));
        }
    }
}

void BinaryState::set(std::size_t site, std::int8_t value) {
    if (site >= values_.size()) throw InvalidInput("site " + std::to_string(site) + " out of range");
    if (!legal(encoding_, value)) throw InvalidInput("illegal value " + std::to_string(value));
    values_[site] = value;
}

void BinaryState::fill(std::int8_t value) {
    if (!legal(encoding_, value)) throw InvalidInput("illegal value " + std::to_string(value));
    std::fill(values_.begin(), values_.end(), value);
}

BinaryState apply_proposal(BinaryState x, const Proposal& p) {
    if (p.site >= x.size()) {
        throw InvalidInput("proposal site " + std::to_string(p.site) + " out of range for state of size " +
                           std::to_string(x.size()));
    }
    x.flip(p.site);
    return x;
}

}  // namespace eestim
