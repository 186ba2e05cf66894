#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eestim/state.hpp"

namespace eestim {

// An exponential-family model pi(x | theta) = exp(theta^T g(x)) / Z(theta)
// over binary states of a fixed layout.
//
// Statistics are defined as exactly the quantity multiplying theta in the
// exponent, so theta^T (g(x') - g(x)) is the log Metropolis ratio. Every
// model supplies change statistics for single-site toggles in time
// proportional to the site's neighbourhood; full recomputation exists for
// construction and testing.
class Model {
public:
    virtual ~Model() = default;

    virtual std::string_view name() const = 0;

    std::size_t num_stats() const noexcept { return stat_names_.size(); }
    const std::vector<std::string>& stat_names() const noexcept { return stat_names_; }
    Encoding encoding() const noexcept { return encoding_; }
    const Layout& layout() const noexcept { return layout_; }
    std::size_t num_sites() const noexcept { return layout_.num_sites(); }

    // g(x) into `out` (size num_stats()). No validation.
    virtual void compute_stats(const BinaryState& x, std::span<double> out) const = 0;

    // Sparse g(flip(x, site)) - g(x). Clears `out` first. No validation.
    virtual void compute_changes(const BinaryState& x, std::size_t site, ChangeList& out) const = 0;

    // Throws InvalidInput unless x has this model's encoding and layout.
    void check_state(const BinaryState& x) const;

    // State whose site i takes the "high" value (+1 / 1) iff bit i of `code`
    // is set. Used by enumeration.
    BinaryState state_from_code(std::uint64_t code) const;
    BinaryState blank_state() const { return BinaryState(encoding_, layout_); }

protected:
    Model(Encoding encoding, Layout layout, std::vector<std::string> stat_names)
        : encoding_(encoding), layout_(layout), stat_names_(std::move(stat_names)) {}

private:
    Encoding encoding_;
    Layout layout_;
    std::vector<std::string> stat_names_;
};

// g(x) computed from scratch.
StatVector suff_stats(const Model& model, const BinaryState& x);

// g(flip(x, p.site)) - g(x), dense, via the model's incremental path.
StatVector change_stats(const Model& model, const BinaryState& x, const Proposal& p);

// theta^T delta over a sparse change.
inline double dot(std::span<const double> theta, const ChangeList& delta) noexcept {
    double s = 0.0;
    for (const auto& d : delta) s += theta[d.index] * d.value;
    return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace eestim
