#include "eestim/model.hpp"

#include <string>

#include "eestim/error.hpp"

namespace eestim {

void Model::check_state(const BinaryState& x) const {
    if (x.encoding() != encoding_) {
        throw InvalidInput(std::string(name()) + " expects " + std::string(to_string(encoding_)) +
                           " encoding, got " + std::string(to_string(x.encoding())));
    }
    if (!(x.layout() == layout_) || x.size() != num_sites()) {
        throw InvalidInput(std::string(name()) + " expects " + std::to_string(num_sites()) +
                           " sites with matching layout, got " + std::to_string(x.size()));
    }
}

BinaryState Model::state_from_code(std::uint64_t code) const {
    BinaryState x = blank_state();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if ((code >> i) & 1U) x.flip(i);
    }
    return x;
}

StatVector suff_stats(const Model& model, const BinaryState& x) {
    model.check_state(x);
    StatVector g(model.num_stats(), 0.0);
    model.compute_stats(x, g);
    return g;
}

StatVector change_stats(const Model& model, const BinaryState& x, const Proposal& p) {
    model.check_state(x);
    if (p.site >= x.size()) {
        throw InvalidInput("proposal site " + std::to_string(p.site) + " out of range for " +
                           std::to_string(x.size()) + " sites");
    }
    ChangeList delta;
    model.compute_changes(x, p.site, delta);
    StatVector out(model.num_stats(), 0.0);
    for (const auto& d : delta) out[d.index] += d.value;
    return out;
}

}  // namespace eestim
