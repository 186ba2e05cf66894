#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "eestim/model.hpp"
#include "eestim/models.hpp"
#include "eestim/rng.hpp"
#include "eestim/state.hpp"

namespace testing {

using namespace eestim;

struct NamedModel {
    std::string label;
    std::shared_ptr<const Model> model;
};

inline BinaryState random_state(RngStream& rng, const Model& model) {
    BinaryState x = model.blank_state();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (rng.uniform() < 0.5) x.flip(i);
    }
    return x;
}

inline ParamVector random_theta(RngStream& rng, std::size_t L, double scale = 1.0) {
    ParamVector t(L);
    for (auto& v : t) v = scale * rng.normal();
    return t;
}

inline std::vector<double> random_image(RngStream& rng, std::size_t n) {
    std::vector<double> y(n);
    for (auto& v : y) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) + rng.normal();
    return y;
}

// One member of each family with at most 4 variables.
inline std::vector<NamedModel> small_families(std::uint64_t seed = 5) {
    RngStream rng(seed, 0);
    return {
        {"ising2d 2x2 + field", build_ising2d(2, 2, true)},
        {"ising1d N=4", build_ising1d_periodic(4)},
        {"vbm N=4", build_vbm(4)},
        {"crf 2x2", build_crf(random_image(rng, 4), 2, 2)},
        {"ergm N=2", build_mini_ergm(2)},
    };
}

// Larger instances for property sweeps.
inline std::vector<NamedModel> medium_families(std::uint64_t seed = 6) {
    RngStream rng(seed, 0);
    return {
        {"ising2d 5x4", build_ising2d(5, 4, false)},
        {"ising2d 3x3 + field", build_ising2d(3, 3, true)},
        {"ising2d 4x4 periodic", build_ising2d(4, 4, true, true)},
        {"ising1d N=7", build_ising1d_periodic(7)},
        {"vbm N=9", build_vbm(9)},
        {"crf 6x5", build_crf(random_image(rng, 30), 6, 5)},
        {"ergm N=6", build_mini_ergm(6)},
    };
}

inline bool has_real_features(const Model& model) { return model.name() == "crf"; }

}  // namespace testing
