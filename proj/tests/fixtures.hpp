#pragma once

#include <vector>

#include "detroll/rater_matrix.hpp"
#include "detroll/rng.hpp"

namespace detroll::fixtures {

constexpr Label L0 = Label::safe;
constexpr Label L1 = Label::unsafe;

// Essays 1-5 x Graders 1-3, ten observed cells.
inline std::vector<Cell> table1_cells() {
    return {{0, 0, L1}, {0, 2, L0}, {1, 1, L1}, {1, 2, L0}, {2, 0, L0},
            {2, 1, L0}, {3, 0, L0}, {3, 2, L1}, {4, 1, L0}, {4, 2, L1}};
}

inline InterRaterMatrix table1() { return InterRaterMatrix::build(5, 3, table1_cells()); }

// Every row gets at least one cell; each other cell observed with p_observe.
inline InterRaterMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t users,
                                      double p_observe = 0.6) {
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t forced = static_cast<std::size_t>(rng.below(users));
        for (std::size_t u = 0; u < users; ++u) {
            if (u == forced || rng.bernoulli(p_observe))
                cells.push_back(Cell{i, u, rng.bernoulli(0.5) ? L1 : L0});
        }
    }
    return InterRaterMatrix::build(rows, users, cells, EmptyRows::allow);
}

}  // namespace detroll::fixtures
