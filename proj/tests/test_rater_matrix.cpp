#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <optional>

#include "detroll/errors.hpp"
#include "detroll/rater_matrix.hpp"
#include "detroll/rng.hpp"
#include "fixtures.hpp"

using namespace detroll;
using fixtures::L0;
using fixtures::L1;

namespace {

// n x 3 matrix, full observation; users 0 and 1 alternate labels, user 2
// gets `user2` everywhere (or alternates when user2_mixed).
InterRaterMatrix three_user(std::size_t rows, bool user2_mixed, Label user2 = L0) {
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < rows; ++i) {
        const Label alt = i % 2 ? L1 : L0;
        cells.push_back({i, 0, alt});
        cells.push_back({i, 1, alt});
        cells.push_back({i, 2, user2_mixed ? alt : user2});
    }
    return InterRaterMatrix::build(rows, 3, cells);
}

}  // namespace

TEST_CASE("build_matrix: Table 1 has 10 observed and 5 missing cells") {
    const auto m = fixtures::table1();
    CHECK(m.n_utterances() == 5);
    CHECK(m.n_users() == 3);
    CHECK(m.n_cells() == 10);
    CHECK(m.n_utterances() * m.n_users() - m.n_cells() == 5);
    REQUIRE(m.row(0).size() == 2);
    CHECK(m.row(0)[0].index == 0);
    CHECK(m.row(0)[0].label == L1);
    CHECK(m.column(2).size() == 4);
}

TEST_CASE("build_matrix: minimal 1x1") {
    const std::vector<Cell> cells{{0, 0, L0}};
    const auto m = build_matrix(1, 1, cells);
    CHECK(m.n_cells() == 1);
    CHECK(m.cells() == cells);
}

TEST_CASE("build_matrix: contract errors") {
    const std::vector<Cell> dup{{0, 0, L1}, {0, 0, L0}};
    CHECK_THROWS_WITH_AS(build_matrix(2, 2, dup), doctest::Contains("duplicate cell (utterance 0, user 0)"),
                         ContractError);
    const std::vector<Cell> oob{{0, 2, L1}};
    CHECK_THROWS_AS(build_matrix(1, 2, oob), ContractError);
    const std::vector<Cell> gap{{0, 0, L1}};
    CHECK_THROWS_WITH_AS(build_matrix(2, 1, gap), doctest::Contains("utterance 1"), ContractError);
    CHECK_THROWS_AS(build_matrix(0, 1, std::vector<Cell>{}), ContractError);
}

TEST_CASE("build_matrix: cells round trip as a set") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = fixtures::random_matrix(rng, 1 + rng.below(20), 1 + rng.below(6));
        auto cells = m.cells();
        std::reverse(cells.begin(), cells.end());
        const auto again = InterRaterMatrix::build(m.n_utterances(), m.n_users(), cells,
                                                   EmptyRows::allow);
        CHECK(again == m);
    }
}

TEST_CASE("validate_for_lca: Table 1 fails the row-count requirement") {
    const auto r = validate_for_lca(fixtures::table1());
    CHECK_FALSE(r.row_count_ok);
    CHECK(r.single_valued_columns.empty());
    CHECK_FALSE(r.fittable);
    CHECK_FALSE(r.fittable_after_pruning);
}

TEST_CASE("validate_for_lca: 6x3 boundary is fittable") {
    const auto r = validate_for_lca(three_user(6, true));
    CHECK(r.row_count_ok);
    CHECK(r.single_valued_columns.empty());
    CHECK(r.fittable);
}

TEST_CASE("validate_for_lca: single-valued column is reported") {
    const auto m = three_user(10, false);
    const auto r = validate_for_lca(m);
    CHECK(r.row_count_ok);
    CHECK(r.single_valued_columns == std::vector<std::size_t>{2});
    CHECK_FALSE(r.fittable);
    CHECK(r.fittable_after_pruning);
    CHECK(validate_for_lca(m).single_valued_columns == r.single_valued_columns);
}

TEST_CASE("validate_for_lca: empty column counts as single-valued") {
    const std::vector<Cell> cells{{0, 0, L0}, {1, 0, L1}};
    const auto m = InterRaterMatrix::build(2, 2, cells);
    CHECK(validate_for_lca(m).single_valued_columns == std::vector<std::size_t>{1});
}

TEST_CASE("prune_invalid_columns: drops the single-valued user") {
    const auto pr = prune_invalid_columns(three_user(10, false));
    CHECK(pr.matrix.n_users() == 2);
    CHECK(pr.matrix.n_utterances() == 10);
    CHECK(pr.removed_users == std::vector<std::size_t>{2});
    CHECK(pr.user_map == std::vector<std::size_t>{0, 1});
    CHECK(pr.dropped_rows.empty());
}

TEST_CASE("prune_invalid_columns: 5x3 with one single-valued user still fits 5 >= 4") {
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < 5; ++i) {
        const Label alt = i % 2 ? L1 : L0;
        cells.push_back({i, 0, alt});
        cells.push_back({i, 1, L1});
        cells.push_back({i, 2, flip(alt)});
    }
    const auto pr = prune_invalid_columns(InterRaterMatrix::build(5, 3, cells));
    CHECK(pr.removed_users == std::vector<std::size_t>{1});
    CHECK(pr.user_map == std::vector<std::size_t>{0, 2});
    CHECK(pr.matrix.n_users() == 2);
}

TEST_CASE("prune_invalid_columns: all columns single-valued is unfittable") {
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t u = 0; u < 3; ++u) cells.push_back({i, u, u == 1 ? L1 : L0});
    CHECK_THROWS_AS(prune_invalid_columns(InterRaterMatrix::build(6, 3, cells)), UnfittableError);
}

TEST_CASE("prune_invalid_columns: Table 1 violates requirement (1)") {
    CHECK_THROWS_WITH_AS(prune_invalid_columns(fixtures::table1()),
                         doctest::Contains("at least twice the columns"), UnfittableError);
}

TEST_CASE("prune_invalid_columns: fittable matrix is unchanged") {
    const auto m = three_user(8, true);
    const auto pr = prune_invalid_columns(m);
    CHECK(pr.matrix == m);
    CHECK(pr.removed_users.empty());
    CHECK(pr.dropped_rows.empty());
}

TEST_CASE("prune_invalid_columns: rows left empty are dropped and reported") {
    // Row 4 is only rated by user 2, whose labels are all 0.
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < 4; ++i) {
        cells.push_back({i, 0, i % 2 ? L1 : L0});
        cells.push_back({i, 2, L0});
    }
    cells.push_back({4, 2, L0});
    const auto pr = prune_invalid_columns(InterRaterMatrix::build(5, 3, cells));
    CHECK(pr.removed_users == std::vector<std::size_t>{1, 2});
    CHECK(pr.dropped_rows == std::vector<std::size_t>{4});
    CHECK(pr.utterance_map == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(pr.matrix.n_utterances() == 4);
}

TEST_CASE("prune_invalid_columns: idempotent and yields fittable matrices") {
    Rng rng(5);
    int pruned_ok = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t users = 1 + rng.below(5);
        const auto m = fixtures::random_matrix(rng, 2 * users + rng.below(10), users, 0.3);
        std::optional<PruneResult> pruned;
        try {
            pruned = prune_invalid_columns(m);
        } catch (const UnfittableError&) {
            CHECK_FALSE(validate_for_lca(m).fittable_after_pruning);
            continue;
        }
        CHECK(validate_for_lca(m).fittable_after_pruning);
        const PruneResult& once = *pruned;
        ++pruned_ok;
        CHECK(validate_for_lca(once.matrix).fittable);
        const auto twice = prune_invalid_columns(once.matrix);
        CHECK(twice.matrix == once.matrix);
        CHECK(twice.removed_users.empty());
    }
    CHECK(pruned_ok > 0);
}
