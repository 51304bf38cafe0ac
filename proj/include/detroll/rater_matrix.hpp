#pragma once

// Sparse utterance x user matrix of observed binary labels.

#include <cstddef>
#include <span>
#include <vector>

#include "detroll/label.hpp"

namespace detroll {

struct Cell {
    std::size_t utterance = 0;
    std::size_t user = 0;
    Label label = Label::safe;

    friend bool operator==(const Cell&, const Cell&) = default;
};

// One observation seen from a row (index = user) or a column (index = utterance).
struct Entry {
    std::size_t index = 0;
    Label label = Label::safe;
};

enum class EmptyRows { reject, allow };

class InterRaterMatrix {
public:
    // Throws ContractError on out-of-range indices, duplicate (utterance, user)
    // pairs, zero dimensions, or (unless allowed) utterances without any cell.
    static InterRaterMatrix build(std::size_t n_utterances, std::size_t n_users,
                                  std::span<const Cell> cells,
                                  EmptyRows empty_rows = EmptyRows::reject);

    std::size_t n_utterances() const noexcept { return n_utterances_; }
    std::size_t n_users() const noexcept { return n_users_; }
    std::size_t n_cells() const noexcept { return row_entries_.size(); }

    std::span<const Entry> row(std::size_t utterance) const;
    std::span<const Entry> column(std::size_t user) const;

    // Cells ordered by (utterance, user).
    std::vector<Cell> cells() const;

    friend bool operator==(const InterRaterMatrix& a, const InterRaterMatrix& b) {
        return a.n_utterances_ == b.n_utterances_ && a.n_users_ == b.n_users_ &&
               a.cells() == b.cells();
    }

private:
    InterRaterMatrix() = default;

    std::size_t n_utterances_ = 0;
    std::size_t n_users_ = 0;
    // CSR by row and by column.
    std::vector<std::size_t> row_offsets_;
    std::vector<Entry> row_entries_;
    std::vector<std::size_t> col_offsets_;
    std::vector<Entry> col_entries_;
};

inline InterRaterMatrix build_matrix(std::size_t n_utterances, std::size_t n_users,
                                     std::span<const Cell> cells) {
    return InterRaterMatrix::build(n_utterances, n_users, cells);
}

struct ValidityReport {
    bool row_count_ok = false;                     // rows >= 2 * columns
    std::vector<std::size_t> single_valued_columns; // constant or empty columns
    bool fittable = false;
    bool fittable_after_pruning = false;
};

ValidityReport validate_for_lca(const InterRaterMatrix& matrix);

struct PruneResult {
    InterRaterMatrix matrix;
    std::vector<std::size_t> removed_users;   // original user indices
    std::vector<std::size_t> user_map;        // new user index -> original
    std::vector<std::size_t> dropped_rows;    // original utterance indices
    std::vector<std::size_t> utterance_map;   // new utterance index -> original
};

// Drops single-valued/empty columns, then rows left without observations.
// Throws UnfittableError when the result has no columns or fewer than
// 2 * columns rows.
PruneResult prune_invalid_columns(const InterRaterMatrix& matrix);

}  // namespace detroll
