#include "detroll/rater_matrix.hpp"

#include <algorithm>
#include <cstdint>
#include <string>

#include "detroll/errors.hpp"

namespace detroll {

namespace {

std::string pair_str(std::size_t utterance, std::size_t user) {
    return "(utterance " + std::to_string(utterance) + ", user " + std::to_string(user) + ")";
}

bool single_valued(std::span<const Entry> column) {
    if (column.empty()) return true;
    return std::all_of(column.begin(), column.end(),
                       [&](const Entry& e) { return e.label == column.front().label; });
}

}  // namespace

InterRaterMatrix InterRaterMatrix::build(std::size_t n_utterances, std::size_t n_users,
                                         std::span<const Cell> cells, EmptyRows empty_rows) {
    if (n_utterances == 0 || n_users == 0)
        throw ContractError("matrix dimensions must be positive");

    std::vector<Cell> sorted(cells.begin(), cells.end());
    for (const Cell& c : sorted) {
        if (c.utterance >= n_utterances || c.user >= n_users)
            throw ContractError("cell index out of range: " + pair_str(c.utterance, c.user));
        if (c.label != Label::safe && c.label != Label::unsafe)
            throw ContractError("label must be 0 or 1 at " + pair_str(c.utterance, c.user));
    }
    std::sort(sorted.begin(), sorted.end(), [](const Cell& a, const Cell& b) {
        return a.utterance != b.utterance ? a.utterance < b.utterance : a.user < b.user;
    });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].utterance == sorted[i - 1].utterance && sorted[i].user == sorted[i - 1].user)
            throw ContractError("duplicate cell " + pair_str(sorted[i].utterance, sorted[i].user));
    }

    InterRaterMatrix m;
    m.n_utterances_ = n_utterances;
    m.n_users_ = n_users;
    m.row_offsets_.assign(n_utterances + 1, 0);
    m.col_offsets_.assign(n_users + 1, 0);
    for (const Cell& c : sorted) {
        ++m.row_offsets_[c.utterance + 1];
        ++m.col_offsets_[c.user + 1];
    }
    for (std::size_t i = 0; i < n_utterances; ++i) {
        if (empty_rows == EmptyRows::reject && m.row_offsets_[i + 1] == 0)
            throw ContractError("utterance " + std::to_string(i) + " has no observed labels");
        m.row_offsets_[i + 1] += m.row_offsets_[i];
    }
    for (std::size_t u = 0; u < n_users; ++u) m.col_offsets_[u + 1] += m.col_offsets_[u];

    m.row_entries_.resize(sorted.size());
    m.col_entries_.resize(sorted.size());
    std::vector<std::size_t> col_fill(m.col_offsets_.begin(), m.col_offsets_.end() - 1);
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const Cell& c = sorted[k];
        m.row_entries_[k] = Entry{c.user, c.label};
        m.col_entries_[col_fill[c.user]++] = Entry{c.utterance, c.label};
    }
    return m;
}

std::span<const Entry> InterRaterMatrix::row(std::size_t utterance) const {
    if (utterance >= n_utterances_) throw ContractError("row index out of range");
    return {row_entries_.data() + row_offsets_[utterance],
            row_offsets_[utterance + 1] - row_offsets_[utterance]};
}

std::span<const Entry> InterRaterMatrix::column(std::size_t user) const {
    if (user >= n_users_) throw ContractError("column index out of range");
    return {col_entries_.data() + col_offsets_[user],
            col_offsets_[user + 1] - col_offsets_[user]};
}

std::vector<Cell> InterRaterMatrix::cells() const {
    std::vector<Cell> out;
    out.reserve(row_entries_.size());
    for (std::size_t i = 0; i < n_utterances_; ++i)
        for (const Entry& e : row(i)) out.push_back(Cell{i, e.index, e.label});
    return out;
}

namespace {

struct PrunePlan {
    std::vector<std::size_t> removed_users;
    std::vector<std::size_t> user_map;
    std::vector<std::size_t> dropped_rows;
    std::vector<std::size_t> utterance_map;
};

PrunePlan plan_pruning(const InterRaterMatrix& matrix) {
    PrunePlan plan;
    std::vector<bool> keep_user(matrix.n_users());
    for (std::size_t u = 0; u < matrix.n_users(); ++u) {
        keep_user[u] = !single_valued(matrix.column(u));
        (keep_user[u] ? plan.user_map : plan.removed_users).push_back(u);
    }
    for (std::size_t i = 0; i < matrix.n_utterances(); ++i) {
        const auto row = matrix.row(i);
        const bool any = std::any_of(row.begin(), row.end(),
                                     [&](const Entry& e) { return keep_user[e.index]; });
        (any ? plan.utterance_map : plan.dropped_rows).push_back(i);
    }
    return plan;
}

bool rows_suffice(std::size_t rows, std::size_t columns) {
    return columns > 0 && rows >= 2 * columns;
}

}  // namespace

ValidityReport validate_for_lca(const InterRaterMatrix& matrix) {
    ValidityReport report;
    report.row_count_ok = rows_suffice(matrix.n_utterances(), matrix.n_users());
    for (std::size_t u = 0; u < matrix.n_users(); ++u)
        if (single_valued(matrix.column(u))) report.single_valued_columns.push_back(u);
    report.fittable = report.row_count_ok && report.single_valued_columns.empty();
    const PrunePlan plan = plan_pruning(matrix);
    report.fittable_after_pruning =
        rows_suffice(plan.utterance_map.size(), plan.user_map.size());
    return report;
}

PruneResult prune_invalid_columns(const InterRaterMatrix& matrix) {
    PrunePlan plan = plan_pruning(matrix);
    const std::size_t rows = plan.utterance_map.size();
    const std::size_t cols = plan.user_map.size();
    if (cols == 0)
        throw UnfittableError(
            "requirement (2) violated: no user column has both labels, nothing left to fit");
    if (!rows_suffice(rows, cols))
        throw UnfittableError("requirement (1) violated: after pruning " + std::to_string(plan.removed_users.size()) +
                              " single-valued column(s), " + std::to_string(rows) +
                              " rows remain for " + std::to_string(cols) +
                              " columns; rows must be at least twice the columns");

    std::vector<std::size_t> new_user(matrix.n_users(), SIZE_MAX);
    for (std::size_t k = 0; k < cols; ++k) new_user[plan.user_map[k]] = k;

    std::vector<Cell> cells;
    cells.reserve(matrix.n_cells());
    for (std::size_t r = 0; r < rows; ++r) {
        for (const Entry& e : matrix.row(plan.utterance_map[r])) {
            if (new_user[e.index] != SIZE_MAX) cells.push_back(Cell{r, new_user[e.index], e.label});
        }
    }
    return PruneResult{InterRaterMatrix::build(rows, cols, cells), std::move(plan.removed_users),
                       std::move(plan.user_map), std::move(plan.dropped_rows),
                       std::move(plan.utterance_map)};
}

}  // namespace detroll
