#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "detroll/label.hpp"
#include "detroll/lca.hpp"
#include "detroll/rater_matrix.hpp"

namespace detroll {

enum class Method { lca_sm, mv };

std::string_view to_string(Method m);
std::string_view to_string(Cluster c);

struct ImputationResult {
    std::vector<Label> labels;
    Method method = Method::mv;
    std::optional<Cluster> safe_cluster;  // LCA_SM only
    std::vector<std::size_t> tie_rows;
    // LCA_SM only: both clusters held the same number of utterances.
    bool cluster_size_tie = false;
    // LCA_SM only: share of utterances assigned to the safe cluster.
    std::optional<double> safe_cluster_share;
};

// Safe-as-majority: the larger cluster is safe. Equal sizes fall back to the
// larger total posterior mass, then to Cluster A.
ImputationResult impute_lca_sm(const FitResult& fit, const InterRaterMatrix& matrix);

// Strict row majority; exact ties resolve to safe.
ImputationResult impute_mv(const InterRaterMatrix& matrix);

double imputation_accuracy(const ImputationResult& imputed, std::span<const Label> gold);

}  // namespace detroll
