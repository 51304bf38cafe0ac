#include "detroll/imputer.hpp"

#include <string>

#include "detroll/errors.hpp"

namespace detroll {

std::string_view to_string(Method m) { return m == Method::lca_sm ? "LCA_SM" : "MV"; }

std::string_view to_string(Cluster c) { return c == Cluster::a ? "A" : "B"; }

ImputationResult impute_lca_sm(const FitResult& fit, const InterRaterMatrix& matrix) {
    const std::size_t n = matrix.n_utterances();
    if (fit.posteriors.size() != n)
        throw ContractError("fit has " + std::to_string(fit.posteriors.size()) +
                            " posteriors but the matrix has " + std::to_string(n) + " utterances");

    ImputationResult r;
    r.method = Method::lca_sm;
    std::vector<Cluster> assigned(n);
    std::size_t size_a = 0;
    double mass_a = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = fit.posteriors[i];
        if (p == 0.5) r.tie_rows.push_back(i);
        assigned[i] = p >= 0.5 ? Cluster::a : Cluster::b;
        if (assigned[i] == Cluster::a) ++size_a;
        mass_a += p;
    }
    const std::size_t size_b = n - size_a;
    const double mass_b = static_cast<double>(n) - mass_a;

    Cluster safe = Cluster::a;
    if (size_a != size_b) {
        safe = size_a > size_b ? Cluster::a : Cluster::b;
    } else {
        r.cluster_size_tie = true;
        safe = mass_b > mass_a ? Cluster::b : Cluster::a;
    }
    r.safe_cluster = safe;
    r.safe_cluster_share =
        static_cast<double>(safe == Cluster::a ? size_a : size_b) / static_cast<double>(n);

    r.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        r.labels[i] = assigned[i] == safe ? Label::safe : Label::unsafe;
    return r;
}

ImputationResult impute_mv(const InterRaterMatrix& matrix) {
    ImputationResult r;
    r.method = Method::mv;
    r.labels.resize(matrix.n_utterances());
    for (std::size_t i = 0; i < matrix.n_utterances(); ++i) {
        std::size_t ones = 0;
        const auto row = matrix.row(i);
        for (const Entry& e : row) ones += e.label == Label::unsafe ? 1 : 0;
        const std::size_t zeros = row.size() - ones;
        if (ones == zeros) r.tie_rows.push_back(i);
        r.labels[i] = ones > zeros ? Label::unsafe : Label::safe;
    }
    return r;
}

double imputation_accuracy(const ImputationResult& imputed, std::span<const Label> gold) {
    if (imputed.labels.size() != gold.size())
        throw ContractError("imputed " + std::to_string(imputed.labels.size()) +
                            " labels but gold has " + std::to_string(gold.size()));
    if (gold.empty()) throw ContractError("accuracy of an empty imputation is undefined");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) hits += imputed.labels[i] == gold[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(gold.size());
}

}  // namespace detroll
