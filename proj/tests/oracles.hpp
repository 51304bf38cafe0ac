#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the EM implementation.

#include <cmath>
#include <cstdint>
#include <vector>

#include "detroll/lca.hpp"
#include "detroll/rater_matrix.hpp"
#include "detroll/troll_sim.hpp"

namespace detroll::oracle {

struct Enumerated {
    std::vector<double> posteriors;
    double loglik = 0.0;
};

// Sums the joint probability of Z over all 2^n cluster assignments of the
// utterances, in linear space. Only for tiny matrices (n <= ~14).
inline Enumerated enumerate_posteriors(const InterRaterMatrix& m, const LcaParams& p) {
    const std::size_t n = m.n_utterances();
    const auto cells = m.cells();
    std::vector<double> mass_a(n, 0.0);
    double total = 0.0;
    for (std::uint64_t assign = 0; assign < (std::uint64_t{1} << n); ++assign) {
        double prob = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            prob *= ((assign >> i) & 1) ? (1.0 - p.prior_a) : p.prior_a;
        for (const Cell& c : cells) {
            const int k = static_cast<int>((assign >> c.utterance) & 1);
            const double t = p.theta[c.user][k];
            prob *= c.label == Label::unsafe ? t : 1.0 - t;
        }
        total += prob;
        for (std::size_t i = 0; i < n; ++i)
            if (((assign >> i) & 1) == 0) mass_a[i] += prob;
    }
    Enumerated out;
    out.loglik = std::log(total);
    for (double a : mass_a) out.posteriors.push_back(a / total);
    return out;
}

inline double binom_pmf(std::size_t k, std::size_t n, double p) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) *
           std::pow(p, static_cast<double>(k)) * std::pow(1.0 - p, static_cast<double>(n - k));
}

inline double hypergeom_pmf(std::size_t k, std::size_t pool, std::size_t marked, std::size_t draws) {
    if (k > marked || draws - k > pool - marked) return 0.0;
    const auto lchoose = [](double a, double b) {
        return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
    };
    return std::exp(lchoose(marked, k) + lchoose(pool - marked, draws - k) - lchoose(pool, draws));
}

inline double p_correct(double corrupt_rate, CorruptAction action) {
    return action == CorruptAction::diligent ? 1.0 - corrupt_rate : 1.0 - corrupt_rate / 2.0;
}

// Expected per-run MV accuracy: enumerate troll count among the raters of a
// row, then correct-vote counts from trolls and helpers.
inline double expected_mv_accuracy(const Scenario& s) {
    const std::size_t r = s.raters_per_utterance;
    const double qt = p_correct(s.troll_corrupt_rate, s.corrupt_action);
    const double qh = p_correct(s.helper_corrupt_rate, s.helper_corrupt_action);
    double p_safe_ok = 0.0, p_unsafe_ok = 0.0;
    for (std::size_t k = 0; k <= r; ++k) {
        const double pk = hypergeom_pmf(k, s.pool_size, s.n_trolls(), r);
        if (pk == 0.0) continue;
        for (std::size_t ct = 0; ct <= k; ++ct)
            for (std::size_t ch = 0; ch <= r - k; ++ch) {
                const double p = pk * binom_pmf(ct, k, qt) * binom_pmf(ch, r - k, qh);
                const std::size_t correct = ct + ch;
                if (2 * correct >= r) p_safe_ok += p;   // ties resolve to safe
                if (2 * correct > r) p_unsafe_ok += p;
            }
    }
    const double frac_unsafe =
        static_cast<double>(s.n_unsafe()) / static_cast<double>(s.n_utterances);
    return (1.0 - frac_unsafe) * p_safe_ok + frac_unsafe * p_unsafe_ok;
}

}  // namespace detroll::oracle
