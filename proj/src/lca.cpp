#include "detroll/lca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "detroll/errors.hpp"
#include "detroll/rng.hpp"

namespace detroll {

namespace {

// log P(label | cluster) per user: [cluster][label]
using LogTable = std::array<std::array<double, 2>, 2>;

void check_coverage(const InterRaterMatrix& matrix, const LcaParams& params) {
    if (params.theta.size() != matrix.n_users())
        throw ContractError("params cover " + std::to_string(params.theta.size()) +
                            " users but the matrix has " + std::to_string(matrix.n_users()));
}

double log_sum_exp(double x, double y) {
    const double hi = std::max(x, y);
    if (hi == -std::numeric_limits<double>::infinity()) return hi;
    return hi + std::log(std::exp(x - hi) + std::exp(y - hi));
}

double clamp_prob(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

// Posteriors written into `out`; returns the log-likelihood.
double e_step_into(const InterRaterMatrix& matrix, const LcaParams& params,
                   std::vector<LogTable>& table, std::vector<double>& out) {
    const std::size_t n_users = matrix.n_users();
    table.resize(n_users);
    for (std::size_t u = 0; u < n_users; ++u) {
        for (int k = 0; k < 2; ++k) {
            const double p = params.theta[u][k];
            table[u][k][1] = std::log(p);
            table[u][k][0] = std::log1p(-p);
        }
    }
    const double log_prior_a = std::log(params.prior_a);
    const double log_prior_b = std::log1p(-params.prior_a);

    out.resize(matrix.n_utterances());
    double loglik = 0.0;
    for (std::size_t i = 0; i < matrix.n_utterances(); ++i) {
        double la = log_prior_a;
        double lb = log_prior_b;
        for (const Entry& e : matrix.row(i)) {
            const int y = to_int(e.label);
            la += table[e.index][0][y];
            lb += table[e.index][1][y];
        }
        const double lse = log_sum_exp(la, lb);
        out[i] = std::exp(la - lse);
        loglik += lse;
    }
    return loglik;
}

void m_step_into(const InterRaterMatrix& matrix, std::span<const double> posteriors,
                 double eps, LcaParams& params) {
    if (posteriors.size() != matrix.n_utterances())
        throw ContractError("m_step needs one posterior per utterance");
    double mass_a = 0.0;
    for (double p : posteriors) mass_a += p;
    params.prior_a = clamp_prob(mass_a / static_cast<double>(posteriors.size()), eps);

    params.theta.resize(matrix.n_users());
    for (std::size_t u = 0; u < matrix.n_users(); ++u) {
        const auto col = matrix.column(u);
        if (col.empty())
            throw ContractError("user " + std::to_string(u) + " has no observed cells");
        double w_a = 0.0, w_a1 = 0.0, w_b = 0.0, w_b1 = 0.0;
        for (const Entry& e : col) {
            const double p = posteriors[e.index];
            const double y = e.label == Label::unsafe ? 1.0 : 0.0;
            w_a += p;
            w_a1 += p * y;
            w_b += 1.0 - p;
            w_b1 += (1.0 - p) * y;
        }
        // No responsibility for a cluster leaves the user uninformative there.
        params.theta[u][0] = w_a > 0.0 ? clamp_prob(w_a1 / w_a, eps) : 0.5;
        params.theta[u][1] = w_b > 0.0 ? clamp_prob(w_b1 / w_b, eps) : 0.5;
    }
}

double max_decrease(const std::vector<double>& trace) {
    double worst = 0.0;
    for (std::size_t k = 1; k < trace.size(); ++k)
        worst = std::max(worst, trace[k - 1] - trace[k]);
    return worst;
}

}  // namespace

LcaParams swap_clusters(const LcaParams& params) {
    LcaParams out;
    out.prior_a = 1.0 - params.prior_a;
    out.theta.reserve(params.theta.size());
    for (const auto& t : params.theta) out.theta.push_back({t[1], t[0]});
    return out;
}

void EmConfig::validate() const {
    if (max_iterations < 1) throw ContractError("max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw ContractError("tolerance must be > 0");
    if (n_restarts < 1) throw ContractError("n_restarts must be >= 1");
    if (!(clamp_epsilon > 0.0 && clamp_epsilon < 0.5))
        throw ContractError("clamp_epsilon must lie in (0, 0.5)");
}

double log_likelihood(const InterRaterMatrix& matrix, const LcaParams& params) {
    return e_step(matrix, params).loglik;
}

EStepResult e_step(const InterRaterMatrix& matrix, const LcaParams& params) {
    check_coverage(matrix, params);
    std::vector<LogTable> table;
    EStepResult r;
    r.loglik = e_step_into(matrix, params, table, r.posteriors);
    return r;
}

LcaParams m_step(const InterRaterMatrix& matrix, std::span<const double> posteriors,
                 double clamp_epsilon) {
    LcaParams params;
    m_step_into(matrix, posteriors, clamp_epsilon, params);
    return params;
}

FitResult fit_em(const InterRaterMatrix& matrix, const LcaParams& init, const EmConfig& config) {
    config.validate();
    check_coverage(matrix, init);

    FitResult fit;
    fit.params = init;
    std::vector<LogTable> table;
    fit.loglik_trace.reserve(config.max_iterations + 1);

    const auto push = [&](double ll, std::size_t iteration) {
        if (!std::isfinite(ll))
            throw NumericalError("non-finite log-likelihood at iteration " +
                                     std::to_string(iteration),
                                 iteration);
        fit.loglik_trace.push_back(ll);
    };

    push(e_step_into(matrix, fit.params, table, fit.posteriors), 0);
    while (fit.iterations < config.max_iterations) {
        m_step_into(matrix, fit.posteriors, config.clamp_epsilon, fit.params);
        ++fit.iterations;
        push(e_step_into(matrix, fit.params, table, fit.posteriors), fit.iterations);
        const auto n = fit.loglik_trace.size();
        if (std::abs(fit.loglik_trace[n - 1] - fit.loglik_trace[n - 2]) < config.tolerance) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

std::uint64_t restart_seed(std::uint64_t seed, std::size_t restart) {
    return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(restart));
}

LcaParams random_init(std::size_t n_users, std::uint64_t seed, std::size_t restart) {
    Rng rng(restart_seed(seed, restart));
    LcaParams p;
    p.prior_a = 0.5;
    p.theta.resize(n_users);
    for (auto& t : p.theta) {
        t[0] = rng.uniform(0.2, 0.8);
        t[1] = rng.uniform(0.2, 0.8);
    }
    return p;
}

FitResult fit_with_restarts(const InterRaterMatrix& matrix, const EmConfig& config) {
    config.validate();
    std::vector<RestartOutcome> outcomes(config.n_restarts);
    std::optional<FitResult> best;
    std::string failures;

    for (std::size_t r = 0; r < config.n_restarts; ++r) {
        try {
            FitResult fit = fit_em(matrix, random_init(matrix.n_users(), config.seed, r), config);
            fit.restart_index = r;
            outcomes[r] = RestartOutcome{false, fit.final_loglik(), fit.iterations, fit.converged,
                                         max_decrease(fit.loglik_trace)};
            // Strict comparison keeps the lowest index among ties.
            if (!best || fit.final_loglik() > best->final_loglik()) best = std::move(fit);
        } catch (const NumericalError& e) {
            outcomes[r].failed = true;
            failures += "\n  restart " + std::to_string(r) + ": " + e.what();
        }
    }
    if (!best)
        throw NumericalError("all " + std::to_string(config.n_restarts) + " restarts failed:" +
                                 failures,
                             0);
    best->restarts = std::move(outcomes);
    return std::move(*best);
}

}  // namespace detroll
