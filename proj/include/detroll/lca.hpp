#pragma once

// Two-cluster latent class model over an InterRaterMatrix, fitted by EM.
//
// Each utterance belongs to Cluster A with probability prior_a. Given the
// cluster, user u emits label 1 independently with probability theta[u][A]
// or theta[u][B]. Row likelihoods are accumulated as sums of logs and the
// mixture is combined with log-sum-exp, so long rows near the clamp bounds
// never underflow.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "detroll/rater_matrix.hpp"

namespace detroll {

enum class Cluster : std::uint8_t { a = 0, b = 1 };

struct LcaParams {
    double prior_a = 0.5;
    // theta[u] = {P(label 1 | A), P(label 1 | B)}
    std::vector<std::array<double, 2>> theta;
};

// Same model with the cluster roles exchanged.
LcaParams swap_clusters(const LcaParams& params);

struct EmConfig {
    std::size_t max_iterations = 500;
    double tolerance = 1e-8;
    std::size_t n_restarts = 10;
    double clamp_epsilon = 1e-6;
    std::uint64_t seed = 0;

    // Throws ContractError if any field is out of range.
    void validate() const;
};

struct RestartOutcome {
    bool failed = false;
    double final_loglik = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    // Largest single-step decrease in the trace (<= 0 means monotone).
    double max_decrease = 0.0;
};

struct FitResult {
    LcaParams params;
    std::vector<double> posteriors;  // P(Cluster A | row)
    std::vector<double> loglik_trace;
    bool converged = false;
    std::size_t iterations = 0;
    std::size_t restart_index = 0;
    // Filled by fit_with_restarts, one entry per restart.
    std::vector<RestartOutcome> restarts;

    double final_loglik() const { return loglik_trace.back(); }
};

struct EStepResult {
    std::vector<double> posteriors;
    double loglik = 0.0;
};

double log_likelihood(const InterRaterMatrix& matrix, const LcaParams& params);

EStepResult e_step(const InterRaterMatrix& matrix, const LcaParams& params);

LcaParams m_step(const InterRaterMatrix& matrix, std::span<const double> posteriors,
                 double clamp_epsilon = EmConfig{}.clamp_epsilon);

FitResult fit_em(const InterRaterMatrix& matrix, const LcaParams& init,
                 const EmConfig& config);

// prior_a = 0.5, theta ~ U[0.2, 0.8] per entry, seeded by (seed, restart).
LcaParams random_init(std::size_t n_users, std::uint64_t seed, std::size_t restart);

std::uint64_t restart_seed(std::uint64_t seed, std::size_t restart);

FitResult fit_with_restarts(const InterRaterMatrix& matrix, const EmConfig& config);

}  // namespace detroll
