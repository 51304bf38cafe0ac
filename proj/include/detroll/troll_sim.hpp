#pragma once

// Synthetic crowd-labeling runs: gold labels, a user pool of trolls and
// helpers, random utterance-to-user assignment and corrupted observations.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "detroll/label.hpp"
#include "detroll/rater_matrix.hpp"
#include "detroll/rng.hpp"

namespace detroll {

// diligent: y* = 1 - y. lazy: y* uniform over {0, 1}.
enum class CorruptAction { diligent, lazy };

std::string_view to_string(CorruptAction a);
CorruptAction corrupt_action_from_string(std::string_view s);

struct Scenario {
    double unsafe_prevalence = 0.30;
    double troll_prevalence = 0.90;
    CorruptAction corrupt_action = CorruptAction::diligent;
    double troll_corrupt_rate = 0.95;
    double helper_corrupt_rate = 0.05;
    CorruptAction helper_corrupt_action = CorruptAction::diligent;
    std::size_t n_utterances = 200;
    std::size_t pool_size = 50;
    std::size_t raters_per_utterance = 5;

    // Throws ContractError naming the offending field.
    void validate() const;

    std::size_t n_trolls() const;
    std::size_t n_unsafe() const;

    // Canonical, parseable encoding; doubles as the seed-hash input and the
    // file-name stem of per-scenario outputs.
    std::string id() const;
    static Scenario from_id(std::string_view id);

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

// The 2x2x2x2 design: unsafe prevalence {0.10, 0.30} x troll prevalence
// {0.50, 0.90} x action {diligent, lazy} x troll corrupt rate {0.80, 0.95}.
std::vector<Scenario> factorial_grid();

enum class RaterKind { helper, troll };

std::string_view to_string(RaterKind k);

struct RaterRole {
    RaterKind kind = RaterKind::helper;
    double corrupt_rate = 0.0;
    CorruptAction corrupt_action = CorruptAction::diligent;
};

struct SimulatedRun {
    std::vector<Label> gold;
    std::vector<RaterRole> roles;
    InterRaterMatrix matrix;
    std::uint64_t seed = 0;
};

std::vector<RaterRole> assign_roles(const Scenario& scenario, Rng& rng);
std::vector<Label> generate_gold_labels(const Scenario& scenario, Rng& rng);
std::vector<std::vector<std::size_t>> assign_users(const Scenario& scenario, Rng& rng);
Label render_label(Label gold, const RaterRole& role, Rng& rng);

// Draw order: roles, gold labels, assignments, then one rendered label per
// cell in (utterance, assignment) order.
SimulatedRun simulate_run(const Scenario& scenario, std::uint64_t seed);

// seed_k = mix(mix(mix(grid_seed) ^ fnv1a64(scenario.id())) ^ k), mix = splitmix64.
std::uint64_t derive_run_seed(std::uint64_t grid_seed, const Scenario& scenario,
                              std::size_t run_index);

}  // namespace detroll
