#include "detroll/troll_sim.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "detroll/errors.hpp"

namespace detroll {

namespace {

std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void check_probability(double p, const char* field) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ContractError(std::string("scenario field '") + field + "' must lie in [0, 1], got " +
                            shortest(p));
}

std::size_t rounded_count(double fraction, std::size_t total) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
}

}  // namespace

std::string_view to_string(CorruptAction a) {
    return a == CorruptAction::diligent ? "diligent" : "lazy";
}

CorruptAction corrupt_action_from_string(std::string_view s) {
    if (s == "diligent") return CorruptAction::diligent;
    if (s == "lazy") return CorruptAction::lazy;
    throw ContractError("corrupt action must be 'diligent' or 'lazy', got '" + std::string(s) + "'");
}

std::string_view to_string(RaterKind k) { return k == RaterKind::troll ? "troll" : "helper"; }

void Scenario::validate() const {
    check_probability(unsafe_prevalence, "unsafe_prevalence");
    check_probability(troll_prevalence, "troll_prevalence");
    check_probability(troll_corrupt_rate, "troll_corrupt_rate");
    check_probability(helper_corrupt_rate, "helper_corrupt_rate");
    if (n_utterances < 1) throw ContractError("scenario field 'n_utterances' must be >= 1");
    if (pool_size < 1) throw ContractError("scenario field 'pool_size' must be >= 1");
    if (raters_per_utterance < 1)
        throw ContractError("scenario field 'raters_per_utterance' must be >= 1");
    if (raters_per_utterance > pool_size)
        throw ContractError("scenario field 'raters_per_utterance' (" +
                            std::to_string(raters_per_utterance) + ") exceeds 'pool_size' (" +
                            std::to_string(pool_size) + ")");
}

std::size_t Scenario::n_trolls() const { return rounded_count(troll_prevalence, pool_size); }

std::size_t Scenario::n_unsafe() const { return rounded_count(unsafe_prevalence, n_utterances); }

std::string Scenario::id() const {
    return "up" + shortest(unsafe_prevalence) + "_tp" + shortest(troll_prevalence) + "_" +
           std::string(to_string(corrupt_action)) + "_cr" + shortest(troll_corrupt_rate) + "_hc" +
           shortest(helper_corrupt_rate) + "_h" + std::string(to_string(helper_corrupt_action)) +
           "_n" + std::to_string(n_utterances) + "_p" + std::to_string(pool_size) + "_r" +
           std::to_string(raters_per_utterance);
}

Scenario Scenario::from_id(std::string_view id) {
    std::vector<std::string_view> parts;
    for (std::size_t start = 0;;) {
        const auto pos = id.find('_', start);
        parts.push_back(id.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    const auto bad = [&] { return ContractError("malformed scenario id '" + std::string(id) + "'"); };
    if (parts.size() != 9) throw bad();

    const auto number = [&](std::string_view part, std::string_view prefix, auto& out) {
        if (part.substr(0, prefix.size()) != prefix) throw bad();
        const auto body = part.substr(prefix.size());
        const auto res = std::from_chars(body.data(), body.data() + body.size(), out);
        if (res.ec != std::errc{} || res.ptr != body.data() + body.size()) throw bad();
    };

    Scenario s;
    number(parts[0], "up", s.unsafe_prevalence);
    number(parts[1], "tp", s.troll_prevalence);
    s.corrupt_action = corrupt_action_from_string(parts[2]);
    number(parts[3], "cr", s.troll_corrupt_rate);
    number(parts[4], "hc", s.helper_corrupt_rate);
    if (parts[5].substr(0, 1) != "h") throw bad();
    s.helper_corrupt_action = corrupt_action_from_string(parts[5].substr(1));
    number(parts[6], "n", s.n_utterances);
    number(parts[7], "p", s.pool_size);
    number(parts[8], "r", s.raters_per_utterance);
    s.validate();
    return s;
}

std::vector<Scenario> factorial_grid() {
    std::vector<Scenario> grid;
    for (double unsafe : {0.10, 0.30})
        for (double trolls : {0.50, 0.90})
            for (CorruptAction action : {CorruptAction::diligent, CorruptAction::lazy})
                for (double rate : {0.80, 0.95}) {
                    Scenario s;
                    s.unsafe_prevalence = unsafe;
                    s.troll_prevalence = trolls;
                    s.corrupt_action = action;
                    s.troll_corrupt_rate = rate;
                    grid.push_back(s);
                }
    return grid;
}

std::vector<RaterRole> assign_roles(const Scenario& scenario, Rng& rng) {
    const RaterRole helper{RaterKind::helper, scenario.helper_corrupt_rate,
                           scenario.helper_corrupt_action};
    const RaterRole troll{RaterKind::troll, scenario.troll_corrupt_rate, scenario.corrupt_action};
    std::vector<RaterRole> roles(scenario.pool_size, helper);
    for (std::size_t u : rng.sample_without_replacement(scenario.pool_size, scenario.n_trolls()))
        roles[u] = troll;
    return roles;
}

std::vector<Label> generate_gold_labels(const Scenario& scenario, Rng& rng) {
    std::vector<Label> gold(scenario.n_utterances, Label::safe);
    for (std::size_t i : rng.sample_without_replacement(scenario.n_utterances, scenario.n_unsafe()))
        gold[i] = Label::unsafe;
    return gold;
}

std::vector<std::vector<std::size_t>> assign_users(const Scenario& scenario, Rng& rng) {
    if (scenario.raters_per_utterance > scenario.pool_size)
        throw ContractError("raters_per_utterance exceeds pool_size");
    std::vector<std::vector<std::size_t>> rows(scenario.n_utterances);
    for (auto& row : rows)
        row = rng.sample_without_replacement(scenario.pool_size, scenario.raters_per_utterance);
    return rows;
}

Label render_label(Label gold, const RaterRole& role, Rng& rng) {
    if (!rng.bernoulli(role.corrupt_rate)) return gold;
    if (role.corrupt_action == CorruptAction::diligent) return flip(gold);
    return rng.bernoulli(0.5) ? Label::unsafe : Label::safe;
}

SimulatedRun simulate_run(const Scenario& scenario, std::uint64_t seed) {
    scenario.validate();
    Rng rng(seed);
    auto roles = assign_roles(scenario, rng);
    auto gold = generate_gold_labels(scenario, rng);
    const auto assignment = assign_users(scenario, rng);

    std::vector<Cell> cells;
    cells.reserve(scenario.n_utterances * scenario.raters_per_utterance);
    for (std::size_t i = 0; i < assignment.size(); ++i)
        for (std::size_t u : assignment[i])
            cells.push_back(Cell{i, u, render_label(gold[i], roles[u], rng)});
    return SimulatedRun{std::move(gold), std::move(roles),
                        InterRaterMatrix::build(scenario.n_utterances, scenario.pool_size, cells),
                        seed};
}

std::uint64_t derive_run_seed(std::uint64_t grid_seed, const Scenario& scenario,
                              std::size_t run_index) {
    std::uint64_t s = splitmix64(grid_seed);
    s = splitmix64(s ^ fnv1a64(scenario.id()));
    return splitmix64(s ^ static_cast<std::uint64_t>(run_index));
}

}  // namespace detroll
