#pragma once

// File formats: matrix/gold/roles/imputation CSVs and JSON documents.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "detroll/imputer.hpp"
#include "detroll/lca.hpp"
#include "detroll/rater_matrix.hpp"
#include "detroll/troll_sim.hpp"

namespace detroll::io {

// Matrix plus the external ids behind its dense indices.
struct LabeledMatrix {
    InterRaterMatrix matrix;
    std::vector<std::string> utterance_ids;
    std::vector<std::string> user_ids;
};

// Header `utterance_id,user_id,label`; ids are assigned dense indices in
// order of first appearance. Throws ContractError with a line number.
LabeledMatrix parse_matrix_csv(std::string_view text);
std::string matrix_csv(const LabeledMatrix& m);

// `utterance_id,label`
std::vector<std::pair<std::string, Label>> parse_gold_csv(std::string_view text);
std::string gold_csv(std::span<const Label> gold);
// `user_id,kind`
std::string roles_csv(std::span<const RaterRole> roles);

// Simulated runs use the decimal index as the external id.
LabeledMatrix with_index_ids(InterRaterMatrix matrix);

nlohmann::json to_json(const Scenario& s);
// Missing keys keep their defaults; unknown keys and bad values throw
// ContractError naming the field.
Scenario scenario_from_json(const nlohmann::json& j);

struct GridConfig {
    std::vector<Scenario> scenarios;
    std::size_t runs = 500;
    std::uint64_t grid_seed = 0;
};

GridConfig grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GridConfig& g);

// Keys: prior_a, theta, posteriors, loglik_trace, converged, iterations,
// restart_index.
nlohmann::json to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& j);

// `utterance_id,method,label,tied`
std::string imputation_csv(const ImputationResult& r,
                           std::span<const std::string> utterance_ids);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
nlohmann::json read_json(const std::filesystem::path& path);

// printf-style "%.<digits>g".
std::string format_double(double v, int digits = 17);

// Shortest decimal that round-trips to the same double.
std::string format_shortest(double v);

}  // namespace detroll::io
