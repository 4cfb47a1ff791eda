#pragma once

#include "skillgp/evaldata.hpp"
#include "skillgp/inference.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace skillgp {

/*
 * Search space: a configuration template in which any value may be replaced
 * by a sampler,
 *   {"uniform": [a, b]}, {"log_uniform": [a, b]}, {"choice": [v1, v2, ...]}.
 * Samplers nest (a choice may hold templates). The resolved template is
 *   {"model": "gp", <model specification fields>}  or
 *   {"model": "elo", "link": ..., "learning_rate": ..., "draw_margin": ...}.
 * "model" defaults to "gp".
 */
nlohmann::json sample_template(const nlohmann::json& tmpl, std::mt19937_64& rng);

struct SearchCandidate {
    std::size_t sample = 0;  ///< draw order
    nlohmann::json config;
    /// Log-marginal (GP) or minus the one-pass train log loss (Elo); unset on failure.
    std::optional<double> score;
    int iterations = 0;
    bool converged = false;
    std::string error;
};

struct SearchOptions {
    std::size_t n = 100;
    std::uint64_t seed = 0;
    /// Configurations fitted concurrently; each fit is single-threaded.
    int threads = 0;
    FitConfig fit;
};

/// Scores one resolved configuration on the training records. Never throws
/// for model or numerical failures; they land in SearchCandidate::error.
SearchCandidate evaluate_config(const nlohmann::json& config, const DatasetSchema& schema,
                                const std::vector<MatchRecord>& train, const FitConfig& fit);

/// Best first; failures last; equal scores keep draw order.
std::vector<SearchCandidate> random_search(const nlohmann::json& space, const DatasetSchema& schema,
                                           const std::vector<MatchRecord>& train, const SearchOptions& options);

nlohmann::json search_result_to_json(const std::vector<SearchCandidate>& ranked);

}  // namespace skillgp
