#pragma once

#include "skillgp/inference.hpp"
#include "skillgp/kernels.hpp"
#include "skillgp/likelihoods.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace skillgp {

/// Sparse feature combination x = x_i - x_j, as (feature id, coefficient) pairs.
using Coefficients = std::vector<std::pair<std::string, double>>;

/// Merges repeated ids and drops entries that cancel to zero; sorted by id.
Coefficients canonical(const Coefficients& coeffs);

/// Canonical id of the interaction feature of an ordered pair, and the sign
/// with which it enters d = s_a - s_b + sign * s_{min,max}.
std::pair<std::string, double> interaction_feature(const std::string& a, const std::string& b);

struct TrajectoryPoint {
    double t = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

/*
 * Pairwise-comparison model with Gaussian-process feature scores.
 *
 * Times are in years. Every feature's kernel measures time from the model's
 * epoch. Observations must arrive in chronological order; from_observations()
 * sorts a batch first. Mutation (observe, fit) is exclusive; const queries are
 * safe to run concurrently on a model that is not being mutated.
 */
class Model {
public:
    explicit Model(Likelihood likelihood, double epoch = 0.0);

    const Likelihood& likelihood() const { return graph_.likelihood(); }
    double epoch() const { return epoch_; }

    /// Throws ConfigError on a duplicate id or a kernel without state-space form.
    void add_feature(const std::string& id, const Kernel& kernel);
    bool has_feature(const std::string& id) const { return index_.contains(id); }
    std::size_t num_features() const { return ids_.size(); }
    const std::vector<std::string>& feature_ids() const { return ids_; }
    const Kernel& kernel(const std::string& id) const;
    const FeatureChain& chain(const std::string& id) const;

    /// Throws DataError for unknown features, invalid outcomes, out-of-order
    /// times or coefficients that cancel out entirely.
    void observe(const Coefficients& coeffs, double time, double outcome);
    std::size_t num_observations() const { return graph_.num_observations(); }
    double observation_time(std::size_t n) const { return obs_times_[n]; }

    struct Input {
        Coefficients coeffs;
        double time = 0.0;
        double outcome = 0.0;
    };
    /// Bulk constructor: stable-sorts the inputs by time before observing them.
    static Model from_observations(Likelihood likelihood, double epoch,
                                   const std::vector<std::pair<std::string, Kernel>>& features,
                                   std::vector<Input> inputs);

    FitReport fit(const FitConfig& config);
    /// True once fit() has run and no observation was added since.
    bool fitted() const { return fitted_; }
    /// Throws std::logic_error on an unfitted model.
    double log_marginal() const;
    Objective objective() const { return objective_; }

    /// Mean-field marginal of d = x' s(t).
    Marginal score_marginal(const Coefficients& coeffs, double t) const;
    OutcomeDistribution predict(const Coefficients& coeffs, double t) const;
    std::vector<TrajectoryPoint> trajectory(const std::string& id, std::span<const double> grid) const;

    const FactorGraph& graph() const { return graph_; }

    // Snapshot: kernels, chain times, pseudo parameters and observations.
    nlohmann::json to_json() const;
    /// Restores a snapshot and re-smooths it. Throws ConfigError.
    static Model from_json(const nlohmann::json& j);

private:
    std::uint32_t feature_index(const std::string& id) const;

    double epoch_;
    FactorGraph graph_;
    std::vector<std::string> ids_;
    std::vector<Kernel> kernels_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<double> obs_times_;
    bool fitted_ = false;
    Objective objective_ = Objective::EP;
};

inline constexpr int kSnapshotFormatVersion = 1;

/*
 * Model specification file:
 *   {"likelihood": {...}, "features": [{"id": ..., "kernel": {...}}], "epoch": x,
 *    "default_kernel": {...}, "advantage_kernel": {...}, "interaction_kernel": {...}}
 * Features not listed are created on demand with default_kernel.
 */
struct ModelSpec {
    Likelihood likelihood = Likelihood::probit();
    std::vector<std::pair<std::string, Kernel>> features;
    std::optional<double> epoch;
    std::optional<Kernel> default_kernel;
    std::optional<Kernel> advantage_kernel;
    std::optional<Kernel> interaction_kernel;

    /// Declared kernel for an id, else the default; nullopt if neither exists.
    std::optional<Kernel> kernel_for(const std::string& id) const;
};

/// Throws ConfigError naming the offending field.
ModelSpec model_spec_from_json(const nlohmann::json& j);
nlohmann::json model_spec_to_json(const ModelSpec& spec);

/// Empty model with the declared features registered.
Model make_model(const ModelSpec& spec, double epoch);

inline constexpr const char* kAdvantageFeature = "__advantage__";

}  // namespace skillgp
