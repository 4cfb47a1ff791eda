#pragma once

#include "skillgp/likelihoods.hpp"
#include "skillgp/statespace.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace skillgp {

/// EP minimizes KL(hybrid || q) per observation; ReverseKL minimizes KL(q || p).
enum class Objective { EP, ReverseKL };

enum class ConvergenceMetric {
    LogMarginal,   ///< |change of the log-marginal estimate| < tolerance
    PseudoParams,  ///< max |change of any alpha~ or beta~| < tolerance
};

struct IterationRecord {
    int iteration = 0;
    double log_marginal = 0.0;
    double elapsed_s = 0.0;
};

struct FitConfig {
    Objective objective = Objective::EP;
    /// Damping in (0, 1]; unset means the likelihood's default.
    std::optional<double> learning_rate;
    double tolerance = 1e-3;
    int max_iterations = 500;
    /// 0 = all hardware threads. Results do not depend on this value.
    int threads = 0;
    ConvergenceMetric metric = ConvergenceMetric::LogMarginal;
    std::function<void(const IterationRecord&)> progress;

    /// Throws ConfigError.
    void validate() const;
};

struct FitReport {
    int iterations = 0;
    bool converged = false;
    std::vector<double> log_marginals;
    /// Per-(observation, feature) updates skipped because a cavity or
    /// denominator was not positive.
    std::size_t guarded_updates = 0;
    /// Updates whose new precision was negative and clamped to zero.
    std::size_t clamped_precisions = 0;
    /// Set when an iteration guarded every observation; the fit stops there.
    bool stalled = false;
};

/// One feature's participation in an observation.
struct Term {
    std::uint32_t feature = 0;
    std::uint32_t node = 0;
    double coeff = 0.0;
};

/*
 * Observations and per-feature chains in the form the inference loop works
 * on: observation n reads the marginals of its terms' (feature, node) slots
 * and owns their pseudo-observation parameters.
 */
class FactorGraph {
public:
    explicit FactorGraph(Likelihood likelihood) : likelihood_(std::move(likelihood)) {}

    const Likelihood& likelihood() const { return likelihood_; }

    std::size_t add_chain(FeatureChain chain);
    std::size_t num_chains() const { return chains_.size(); }
    FeatureChain& chain(std::size_t m) { return chains_[m]; }
    const FeatureChain& chain(std::size_t m) const { return chains_[m]; }

    /// Terms must reference existing chain nodes; throws std::invalid_argument or DataError.
    std::size_t add_observation(std::span<const Term> terms, double y);
    std::size_t num_observations() const { return outcomes_.size(); }
    std::span<const Term> terms(std::size_t n) const {
        return {terms_.data() + offsets_[n], offsets_[n + 1] - offsets_[n]};
    }
    double outcome(std::size_t n) const { return outcomes_[n]; }

    /// Mean-field marginal of the score difference of observation n.
    Marginal score_marginal(std::size_t n) const;

    /// Smooths every chain; returns the summed log-partition.
    double smooth_all(int threads);

private:
    Likelihood likelihood_;
    std::vector<FeatureChain> chains_;
    std::vector<Term> terms_;
    std::vector<std::size_t> offsets_{0};
    std::vector<double> outcomes_;
};

struct PseudoParams {
    double alpha = 0.0;
    double beta = 0.0;
};

struct ParamUpdate {
    PseudoParams params;
    bool clamped = false;
};

/// Removes a pseudo-observation from a marginal; nullopt if the cavity precision is not positive.
std::optional<Marginal> cavity(double mean, double var, double alpha, double beta);

/// EP update from cavity moments; nullopt if 1 + var * coeff^2 * d2 <= 0.
std::optional<ParamUpdate> update_params_ep(double coeff, double cavity_var, double cavity_mean,
                                            double d1, double d2, double learning_rate,
                                            PseudoParams old);

/// Reverse-KL (conjugate-computation) update from posterior moments.
ParamUpdate update_params_kl(double coeff, double mean, double d1, double d2, double learning_rate,
                             PseudoParams old);

/// Runs the alternating pseudo-observation / smoothing loop. Chains keep
/// their current pseudo parameters as the starting point.
FitReport fit(FactorGraph& graph, const FitConfig& config);

/*
 * Log-marginal estimate for the current (smoothed) state: the EP energy for
 * Objective::EP and the evidence lower bound for Objective::ReverseKL.
 * Exact for a Gaussian likelihood when every observation touches one feature.
 */
double log_marginal(const FactorGraph& graph, Objective objective, int threads = 1);

}  // namespace skillgp
