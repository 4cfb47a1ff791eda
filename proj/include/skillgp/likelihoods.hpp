#pragma once

#include <json.hpp>

#include <memory>
#include <vector>

namespace skillgp {

/// Probabilists' Gauss-Hermite rule: E[f(Z)] ~ sum_i w_i f(x_i), Z ~ N(0, 1).
class GaussHermite {
public:
    explicit GaussHermite(int n);

    int size() const { return static_cast<int>(nodes_.size()); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& log_weights() const { return log_weights_; }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> log_weights_;
};

enum class LikelihoodType { Probit, Logit, OrdinalProbit, PoissonExp, Gaussian };

/// Outcome space Y of a likelihood: {-1, +1}, {-1, 0, +1}, {0, 1, 2, ...} or R.
enum class OutcomeSpace { Binary, Ternary, Count, Real };

/*
 * Observation model p(y | d), d = score difference.
 *
 *   Probit          Phi(y d)
 *   Logit           1 / (1 + exp(-y d))
 *   OrdinalProbit   Phi(d - a) for y = +1, Phi(-d - a) for y = -1, the rest for y = 0
 *   PoissonExp      exp(y d - e^d) / y!
 *   Gaussian        N(y | d, noise)
 */
class Likelihood {
public:
    static constexpr int kDefaultQuadratureNodes = 32;
    /// Poisson tilted densities are skewed under wide priors and need more nodes.
    static constexpr int kPoissonQuadratureNodes = 64;

    /// Node count used when none is configured.
    static int default_quadrature_nodes(LikelihoodType type) {
        return type == LikelihoodType::PoissonExp ? kPoissonQuadratureNodes : kDefaultQuadratureNodes;
    }

    static Likelihood probit();
    static Likelihood logit();
    static Likelihood ordinal_probit(double draw_margin);
    static Likelihood poisson_exp();
    static Likelihood gaussian(double obs_noise);

    /// Copy using an n-node Gauss-Hermite rule.
    Likelihood with_quadrature(int nodes) const;

    LikelihoodType type() const { return type_; }
    double draw_margin() const { return draw_margin_; }
    double obs_noise() const { return obs_noise_; }
    const GaussHermite& quadrature() const { return *rule_; }
    OutcomeSpace outcome_space() const;

    bool accepts(double y) const;
    /// Throws DataError when y is not in the outcome space.
    void check_outcome(double y) const;

    /// Learning rate used when none is configured.
    double default_learning_rate() const { return type_ == LikelihoodType::PoissonExp ? 0.8 : 1.0; }

private:
    Likelihood() = default;

    LikelihoodType type_ = LikelihoodType::Probit;
    double draw_margin_ = 0.0;
    double obs_noise_ = 0.0;
    std::shared_ptr<const GaussHermite> rule_;
};

/// log p(y | d). Throws DataError for outcomes outside Y.
double log_pdf(const Likelihood& lik, double y, double d);

/// A one-dimensional Gaussian integral and its first two derivatives in the mean.
struct Derivatives {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/*
 * log Z = log Int p(y | u) N(u | mean, var) du and its mean derivatives.
 * Closed form for probit, ordinal probit and Gaussian; Gauss-Hermite
 * otherwise. d2 <= 0 for every likelihood here (all are log-concave).
 * Throws NumericalError when the integral underflows.
 */
Derivatives ep_derivatives(const Likelihood& lik, double y, double mean, double var);

/// L = Int log p(y | u) N(u | mean, var) du and its mean derivatives.
Derivatives kl_derivatives(const Likelihood& lik, double y, double mean, double var);

/*
 * Predictive distribution of y when d ~ N(mean, var). Discrete spaces list
 * their support and probabilities; counts are truncated once the tail mass
 * drops below 1e-12. Real outcomes are N(mean, var + noise).
 */
struct OutcomeDistribution {
    OutcomeSpace space = OutcomeSpace::Binary;
    std::vector<double> support;
    std::vector<double> probs;
    double mean = 0.0;
    double variance = 0.0;

    /// Probability mass (discrete) or density (real) of y.
    double prob(double y) const;
};

OutcomeDistribution predictive(const Likelihood& lik, double mean, double var);

// Standard normal helpers.
double normal_cdf(double z);
double normal_pdf(double z);
double log_normal_cdf(double z);
/// phi(z) / Phi(z), stable for very negative z.
double inverse_mills(double z);

nlohmann::json likelihood_to_json(const Likelihood& lik);
/// {"likelihood": name, "draw_margin": x, "obs_noise": x}; throws ConfigError.
Likelihood likelihood_from_json(const nlohmann::json& j);

}  // namespace skillgp
