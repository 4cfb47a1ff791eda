#include "skillgp/inference.hpp"

#include "skillgp/errors.hpp"
#include "skillgp/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace skillgp {

void FitConfig::validate() const {
    if (learning_rate && !(*learning_rate > 0.0 && *learning_rate <= 1.0)) {
        throw ConfigError("learning rate must lie in (0, 1]");
    }
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (max_iterations < 0) throw ConfigError("max_iterations must be nonnegative");
    if (threads < 0) throw ConfigError("threads must be nonnegative");
}

std::size_t FactorGraph::add_chain(FeatureChain chain) {
    chains_.push_back(std::move(chain));
    return chains_.size() - 1;
}

std::size_t FactorGraph::add_observation(std::span<const Term> terms, double y) {
    if (terms.empty()) throw std::invalid_argument("observation must touch at least one feature");
    likelihood_.check_outcome(y);
    for (const auto& t : terms) {
        if (t.feature >= chains_.size() || t.node >= chains_[t.feature].size()) {
            throw std::invalid_argument("observation term references a missing chain node");
        }
        if (!std::isfinite(t.coeff)) throw std::invalid_argument("observation coefficient must be finite");
    }
    terms_.insert(terms_.end(), terms.begin(), terms.end());
    offsets_.push_back(terms_.size());
    outcomes_.push_back(y);
    return outcomes_.size() - 1;
}

Marginal FactorGraph::score_marginal(std::size_t n) const {
    Marginal out;
    for (const auto& t : terms(n)) {
        const Marginal m = chains_[t.feature].marginal(t.node);
        out.mean += t.coeff * m.mean;
        out.var += t.coeff * t.coeff * m.var;
    }
    return out;
}

double FactorGraph::smooth_all(int threads) {
    parallel_for(chains_.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t m = begin; m < end; ++m) chains_[m].smooth();
    });
    double total = 0.0;
    for (const auto& c : chains_) total += c.last_smooth().log_partition;
    return total;
}

// ---------------------------------------------------------------------------

std::optional<Marginal> cavity(double mean, double var, double alpha, double beta) {
    if (var <= 0.0) {
        // Pinned marginal (e.g. a Wiener process at its origin): nothing to remove.
        return Marginal{mean, 0.0};
    }
    const double precision = 1.0 / var - beta;
    if (!(precision > 0.0)) return std::nullopt;
    const double cav_var = 1.0 / precision;
    return Marginal{cav_var * (mean / var - alpha), cav_var};
}

namespace {

ParamUpdate damp(PseudoParams old, double alpha, double beta, double lr) {
    ParamUpdate out;
    out.params.alpha = (1.0 - lr) * old.alpha + lr * alpha;
    out.params.beta = (1.0 - lr) * old.beta + lr * beta;
    if (out.params.beta < 0.0) {
        out.params.beta = 0.0;
        out.clamped = true;
    }
    return out;
}

}  // namespace

std::optional<ParamUpdate> update_params_ep(double coeff, double cavity_var, double cavity_mean,
                                            double d1, double d2, double learning_rate,
                                            PseudoParams old) {
    const double x2 = coeff * coeff;
    const double denom = 1.0 + cavity_var * x2 * d2;
    if (!(denom > 0.0)) return std::nullopt;
    return damp(old, (coeff * d1 - cavity_mean * x2 * d2) / denom, -x2 * d2 / denom, learning_rate);
}

ParamUpdate update_params_kl(double coeff, double mean, double d1, double d2, double learning_rate,
                             PseudoParams old) {
    const double x2 = coeff * coeff;
    return damp(old, coeff * d1 - mean * x2 * d2, -x2 * d2, learning_rate);
}

namespace {

// log Int N(s | mean, var) exp(alpha s - beta s^2 / 2) ds
double site_log_integral(double mean, double var, double alpha, double beta) {
    const double denom = 1.0 + beta * var;
    return -0.5 * std::log(denom) +
           (alpha * mean - 0.5 * beta * mean * mean + 0.5 * alpha * alpha * var) / denom;
}

struct ObservationStats {
    std::uint32_t guarded = 0;
    std::uint32_t clamped = 0;
    double max_change = 0.0;
};

class Updater {
public:
    Updater(FactorGraph& graph, Objective objective, double lr)
        : graph_(graph), objective_(objective), lr_(lr) {}

    ObservationStats operator()(std::size_t n) const {
        return objective_ == Objective::EP ? update_ep(n) : update_kl(n);
    }

private:
    void write(const Term& t, const ParamUpdate& u, ObservationStats& stats) const {
        auto& chain = graph_.chain(t.feature);
        stats.max_change = std::max({stats.max_change, std::abs(u.params.alpha - chain.alpha(t.node)),
                                     std::abs(u.params.beta - chain.beta(t.node))});
        stats.clamped += u.clamped ? 1 : 0;
        chain.set_pseudo(t.node, u.params.alpha, u.params.beta);
    }

    ObservationStats update_ep(std::size_t n) const {
        ObservationStats stats;
        const auto terms = graph_.terms(n);
        double mean = 0.0;
        double var = 0.0;
        for (const auto& t : terms) {
            const auto& chain = graph_.chain(t.feature);
            const Marginal m = chain.marginal(t.node);
            const auto cav = cavity(m.mean, m.var, chain.alpha(t.node), chain.beta(t.node));
            if (!cav) {
                stats.guarded = static_cast<std::uint32_t>(terms.size());
                return stats;
            }
            mean += t.coeff * cav->mean;
            var += t.coeff * t.coeff * cav->var;
        }
        Derivatives d;
        try {
            d = ep_derivatives(graph_.likelihood(), graph_.outcome(n), mean, var);
        } catch (const NumericalError&) {
            stats.guarded = static_cast<std::uint32_t>(terms.size());
            return stats;
        }
        for (const auto& t : terms) {
            const auto& chain = graph_.chain(t.feature);
            const Marginal m = chain.marginal(t.node);
            const PseudoParams old{chain.alpha(t.node), chain.beta(t.node)};
            const auto cav = cavity(m.mean, m.var, old.alpha, old.beta);
            const auto u = update_params_ep(t.coeff, cav->var, cav->mean, d.d1, d.d2, lr_, old);
            if (!u) {
                ++stats.guarded;
                continue;
            }
            write(t, *u, stats);
        }
        return stats;
    }

    ObservationStats update_kl(std::size_t n) const {
        ObservationStats stats;
        const auto terms = graph_.terms(n);
        const Marginal joint = graph_.score_marginal(n);
        Derivatives d;
        try {
            d = kl_derivatives(graph_.likelihood(), graph_.outcome(n), joint.mean, joint.var);
        } catch (const NumericalError&) {
            stats.guarded = static_cast<std::uint32_t>(terms.size());
            return stats;
        }
        for (const auto& t : terms) {
            const auto& chain = graph_.chain(t.feature);
            const PseudoParams old{chain.alpha(t.node), chain.beta(t.node)};
            write(t, update_params_kl(t.coeff, chain.marginal(t.node).mean, d.d1, d.d2, lr_, old), stats);
        }
        return stats;
    }

    FactorGraph& graph_;
    Objective objective_;
    double lr_;
};

double observation_term(const FactorGraph& graph, std::size_t n, Objective objective) {
    const auto terms = graph.terms(n);
    const auto& lik = graph.likelihood();
    const double y = graph.outcome(n);
    if (objective == Objective::ReverseKL) {
        const Marginal joint = graph.score_marginal(n);
        double value = kl_derivatives(lik, y, joint.mean, joint.var).value;
        for (const auto& t : terms) {
            const auto& chain = graph.chain(t.feature);
            const Marginal m = chain.marginal(t.node);
            value -= chain.alpha(t.node) * m.mean - 0.5 * chain.beta(t.node) * (m.mean * m.mean + m.var);
        }
        return value;
    }
    double mean = 0.0;
    double var = 0.0;
    double sites = 0.0;
    for (const auto& t : terms) {
        const auto& chain = graph.chain(t.feature);
        const Marginal m = chain.marginal(t.node);
        const double a = chain.alpha(t.node);
        const double b = chain.beta(t.node);
        const auto cav = cavity(m.mean, m.var, a, b);
        if (!cav) return 0.0;
        mean += t.coeff * cav->mean;
        var += t.coeff * t.coeff * cav->var;
        sites += site_log_integral(cav->mean, cav->var, a, b);
    }
    return ep_derivatives(lik, y, mean, var).value - sites;
}

}  // namespace

double log_marginal(const FactorGraph& graph, Objective objective, int threads) {
    const std::size_t n_obs = graph.num_observations();
    std::vector<double> contrib(n_obs, 0.0);
    parallel_for(n_obs, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n) {
            try {
                contrib[n] = observation_term(graph, n, objective);
            } catch (const NumericalError&) {
                contrib[n] = 0.0;
            }
        }
    });
    double total = 0.0;
    for (std::size_t m = 0; m < graph.num_chains(); ++m) total += graph.chain(m).last_smooth().log_partition;
    for (double c : contrib) total += c;
    return total;
}

FitReport fit(FactorGraph& graph, const FitConfig& config) {
    config.validate();
    const double lr = config.learning_rate.value_or(graph.likelihood().default_learning_rate());
    const int threads = resolve_threads(config.threads);
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n_obs = graph.num_observations();

    FitReport report;
    graph.smooth_all(threads);
    double previous = -std::numeric_limits<double>::infinity();

    const Updater updater(graph, config.objective, lr);
    std::vector<ObservationStats> stats(n_obs);
    for (int it = 1; it <= config.max_iterations; ++it) {
        parallel_for(n_obs, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t n = begin; n < end; ++n) stats[n] = updater(n);
        });
        std::size_t guarded_obs = 0;
        double max_change = 0.0;
        for (const auto& s : stats) {
            report.guarded_updates += s.guarded;
            report.clamped_precisions += s.clamped;
            guarded_obs += s.guarded > 0 ? 1 : 0;
            max_change = std::max(max_change, s.max_change);
        }
        graph.smooth_all(threads);
        const double lm = log_marginal(graph, config.objective, threads);
        if (!std::isfinite(lm)) {
            throw NumericalError("log-marginal estimate is not finite at iteration " + std::to_string(it));
        }
        report.iterations = it;
        report.log_marginals.push_back(lm);
        if (config.progress) {
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            config.progress({it, lm, elapsed.count()});
        }
        if (n_obs > 0 && guarded_obs == n_obs) {
            report.stalled = true;
            break;
        }
        const bool done = config.metric == ConvergenceMetric::LogMarginal
                              ? std::abs(lm - previous) < config.tolerance
                              : max_change < config.tolerance;
        previous = lm;
        if (done) {
            report.converged = true;
            break;
        }
    }
    return report;
}

}  // namespace skillgp
