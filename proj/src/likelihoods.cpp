#include "skillgp/likelihoods.hpp"

#include "skillgp/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

namespace skillgp {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// log p(y | u) with its first and second derivatives in u.
struct Pointwise {
    double logp;
    double g;
    double h;
};

double softplus(double x) {
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_normal_pdf(double z) { return -kLogSqrt2Pi - 0.5 * z * z; }

// log(Phi(b) - Phi(a)) for a < b, oriented so that b <= |b| tails stay accurate.
double log_normal_interval(double a, double b) {
    if (a >= 0.0) {  // both in the upper tail: Phi(-a) - Phi(-b)
        std::swap(a, b);
        a = -a;
        b = -b;
    }
    const double lb = log_normal_cdf(b);
    const double la = log_normal_cdf(a);
    return lb + std::log1p(-std::exp(la - lb));
}

// Tie row of the ordinal probit: p(0 | u) = Phi(u + m) - Phi(u - m).
Pointwise ordinal_tie(double u, double margin) {
    const double logp = log_normal_interval(u - margin, u + margin);
    const double hi = std::exp(log_normal_pdf(u + margin) - logp);
    const double lo = std::exp(log_normal_pdf(u - margin) - logp);
    const double g = hi - lo;
    const double h = -(u + margin) * hi + (u - margin) * lo - g * g;
    return {logp, g, h};
}

// log Phi(s z) for s = +-1, in u = z.
Pointwise probit_side(double u, double sign, double margin) {
    const double z = sign * u - margin;
    const double r = inverse_mills(z);
    return {log_normal_cdf(z), sign * r, -r * (z + r)};
}

Pointwise pointwise(const Likelihood& lik, double y, double u) {
    switch (lik.type()) {
        case LikelihoodType::Probit:
            return probit_side(u, y, 0.0);
        case LikelihoodType::Logit: {
            const double z = y * u;
            const double sp = sigmoid(-z);
            return {-softplus(-z), y * sp, -sp * sigmoid(z)};
        }
        case LikelihoodType::OrdinalProbit:
            if (y == 0.0) return ordinal_tie(u, lik.draw_margin());
            return probit_side(u, y, lik.draw_margin());
        case LikelihoodType::PoissonExp: {
            const double rate = std::exp(u);
            return {y * u - rate - std::lgamma(y + 1.0), y - rate, -rate};
        }
        case LikelihoodType::Gaussian: {
            const double v = lik.obs_noise();
            const double r = y - u;
            return {-0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * r * r / v, r / v, -1.0 / v};
        }
    }
    return {0.0, 0.0, 0.0};
}

void check_moments(double mean, double var) {
    if (!std::isfinite(mean) || !(var >= 0.0) || !std::isfinite(var)) {
        throw NumericalError("Gaussian integral needs a finite mean and a nonnegative variance");
    }
}

// Mode and curvature scale of the tilted density p(y | u) N(u | mean, var),
// found by safeguarded Newton steps (the log-density is concave).
std::pair<double, double> tilted_mode(const Likelihood& lik, double y, double mean, double var) {
    const auto objective = [&](double u) { return pointwise(lik, y, u).logp - 0.5 * (u - mean) * (u - mean) / var; };
    double u = mean;
    double f = objective(u);
    const double max_step = 4.0 * std::sqrt(var) + 1.0;
    for (int it = 0; it < 100; ++it) {
        const Pointwise p = pointwise(lik, y, u);
        const double grad = p.g - (u - mean) / var;
        const double hess = std::min(p.h, 0.0) - 1.0 / var;
        double step = std::clamp(-grad / hess, -max_step, max_step);
        double next = u + step;
        double fn = objective(next);
        for (int halve = 0; halve < 60 && !(fn >= f); ++halve) {
            step *= 0.5;
            next = u + step;
            fn = objective(next);
        }
        if (!(fn >= f)) break;
        u = next;
        f = fn;
        if (std::abs(step) <= 1e-12 * (1.0 + std::abs(u))) break;
    }
    const double curvature = std::min(pointwise(lik, y, u).h, 0.0) - 1.0 / var;
    return {u, 1.0 / std::sqrt(-curvature)};
}

/*
 * log Z by Gauss-Hermite centered on the tilted density's mode and scaled by
 * its curvature. A rule centered on N(mean, var) misses a likelihood that is
 * much narrower than the prior (e.g. Poisson counts under a wide prior).
 * Derivatives use d1 = E_r[g], d2 = E_r[h] + Var_r[g] under the tilted r.
 */
Derivatives ep_by_quadrature(const Likelihood& lik, double y, double mean, double var) {
    if (var <= 0.0) {
        const Pointwise p = pointwise(lik, y, mean);
        return {p.logp, p.g, std::min(p.h, 0.0)};
    }
    const auto& rule = lik.quadrature();
    const auto [center, scale] = tilted_mode(lik, y, mean, var);
    const int n = rule.size();
    std::vector<Pointwise> pts(n);
    std::vector<double> logr(n);
    double peak = -std::numeric_limits<double>::infinity();
    const double log_ratio = std::log(scale) - 0.5 * std::log(var);
    for (int i = 0; i < n; ++i) {
        const double x = rule.nodes()[i];
        const double u = center + scale * x;
        pts[i] = pointwise(lik, y, u);
        logr[i] = rule.log_weights()[i] + pts[i].logp - 0.5 * (u - mean) * (u - mean) / var + 0.5 * x * x + log_ratio;
        peak = std::max(peak, logr[i]);
    }
    if (!std::isfinite(peak)) {
        throw NumericalError("log-partition quadrature is not finite");
    }
    double total = 0.0;
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) {
        r[i] = std::exp(logr[i] - peak);
        total += r[i];
    }
    Derivatives out;
    out.value = peak + std::log(total);
    for (int i = 0; i < n; ++i) {
        r[i] /= total;
        out.d1 += r[i] * pts[i].g;
    }
    double spread = 0.0;
    double curv = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dev = pts[i].g - out.d1;
        spread += r[i] * dev * dev;
        curv += r[i] * pts[i].h;
    }
    out.d2 = std::min(curv + spread, 0.0);
    if (!std::isfinite(out.value) || !std::isfinite(out.d1) || !std::isfinite(out.d2)) {
        throw NumericalError("log-partition quadrature is not finite");
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

double normal_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }

double normal_pdf(double z) { return std::exp(log_normal_pdf(z)); }

double log_normal_cdf(double z) {
    if (z > 5.0) return std::log1p(-normal_cdf(-z));
    if (z > -30.0) return std::log(normal_cdf(z));
    // Asymptotic expansion of the Mills ratio.
    const double z2 = 1.0 / (z * z);
    const double series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2 * (1.0 - 9.0 * z2))));
    return log_normal_pdf(z) - std::log(-z) + std::log(series);
}

double inverse_mills(double z) {
    if (z > -30.0) return normal_pdf(z) / normal_cdf(z);
    const double z2 = 1.0 / (z * z);
    const double series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2 * (1.0 - 9.0 * z2))));
    return -z / series;
}

GaussHermite::GaussHermite(int n) {
    if (n < 1) throw ConfigError("quadrature needs at least one node");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(std::max(n - 1, 0));
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
    nodes_.resize(n);
    weights_.resize(n);
    log_weights_.resize(n);
    if (n == 1) {
        nodes_[0] = 0.0;
        weights_[0] = 1.0;
        log_weights_[0] = 0.0;
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    for (int i = 0; i < n; ++i) nodes_[i] = eig.eigenvalues()(i);
    // Polish the nodes by Newton steps on He_n and take the weights from
    // w_i = n! / (n He_{n-1}(x_i))^2, which keeps full relative accuracy in
    // the far tails where eigenvector entries are only absolutely accurate.
    const auto hermite = [n](double x) {
        // Returns (He_n(x), He_{n-1}(x)) by the three-term recurrence.
        double prev = 1.0;
        double cur = x;
        for (int k = 1; k < n; ++k) {
            const double next = x * cur - k * prev;
            prev = cur;
            cur = next;
        }
        return std::pair<double, double>{cur, prev};
    };
    for (int i = 0; i < n; ++i) {
        double x = nodes_[i];
        for (int it = 0; it < 3; ++it) {
            const auto [hn, hn1] = hermite(x);
            x -= hn / (n * hn1);
        }
        nodes_[i] = x;
    }
    // Symmetrize: the rule is exact for odd moments.
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double x = 0.5 * (nodes_[j] - nodes_[i]);
        nodes_[i] = -x;
        nodes_[j] = x;
    }
    if (n % 2 == 1) nodes_[n / 2] = 0.0;
    const double log_nfact = std::lgamma(n + 1.0);
    for (int i = 0; i < n; ++i) {
        const double hn1 = hermite(nodes_[i]).second;
        log_weights_[i] = log_nfact - 2.0 * std::log(static_cast<double>(n)) - 2.0 * std::log(std::abs(hn1));
    }
    for (int i = 0; i < n / 2; ++i) {
        const double w = 0.5 * (log_weights_[i] + log_weights_[n - 1 - i]);
        log_weights_[i] = log_weights_[n - 1 - i] = w;
    }
    const double peak = *std::max_element(log_weights_.begin(), log_weights_.end());
    double total = 0.0;
    for (double lw : log_weights_) total += std::exp(lw - peak);
    const double log_total = peak + std::log(total);
    for (int i = 0; i < n; ++i) {
        log_weights_[i] -= log_total;
        weights_[i] = std::exp(log_weights_[i]);
    }
}

namespace {

std::shared_ptr<const GaussHermite> default_rule(LikelihoodType type = LikelihoodType::Probit) {
    static const auto rule = std::make_shared<const GaussHermite>(Likelihood::kDefaultQuadratureNodes);
    static const auto poisson = std::make_shared<const GaussHermite>(Likelihood::kPoissonQuadratureNodes);
    return Likelihood::default_quadrature_nodes(type) == Likelihood::kPoissonQuadratureNodes ? poisson : rule;
}

}  // namespace

Likelihood Likelihood::probit() {
    Likelihood l;
    l.type_ = LikelihoodType::Probit;
    l.rule_ = default_rule();
    return l;
}

Likelihood Likelihood::logit() {
    Likelihood l;
    l.type_ = LikelihoodType::Logit;
    l.rule_ = default_rule();
    return l;
}

Likelihood Likelihood::ordinal_probit(double draw_margin) {
    if (!(draw_margin > 0.0) || !std::isfinite(draw_margin)) {
        throw ConfigError("draw_margin must be finite and strictly positive");
    }
    Likelihood l;
    l.type_ = LikelihoodType::OrdinalProbit;
    l.draw_margin_ = draw_margin;
    l.rule_ = default_rule();
    return l;
}

Likelihood Likelihood::poisson_exp() {
    Likelihood l;
    l.type_ = LikelihoodType::PoissonExp;
    l.rule_ = default_rule(LikelihoodType::PoissonExp);
    return l;
}

Likelihood Likelihood::gaussian(double obs_noise) {
    if (!(obs_noise > 0.0) || !std::isfinite(obs_noise)) {
        throw ConfigError("obs_noise must be finite and strictly positive");
    }
    Likelihood l;
    l.type_ = LikelihoodType::Gaussian;
    l.obs_noise_ = obs_noise;
    l.rule_ = default_rule();
    return l;
}

Likelihood Likelihood::with_quadrature(int nodes) const {
    Likelihood l = *this;
    l.rule_ = nodes == default_quadrature_nodes(type_) ? default_rule(type_)
                                                       : std::make_shared<const GaussHermite>(nodes);
    return l;
}

OutcomeSpace Likelihood::outcome_space() const {
    switch (type_) {
        case LikelihoodType::Probit:
        case LikelihoodType::Logit:
            return OutcomeSpace::Binary;
        case LikelihoodType::OrdinalProbit:
            return OutcomeSpace::Ternary;
        case LikelihoodType::PoissonExp:
            return OutcomeSpace::Count;
        case LikelihoodType::Gaussian:
            return OutcomeSpace::Real;
    }
    return OutcomeSpace::Real;
}

bool Likelihood::accepts(double y) const {
    switch (outcome_space()) {
        case OutcomeSpace::Binary:
            return y == 1.0 || y == -1.0;
        case OutcomeSpace::Ternary:
            return y == 1.0 || y == -1.0 || y == 0.0;
        case OutcomeSpace::Count:
            return y >= 0.0 && std::isfinite(y) && y == std::floor(y);
        case OutcomeSpace::Real:
            return std::isfinite(y);
    }
    return false;
}

void Likelihood::check_outcome(double y) const {
    if (!accepts(y)) {
        throw DataError("outcome " + std::to_string(y) + " is outside the likelihood's outcome space");
    }
}

double log_pdf(const Likelihood& lik, double y, double d) {
    lik.check_outcome(y);
    return pointwise(lik, y, d).logp;
}

Derivatives ep_derivatives(const Likelihood& lik, double y, double mean, double var) {
    lik.check_outcome(y);
    check_moments(mean, var);
    Derivatives out;
    switch (lik.type()) {
        case LikelihoodType::Probit:
        case LikelihoodType::OrdinalProbit: {
            // Convolving Phi with N(mean, var) rescales by s = sqrt(1 + var).
            const double s = std::sqrt(1.0 + var);
            const double margin = lik.draw_margin() / s;
            const Pointwise p = (lik.type() == LikelihoodType::OrdinalProbit && y == 0.0)
                                    ? ordinal_tie(mean / s, margin)
                                    : probit_side(mean / s, y, margin);
            out = {p.logp, p.g / s, std::min(p.h / (s * s), 0.0)};
            break;
        }
        case LikelihoodType::Gaussian: {
            const double v = var + lik.obs_noise();
            const double r = y - mean;
            out = {-0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * r * r / v, r / v, -1.0 / v};
            break;
        }
        case LikelihoodType::Logit:
        case LikelihoodType::PoissonExp:
            return ep_by_quadrature(lik, y, mean, var);
    }
    if (!std::isfinite(out.value) || !std::isfinite(out.d1) || !std::isfinite(out.d2)) {
        throw NumericalError("log-partition is not finite");
    }
    return out;
}

Derivatives kl_derivatives(const Likelihood& lik, double y, double mean, double var) {
    lik.check_outcome(y);
    check_moments(mean, var);
    if (lik.type() == LikelihoodType::Gaussian) {
        const double v = lik.obs_noise();
        const double r = y - mean;
        return {-0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * (r * r + var) / v, r / v, -1.0 / v};
    }
    if (lik.type() == LikelihoodType::PoissonExp) {
        // E[exp(u)] = exp(mean + var / 2).
        const double rate = std::exp(mean + 0.5 * var);
        const Derivatives out{y * mean - rate - std::lgamma(y + 1.0), y - rate, -rate};
        if (!std::isfinite(out.value)) throw NumericalError("expected log-likelihood is not finite");
        return out;
    }
    const auto& rule = lik.quadrature();
    const double sd = std::sqrt(var);
    Derivatives out;
    for (int i = 0; i < rule.size(); ++i) {
        const Pointwise p = pointwise(lik, y, mean + sd * rule.nodes()[i]);
        const double w = rule.weights()[i];
        out.value += w * p.logp;
        out.d1 += w * p.g;
        out.d2 += w * p.h;
    }
    out.d2 = std::min(out.d2, 0.0);
    if (!std::isfinite(out.value) || !std::isfinite(out.d1) || !std::isfinite(out.d2)) {
        throw NumericalError("expected log-likelihood quadrature is not finite");
    }
    return out;
}

// ---------------------------------------------------------------------------

double OutcomeDistribution::prob(double y) const {
    if (space == OutcomeSpace::Real) {
        return std::exp(log_normal_pdf((y - mean) / std::sqrt(variance))) / std::sqrt(variance);
    }
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (support[i] == y) return probs[i];
    }
    return 0.0;
}

OutcomeDistribution predictive(const Likelihood& lik, double mean, double var) {
    check_moments(mean, var);
    OutcomeDistribution out;
    out.space = lik.outcome_space();
    switch (lik.type()) {
        case LikelihoodType::Probit: {
            const double s = std::sqrt(1.0 + var);
            const double win = normal_cdf(mean / s);
            out.support = {-1.0, 1.0};
            out.probs = {normal_cdf(-mean / s), win};
            break;
        }
        case LikelihoodType::OrdinalProbit: {
            const double s = std::sqrt(1.0 + var);
            const double m = mean / s;
            const double a = lik.draw_margin() / s;
            const double win = normal_cdf(m - a);
            const double loss = normal_cdf(-m - a);
            const double tie = std::exp(log_normal_interval(m - a, m + a));
            out.support = {-1.0, 0.0, 1.0};
            out.probs = {loss, tie, win};
            break;
        }
        case LikelihoodType::Logit: {
            const auto& rule = lik.quadrature();
            const double sd = std::sqrt(var);
            double win = 0.0;
            double loss = 0.0;
            for (int i = 0; i < rule.size(); ++i) {
                const double u = mean + sd * rule.nodes()[i];
                win += rule.weights()[i] * sigmoid(u);
                loss += rule.weights()[i] * sigmoid(-u);
            }
            out.support = {-1.0, 1.0};
            out.probs = {loss, win};
            break;
        }
        case LikelihoodType::PoissonExp: {
            double cumulative = 0.0;
            double expected = 0.0;
            double second = 0.0;
            for (int y = 0; y < 100000; ++y) {
                const double p = std::exp(ep_by_quadrature(lik, y, mean, var).value);
                out.support.push_back(y);
                out.probs.push_back(p);
                cumulative += p;
                expected += y * p;
                second += static_cast<double>(y) * y * p;
                if ((1.0 - cumulative < 1e-12 || p < 1e-17) && static_cast<double>(y) > expected / cumulative) break;
            }
            out.mean = expected;
            out.variance = second - expected * expected;
            return out;
        }
        case LikelihoodType::Gaussian:
            out.mean = mean;
            out.variance = var + lik.obs_noise();
            return out;
    }
    for (std::size_t i = 0; i < out.support.size(); ++i) {
        out.mean += out.support[i] * out.probs[i];
        out.variance += out.support[i] * out.support[i] * out.probs[i];
    }
    out.variance -= out.mean * out.mean;
    return out;
}

// ---------------------------------------------------------------------------

nlohmann::json likelihood_to_json(const Likelihood& lik) {
    nlohmann::json j;
    switch (lik.type()) {
        case LikelihoodType::Probit: j["likelihood"] = "probit"; break;
        case LikelihoodType::Logit: j["likelihood"] = "logit"; break;
        case LikelihoodType::OrdinalProbit:
            j["likelihood"] = "ordinal_probit";
            j["draw_margin"] = lik.draw_margin();
            break;
        case LikelihoodType::PoissonExp: j["likelihood"] = "poisson_exp"; break;
        case LikelihoodType::Gaussian:
            j["likelihood"] = "gaussian";
            j["obs_noise"] = lik.obs_noise();
            break;
    }
    if (lik.quadrature().size() != Likelihood::default_quadrature_nodes(lik.type())) {
        j["quadrature_nodes"] = lik.quadrature().size();
    }
    return j;
}

Likelihood likelihood_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("likelihood description must be a JSON object");
    if (!j.contains("likelihood") || !j.at("likelihood").is_string()) {
        throw ConfigError("likelihood requires a string field 'likelihood'");
    }
    const auto name = j.at("likelihood").get<std::string>();
    std::set<std::string> allowed{"likelihood", "quadrature_nodes"};
    if (name == "ordinal_probit") allowed.insert("draw_margin");
    if (name == "gaussian") allowed.insert("obs_noise");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown or inapplicable field '" + key + "' in likelihood '" + name + "'");
        }
    }
    auto number = [&](const char* field) {
        if (!j.contains(field) || !j.at(field).is_number()) {
            throw ConfigError("likelihood '" + name + "' requires a numeric field '" + field + "'");
        }
        return j.at(field).get<double>();
    };
    Likelihood lik = Likelihood::probit();
    if (name == "probit") lik = Likelihood::probit();
    else if (name == "logit") lik = Likelihood::logit();
    else if (name == "ordinal_probit") lik = Likelihood::ordinal_probit(number("draw_margin"));
    else if (name == "poisson_exp") lik = Likelihood::poisson_exp();
    else if (name == "gaussian") lik = Likelihood::gaussian(number("obs_noise"));
    else throw ConfigError("unknown likelihood '" + name + "'");
    if (j.contains("quadrature_nodes")) {
        if (!j.at("quadrature_nodes").is_number_integer()) {
            throw ConfigError("likelihood field 'quadrature_nodes' must be an integer");
        }
        lik = lik.with_quadrature(j.at("quadrature_nodes").get<int>());
    }
    return lik;
}

}  // namespace skillgp
