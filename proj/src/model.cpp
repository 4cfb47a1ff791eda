#include "skillgp/model.hpp"

#include "skillgp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace skillgp {

Coefficients canonical(const Coefficients& coeffs) {
    std::map<std::string, double> merged;
    for (const auto& [id, c] : coeffs) merged[id] += c;
    Coefficients out;
    for (const auto& [id, c] : merged) {
        if (c != 0.0) out.emplace_back(id, c);
    }
    return out;
}

std::pair<std::string, double> interaction_feature(const std::string& a, const std::string& b) {
    if (a < b) return {a + "|" + b, 1.0};
    return {b + "|" + a, -1.0};
}

Model::Model(Likelihood likelihood, double epoch) : epoch_(epoch), graph_(std::move(likelihood)) {
    if (!std::isfinite(epoch)) throw ConfigError("model epoch must be finite");
}

void Model::add_feature(const std::string& id, const Kernel& kernel) {
    if (index_.contains(id)) throw ConfigError("duplicate feature id '" + id + "'");
    auto spec = std::make_shared<const StateSpaceSpec>(to_state_space(kernel, epoch_));
    const auto idx = static_cast<std::uint32_t>(graph_.add_chain(FeatureChain(std::move(spec), {})));
    index_.emplace(id, idx);
    ids_.push_back(id);
    kernels_.push_back(kernel);
}

std::uint32_t Model::feature_index(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw DataError("unknown feature '" + id + "'");
    return it->second;
}

const Kernel& Model::kernel(const std::string& id) const { return kernels_[feature_index(id)]; }

const FeatureChain& Model::chain(const std::string& id) const { return graph_.chain(feature_index(id)); }

void Model::observe(const Coefficients& coeffs, double time, double outcome) {
    if (!std::isfinite(time)) throw DataError("observation time must be finite");
    if (!obs_times_.empty() && time < obs_times_.back()) {
        throw DataError("observations must be added in chronological order");
    }
    likelihood().check_outcome(outcome);
    const Coefficients x = canonical(coeffs);
    if (x.empty()) throw DataError("observation coefficients cancel out entirely");
    std::vector<Term> terms;
    terms.reserve(x.size());
    for (const auto& [id, c] : x) terms.push_back({feature_index(id), 0, c});
    for (auto& t : terms) {
        t.node = static_cast<std::uint32_t>(graph_.chain(t.feature).push_back(time));
    }
    graph_.add_observation(terms, outcome);
    obs_times_.push_back(time);
    fitted_ = false;
}

Model Model::from_observations(Likelihood likelihood, double epoch,
                               const std::vector<std::pair<std::string, Kernel>>& features,
                               std::vector<Input> inputs) {
    Model model(std::move(likelihood), epoch);
    for (const auto& [id, k] : features) model.add_feature(id, k);
    std::stable_sort(inputs.begin(), inputs.end(),
                     [](const Input& a, const Input& b) { return a.time < b.time; });
    for (const auto& in : inputs) model.observe(in.coeffs, in.time, in.outcome);
    return model;
}

FitReport Model::fit(const FitConfig& config) {
    FitReport report = skillgp::fit(graph_, config);
    fitted_ = true;
    objective_ = config.objective;
    return report;
}

double Model::log_marginal() const {
    if (!fitted_) throw std::logic_error("log_marginal requires a fitted model");
    return skillgp::log_marginal(graph_, objective_);
}

Marginal Model::score_marginal(const Coefficients& coeffs, double t) const {
    Marginal out;
    for (const auto& [id, c] : canonical(coeffs)) {
        const Marginal m = graph_.chain(feature_index(id)).posterior_at(t);
        out.mean += c * m.mean;
        out.var += c * c * m.var;
    }
    return out;
}

OutcomeDistribution Model::predict(const Coefficients& coeffs, double t) const {
    const Marginal d = score_marginal(coeffs, t);
    return predictive(likelihood(), d.mean, d.var);
}

std::vector<TrajectoryPoint> Model::trajectory(const std::string& id, std::span<const double> grid) const {
    const auto& c = graph_.chain(feature_index(id));
    std::vector<TrajectoryPoint> out;
    out.reserve(grid.size());
    for (double t : grid) {
        const Marginal m = c.posterior_at(t);
        out.push_back({t, m.mean, std::sqrt(m.var)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Snapshot

nlohmann::json Model::to_json() const {
    nlohmann::json j;
    j["format_version"] = kSnapshotFormatVersion;
    j["likelihood"] = likelihood_to_json(likelihood());
    j["epoch"] = epoch_;
    j["fitted"] = fitted_;
    j["objective"] = objective_ == Objective::EP ? "ep" : "kl";
    auto features = nlohmann::json::array();
    for (std::size_t m = 0; m < ids_.size(); ++m) {
        const auto& c = graph_.chain(m);
        std::vector<double> alpha(c.size()), beta(c.size());
        for (std::size_t n = 0; n < c.size(); ++n) {
            alpha[n] = c.alpha(n);
            beta[n] = c.beta(n);
        }
        features.push_back({{"id", ids_[m]},
                            {"kernel", kernel_to_json(kernels_[m])},
                            {"times", c.times()},
                            {"alpha", alpha},
                            {"beta", beta}});
    }
    j["features"] = std::move(features);
    auto observations = nlohmann::json::array();
    for (std::size_t n = 0; n < graph_.num_observations(); ++n) {
        auto coeffs = nlohmann::json::array();
        for (const auto& t : graph_.terms(n)) coeffs.push_back({t.feature, t.coeff});
        observations.push_back({{"t", obs_times_[n]}, {"y", graph_.outcome(n)}, {"coeffs", coeffs}});
    }
    j["observations"] = std::move(observations);
    return j;
}

Model Model::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kSnapshotFormatVersion) {
            throw ConfigError("unsupported snapshot format_version");
        }
        Model model(likelihood_from_json(j.at("likelihood")), j.at("epoch").get<double>());
        const auto& features = j.at("features");
        for (const auto& f : features) {
            model.add_feature(f.at("id").get<std::string>(), kernel_from_json(f.at("kernel")));
        }
        for (const auto& o : j.at("observations")) {
            Coefficients coeffs;
            for (const auto& c : o.at("coeffs")) {
                const auto idx = c.at(0).get<std::size_t>();
                if (idx >= model.ids_.size()) throw ConfigError("snapshot observation references a missing feature");
                coeffs.emplace_back(model.ids_[idx], c.at(1).get<double>());
            }
            model.observe(coeffs, o.at("t").get<double>(), o.at("y").get<double>());
        }
        for (std::size_t m = 0; m < features.size(); ++m) {
            auto& c = model.graph_.chain(m);
            const auto times = features[m].at("times").get<std::vector<double>>();
            const auto alpha = features[m].at("alpha").get<std::vector<double>>();
            const auto beta = features[m].at("beta").get<std::vector<double>>();
            if (times != c.times() || alpha.size() != c.size() || beta.size() != c.size()) {
                throw ConfigError("snapshot chain for feature '" + model.ids_[m] +
                                  "' does not match its observations");
            }
            for (std::size_t n = 0; n < c.size(); ++n) c.set_pseudo(n, alpha[n], beta[n]);
        }
        model.graph_.smooth_all(1);
        model.fitted_ = j.at("fitted").get<bool>();
        model.objective_ = j.at("objective").get<std::string>() == "kl" ? Objective::ReverseKL : Objective::EP;
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed snapshot: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Model specification

std::optional<Kernel> ModelSpec::kernel_for(const std::string& id) const {
    for (const auto& [fid, k] : features) {
        if (fid == id) return k;
    }
    return default_kernel;
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("model specification must be a JSON object");
    static const std::set<std::string> allowed{"likelihood",     "features",         "epoch",
                                               "default_kernel", "advantage_kernel", "interaction_kernel"};
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) throw ConfigError("unknown field '" + key + "' in model specification");
    }
    ModelSpec spec;
    if (!j.contains("likelihood")) throw ConfigError("model specification requires field 'likelihood'");
    spec.likelihood = likelihood_from_json(j.at("likelihood"));
    if (j.contains("features")) {
        if (!j.at("features").is_array()) throw ConfigError("model field 'features' must be an array");
        std::set<std::string> seen;
        for (const auto& f : j.at("features")) {
            if (!f.is_object() || !f.contains("id") || !f.at("id").is_string() || !f.contains("kernel")) {
                throw ConfigError("each entry of 'features' needs a string 'id' and a 'kernel'");
            }
            for (const auto& [key, _] : f.items()) {
                if (key != "id" && key != "kernel") throw ConfigError("unknown field '" + key + "' in feature entry");
            }
            const auto id = f.at("id").get<std::string>();
            if (!seen.insert(id).second) throw ConfigError("duplicate feature id '" + id + "'");
            spec.features.emplace_back(id, kernel_from_json(f.at("kernel")));
        }
    }
    if (j.contains("epoch")) {
        if (!j.at("epoch").is_number()) throw ConfigError("model field 'epoch' must be a number");
        spec.epoch = j.at("epoch").get<double>();
    }
    if (j.contains("default_kernel")) spec.default_kernel = kernel_from_json(j.at("default_kernel"));
    if (j.contains("advantage_kernel")) spec.advantage_kernel = kernel_from_json(j.at("advantage_kernel"));
    if (j.contains("interaction_kernel")) spec.interaction_kernel = kernel_from_json(j.at("interaction_kernel"));
    // Surface product kernels and oversized sums now rather than at first use.
    for (const auto& [_, k] : spec.features) to_state_space(k);
    for (const auto* k : {&spec.default_kernel, &spec.advantage_kernel, &spec.interaction_kernel}) {
        if (*k) to_state_space(**k);
    }
    return spec;
}

nlohmann::json model_spec_to_json(const ModelSpec& spec) {
    nlohmann::json j;
    j["likelihood"] = likelihood_to_json(spec.likelihood);
    if (!spec.features.empty()) {
        auto features = nlohmann::json::array();
        for (const auto& [id, k] : spec.features) features.push_back({{"id", id}, {"kernel", kernel_to_json(k)}});
        j["features"] = std::move(features);
    }
    if (spec.epoch) j["epoch"] = *spec.epoch;
    if (spec.default_kernel) j["default_kernel"] = kernel_to_json(*spec.default_kernel);
    if (spec.advantage_kernel) j["advantage_kernel"] = kernel_to_json(*spec.advantage_kernel);
    if (spec.interaction_kernel) j["interaction_kernel"] = kernel_to_json(*spec.interaction_kernel);
    return j;
}

Model make_model(const ModelSpec& spec, double epoch) {
    Model model(spec.likelihood, spec.epoch.value_or(epoch));
    for (const auto& [id, k] : spec.features) model.add_feature(id, k);
    return model;
}

}  // namespace skillgp
