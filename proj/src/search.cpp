#include "skillgp/search.hpp"

#include "skillgp/errors.hpp"
#include "skillgp/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace skillgp {

namespace {

// Uniform on [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::pair<double, double> range_of(const nlohmann::json& j, const char* name) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError(std::string("sampler '") + name + "' needs [low, high]");
    }
    const double lo = j[0].get<double>();
    const double hi = j[1].get<double>();
    if (!(lo <= hi)) throw ConfigError(std::string("sampler '") + name + "' needs low <= high");
    return {lo, hi};
}

}  // namespace

nlohmann::json sample_template(const nlohmann::json& tmpl, std::mt19937_64& rng) {
    if (tmpl.is_object()) {
        if (tmpl.size() == 1) {
            const auto& [key, value] = *tmpl.items().begin();
            if (key == "uniform") {
                const auto [lo, hi] = range_of(value, "uniform");
                return lo + (hi - lo) * unit(rng);
            }
            if (key == "log_uniform") {
                const auto [lo, hi] = range_of(value, "log_uniform");
                if (!(lo > 0.0)) throw ConfigError("sampler 'log_uniform' needs a positive range");
                return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * unit(rng));
            }
            if (key == "choice") {
                if (!value.is_array() || value.empty()) throw ConfigError("sampler 'choice' needs a nonempty array");
                const auto k = std::min(value.size() - 1, static_cast<std::size_t>(unit(rng) * value.size()));
                return sample_template(value[k], rng);
            }
        }
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [key, value] : tmpl.items()) out[key] = sample_template(value, rng);
        return out;
    }
    if (tmpl.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : tmpl) out.push_back(sample_template(v, rng));
        return out;
    }
    return tmpl;
}

SearchCandidate evaluate_config(const nlohmann::json& config, const DatasetSchema& schema,
                                const std::vector<MatchRecord>& train, const FitConfig& fit) {
    SearchCandidate out;
    out.config = config;
    try {
        const std::string model = config.value("model", "gp");
        if (model == "elo") {
            const EvalResult r = elo_baseline(train, elo_config_from_json(config));
            out.score = -r.log_loss;
            out.converged = true;
            return out;
        }
        if (model != "gp") throw ConfigError("search field 'model' must be \"gp\" or \"elo\"");
        nlohmann::json spec_json = config;
        spec_json.erase("model");
        const MatchEncoder encoder(model_spec_from_json(spec_json), schema);
        Model m = encoder.make_model(encoder.spec().epoch.value_or(default_epoch(train)));
        for (const auto& r : train) encoder.observe(m, r);
        FitConfig cfg = fit;
        cfg.threads = 1;
        cfg.progress = nullptr;
        const FitReport report = m.fit(cfg);
        out.iterations = report.iterations;
        out.converged = report.converged;
        const double lm = m.log_marginal();
        if (!std::isfinite(lm)) throw NumericalError("log-marginal is not finite");
        out.score = lm;
    } catch (const std::exception& e) {
        out.score.reset();
        out.error = e.what();
    }
    return out;
}

std::vector<SearchCandidate> random_search(const nlohmann::json& space, const DatasetSchema& schema,
                                           const std::vector<MatchRecord>& train, const SearchOptions& options) {
    options.fit.validate();
    // Draw every configuration up front so the sample does not depend on scheduling.
    std::mt19937_64 rng(options.seed);
    std::vector<nlohmann::json> configs;
    configs.reserve(options.n);
    for (std::size_t k = 0; k < options.n; ++k) configs.push_back(sample_template(space, rng));

    std::vector<SearchCandidate> out(options.n);
    parallel_for(options.n, resolve_threads(options.threads), [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            out[k] = evaluate_config(configs[k], schema, train, options.fit);
            out[k].sample = k;
        }
    });
    std::stable_sort(out.begin(), out.end(), [](const SearchCandidate& a, const SearchCandidate& b) {
        if (a.score.has_value() != b.score.has_value()) return a.score.has_value();
        return a.score && *a.score > *b.score;
    });
    return out;
}

nlohmann::json search_result_to_json(const std::vector<SearchCandidate>& ranked) {
    auto arr = nlohmann::json::array();
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const auto& c = ranked[r];
        nlohmann::json j{{"rank", r + 1},
                         {"sample", c.sample},
                         {"config", c.config},
                         {"score", c.score ? nlohmann::json(*c.score) : nlohmann::json(nullptr)},
                         {"iterations", c.iterations},
                         {"converged", c.converged}};
        if (!c.error.empty()) j["error"] = c.error;
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace skillgp
