#include "skillgp/evaldata.hpp"

#include "skillgp/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace skillgp {

DatasetSchema dataset_schema_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("dataset schema must be a JSON object");
    DatasetSchema schema;
    for (const auto& [key, value] : j.items()) {
        if (key == "ties") {
            if (!value.is_boolean()) throw ConfigError("schema field 'ties' must be a boolean");
            schema.ties = value.get<bool>();
        } else if (key == "skip_malformed") {
            if (!value.is_boolean()) throw ConfigError("schema field 'skip_malformed' must be a boolean");
            schema.skip_malformed = value.get<bool>();
        } else if (key == "outcome") {
            const auto kind = value.is_string() ? value.get<std::string>() : std::string();
            if (kind == "ordinal") {
                schema.outcome = OutcomeSchema::Ordinal;
            } else if (kind == "points") {
                schema.outcome = OutcomeSchema::Points;
            } else {
                throw ConfigError("schema field 'outcome' must be \"ordinal\" or \"points\"");
            }
        } else {
            throw ConfigError("unknown field '" + key + "' in dataset schema");
        }
    }
    return schema;
}

nlohmann::json dataset_schema_to_json(const DatasetSchema& schema) {
    return {{"ties", schema.ties},
            {"outcome", schema.outcome == OutcomeSchema::Points ? "points" : "ordinal"},
            {"skip_malformed", schema.skip_malformed}};
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

// Comma-separated fields; double quotes protect commas and "" escapes a quote.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(field));
            field.clear();
        } else {
            field += c;
        }
    }
    out.push_back(trim(field));
    return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
    T value{};
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return value;
}

std::optional<bool> parse_flag(const std::string& s) {
    if (s.empty() || s == "0" || s == "false" || s == "False" || s == "FALSE") return false;
    if (s == "1" || s == "true" || s == "True" || s == "TRUE") return true;
    return std::nullopt;
}

struct Columns {
    int t = -1, comp_i = -1, comp_j = -1, outcome = -1, points_i = -1, points_j = -1, home = -1, first_mover = -1;
};

class RowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

MatchRecord parse_row(const std::vector<std::string>& fields, const Columns& cols, const DatasetSchema& schema,
                      std::size_t header_size) {
    if (fields.size() != header_size) {
        throw RowError("expected " + std::to_string(header_size) + " fields, found " + std::to_string(fields.size()));
    }
    MatchRecord r;
    const auto seconds = parse_timestamp(fields[cols.t]);
    if (!seconds) throw RowError("unparseable timestamp '" + fields[cols.t] + "'");
    r.time = *seconds / (kSecondsPerDay * kDaysPerYear);
    r.day = static_cast<std::int64_t>(std::floor(*seconds / kSecondsPerDay));
    r.comp_i = fields[cols.comp_i];
    r.comp_j = fields[cols.comp_j];
    if (r.comp_i.empty() || r.comp_j.empty()) throw RowError("empty competitor id");
    if (r.comp_i == r.comp_j) throw RowError("competitor '" + r.comp_i + "' plays against itself");

    std::optional<int> outcome;
    if (cols.outcome >= 0 && !fields[cols.outcome].empty()) {
        const auto v = parse_number<int>(fields[cols.outcome]);
        if (!v || (*v != 1 && *v != -1 && *v != 0)) {
            throw RowError("outcome must be 1, -1 or 0, found '" + fields[cols.outcome] + "'");
        }
        outcome = *v;
    }
    const bool has_points = cols.points_i >= 0 && cols.points_j >= 0 &&
                            !(fields[cols.points_i].empty() && fields[cols.points_j].empty());
    if (has_points) {
        const auto a = parse_number<std::int64_t>(fields[cols.points_i]);
        const auto b = parse_number<std::int64_t>(fields[cols.points_j]);
        if (!a || !b || *a < 0 || *b < 0) throw RowError("points must be nonnegative integers");
        r.points = std::array<std::int64_t, 2>{*a, *b};
        const int derived = *a > *b ? 1 : (*a < *b ? -1 : 0);
        if (outcome && *outcome != derived) throw RowError("outcome disagrees with points");
        outcome = derived;
    } else if (schema.outcome == OutcomeSchema::Points) {
        throw RowError("missing points_i/points_j");
    }
    if (!outcome) throw RowError("missing outcome");
    if (*outcome == 0 && !schema.ties) throw RowError("tie in a schema without ties");
    r.outcome = *outcome;

    if (cols.home >= 0) {
        const auto v = parse_flag(fields[cols.home]);
        if (!v) throw RowError("home must be 0/1 or true/false");
        r.home = *v;
    }
    if (cols.first_mover >= 0) {
        const auto v = parse_flag(fields[cols.first_mover]);
        if (!v) throw RowError("first_mover must be 0/1 or true/false");
        r.first_mover = *v;
    }
    return r;
}

}  // namespace

std::optional<double> parse_timestamp(const std::string& raw) {
    const std::string text = trim(raw);
    if (text.empty()) return std::nullopt;
    if (const auto v = parse_number<std::int64_t>(text)) return static_cast<double>(*v);

    using namespace std::chrono;
    // YYYY-MM-DD[(T| )HH:MM[:SS[.fff]]][Z]
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    const auto y = parse_number<int>(std::string_view(text).substr(0, 4));
    const auto mo = parse_number<unsigned>(std::string_view(text).substr(5, 2));
    const auto d = parse_number<unsigned>(std::string_view(text).substr(8, 2));
    if (!y || !mo || !d) return std::nullopt;
    const year_month_day ymd{year{*y}, month{*mo}, day{*d}};
    if (!ymd.ok()) return std::nullopt;
    double seconds = static_cast<double>(duration_cast<std::chrono::seconds>(sys_days{ymd}.time_since_epoch()).count());

    std::string_view rest = std::string_view(text).substr(10);
    if (rest.empty() || rest == "Z") return seconds;
    if (rest[0] != 'T' && rest[0] != ' ') return std::nullopt;
    rest.remove_prefix(1);
    if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
    if (rest.size() < 5 || rest[2] != ':') return std::nullopt;
    const auto hh = parse_number<int>(rest.substr(0, 2));
    const auto mm = parse_number<int>(rest.substr(3, 2));
    if (!hh || !mm || *hh > 23 || *mm > 59) return std::nullopt;
    double ss = 0.0;
    if (rest.size() > 5) {
        if (rest[5] != ':') return std::nullopt;
        const auto s = parse_number<double>(rest.substr(6));
        if (!s || *s < 0.0 || *s >= 61.0) return std::nullopt;
        ss = *s;
    }
    return seconds + 3600.0 * *hh + 60.0 * *mm + ss;
}

ParsedDataset parse_dataset(std::istream& in, const DatasetSchema& schema, const std::string& source) {
    ParsedDataset out;
    std::string line;
    std::size_t lineno = 0;
    // Skip leading blank lines; an empty file is an empty dataset.
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!trim(line).empty()) {
            header = split_csv(line);
            break;
        }
    }
    if (header.empty()) return out;
    if (!header[0].empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

    Columns cols;
    const std::map<std::string, int*> known{{"t", &cols.t},
                                            {"comp_i", &cols.comp_i},
                                            {"comp_j", &cols.comp_j},
                                            {"outcome", &cols.outcome},
                                            {"points_i", &cols.points_i},
                                            {"points_j", &cols.points_j},
                                            {"home", &cols.home},
                                            {"first_mover", &cols.first_mover}};
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto it = known.find(header[c]);
        if (it == known.end()) {
            throw DataError(source + ":" + std::to_string(lineno) + ": unknown column '" + header[c] + "'");
        }
        if (*it->second >= 0) {
            throw DataError(source + ":" + std::to_string(lineno) + ": duplicate column '" + header[c] + "'");
        }
        *it->second = static_cast<int>(c);
    }
    std::vector<std::string> missing;
    if (cols.t < 0) missing.push_back("t");
    if (cols.comp_i < 0) missing.push_back("comp_i");
    if (cols.comp_j < 0) missing.push_back("comp_j");
    if (schema.outcome == OutcomeSchema::Ordinal && cols.outcome < 0 && (cols.points_i < 0 || cols.points_j < 0)) {
        missing.push_back("outcome");
    }
    if (schema.outcome == OutcomeSchema::Points) {
        if (cols.points_i < 0) missing.push_back("points_i");
        if (cols.points_j < 0) missing.push_back("points_j");
    }
    if ((cols.points_i < 0) != (cols.points_j < 0)) missing.push_back(cols.points_i < 0 ? "points_i" : "points_j");
    if (!missing.empty()) {
        std::string names;
        for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
        throw DataError(source + ":" + std::to_string(lineno) + ": header lacks required column(s) " + names);
    }

    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            MatchRecord r = parse_row(split_csv(line), cols, schema, header.size());
            r.line = lineno;
            out.records.push_back(std::move(r));
        } catch (const RowError& e) {
            const std::string msg = source + ":" + std::to_string(lineno) + ": " + e.what();
            if (!schema.skip_malformed) throw DataError(msg);
            out.skipped.push_back(msg);
        }
    }
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const MatchRecord& a, const MatchRecord& b) { return a.time < b.time; });
    return out;
}

ParsedDataset parse_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
    return parse_dataset(in, schema, path.string());
}

std::size_t split_index(std::size_t n, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("split fraction must lie in [0, 1]");
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    return std::min(k, n);
}

Split chronological_split(const std::vector<MatchRecord>& records, double fraction) {
    const std::size_t k = split_index(records.size(), fraction);
    return {std::vector<MatchRecord>(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(k)),
            std::vector<MatchRecord>(records.begin() + static_cast<std::ptrdiff_t>(k), records.end())};
}

// ---------------------------------------------------------------------------
// Encoding

MatchEncoder::MatchEncoder(ModelSpec spec, DatasetSchema schema) : spec_(std::move(spec)), schema_(schema) {
    const auto type = spec_.likelihood.type();
    const bool count_or_real = type == LikelihoodType::Gaussian || type == LikelihoodType::PoissonExp;
    if (count_or_real && schema_.outcome != OutcomeSchema::Points) {
        throw ConfigError("gaussian and poisson_exp likelihoods need a points schema");
    }
    if (schema_.ties && (type == LikelihoodType::Probit || type == LikelihoodType::Logit)) {
        throw ConfigError("a binary likelihood cannot represent ties; use ordinal_probit");
    }
}

Model MatchEncoder::make_model(double epoch) const { return skillgp::make_model(spec_, epoch); }

Coefficients MatchEncoder::coefficients(const MatchRecord& r) const {
    Coefficients x{{r.comp_i, 1.0}, {r.comp_j, -1.0}};
    if ((r.home || r.first_mover) && spec_.advantage_kernel) x.emplace_back(kAdvantageFeature, 1.0);
    if (spec_.interaction_kernel) x.push_back(interaction_feature(r.comp_i, r.comp_j));
    return x;
}

namespace {

std::optional<Kernel> kernel_of(const ModelSpec& spec, const MatchRecord& r, const std::string& id) {
    if (id == kAdvantageFeature && spec.advantage_kernel) return spec.advantage_kernel;
    if (spec.interaction_kernel && id == interaction_feature(r.comp_i, r.comp_j).first) {
        return spec.interaction_kernel;
    }
    return spec.kernel_for(id);
}

}  // namespace

void MatchEncoder::ensure_features(Model& model, const MatchRecord& r) const {
    for (const auto& [id, _] : coefficients(r)) {
        if (model.has_feature(id)) continue;
        const auto k = kernel_of(spec_, r, id);
        if (!k) throw ConfigError("no kernel for feature '" + id + "'; declare it or set default_kernel");
        model.add_feature(id, *k);
    }
}

std::vector<Model::Input> MatchEncoder::inputs(const MatchRecord& r) const {
    const Coefficients x = coefficients(r);
    switch (spec_.likelihood.type()) {
        case LikelihoodType::Gaussian:
            return {{x, r.time, static_cast<double>((*r.points)[0] - (*r.points)[1])}};
        case LikelihoodType::PoissonExp: {
            Coefficients neg = x;
            for (auto& [_, c] : neg) c = -c;
            return {{x, r.time, static_cast<double>((*r.points)[0])},
                    {neg, r.time, static_cast<double>((*r.points)[1])}};
        }
        default:
            return {{x, r.time, static_cast<double>(r.outcome)}};
    }
}

void MatchEncoder::observe(Model& model, const MatchRecord& r) const {
    ensure_features(model, r);
    for (const auto& in : inputs(r)) model.observe(in.coeffs, in.time, in.outcome);
}

Marginal MatchEncoder::prior_marginal(const std::string& id, double epoch, double t) const {
    // Only reached for features the model has not seen; their kernel comes from the spec.
    const auto k = id == kAdvantageFeature ? spec_.advantage_kernel
                   : id.find('|') != std::string::npos && spec_.interaction_kernel ? spec_.interaction_kernel
                                                                                  : spec_.kernel_for(id);
    if (!k) throw ConfigError("no kernel for feature '" + id + "'; declare it or set default_kernel");
    return {0.0, to_state_space(*k, epoch).prior_variance(t)};
}

namespace {

// Poisson pmf values up to the point where the remaining tail is negligible.
std::vector<double> poisson_pmf(double rate) {
    std::vector<double> p;
    double term = std::exp(-rate);
    double mass = 0.0;
    for (std::size_t k = 0;; ++k) {
        if (k > 0) term *= rate / static_cast<double>(k);
        p.push_back(term);
        mass += term;
        if (static_cast<double>(k) > rate && 1.0 - mass < 1e-12) break;
    }
    return p;
}

MatchProbs skellam_probs(double rate_i, double rate_j) {
    MatchProbs out;
    if (std::max(rate_i, rate_j) > 1e4) {
        const double mean = rate_i - rate_j;
        const double sd = std::sqrt(rate_i + rate_j);
        out.p_win = normal_cdf((mean - 0.5) / sd);
        out.p_loss = normal_cdf((-mean - 0.5) / sd);
        out.p_tie = std::max(0.0, 1.0 - out.p_win - out.p_loss);
        return out;
    }
    const auto a = poisson_pmf(rate_i);
    const auto b = poisson_pmf(rate_j);
    std::vector<double> cdf_a(a.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) cdf_a[k] = (acc += a[k]);
    for (std::size_t k = 0; k < b.size(); ++k) {
        const double below = k < a.size() ? cdf_a[k] : 1.0;
        out.p_win += b[k] * (1.0 - below);
        if (k < a.size()) out.p_tie += a[k] * b[k];
    }
    out.p_loss = std::max(0.0, 1.0 - out.p_win - out.p_tie);
    return out;
}

}  // namespace

MatchProbs MatchEncoder::predict(const Model& model, const MatchRecord& r) const {
    Marginal d;
    for (const auto& [id, c] : canonical(coefficients(r))) {
        const Marginal m = model.has_feature(id) ? model.chain(id).posterior_at(r.time)
                                                 : prior_marginal(id, model.epoch(), r.time);
        d.mean += c * m.mean;
        d.var += c * c * m.var;
    }
    const Likelihood& lik = spec_.likelihood;
    MatchProbs p;
    switch (lik.type()) {
        case LikelihoodType::Probit:
        case LikelihoodType::Logit:
        case LikelihoodType::OrdinalProbit: {
            const auto dist = predictive(lik, d.mean, d.var);
            p.p_win = dist.prob(1.0);
            p.p_loss = dist.prob(-1.0);
            p.p_tie = lik.type() == LikelihoodType::OrdinalProbit ? dist.prob(0.0) : 0.0;
            break;
        }
        case LikelihoodType::Gaussian: {
            const double sd = std::sqrt(d.var + lik.obs_noise());
            const double half = schema_.ties ? 0.5 : 0.0;
            p.p_win = normal_cdf((d.mean - half) / sd);
            p.p_loss = normal_cdf((-d.mean - half) / sd);
            p.p_tie = schema_.ties ? std::max(0.0, 1.0 - p.p_win - p.p_loss) : 0.0;
            break;
        }
        case LikelihoodType::PoissonExp: {
            const auto& rule = lik.quadrature();
            const double sd = std::sqrt(d.var);
            for (int q = 0; q < rule.size(); ++q) {
                const double z = d.mean + sd * rule.nodes()[q];
                const MatchProbs s = skellam_probs(std::exp(z), std::exp(-z));
                const double w = rule.weights()[q];
                p.p_win += w * s.p_win;
                p.p_tie += w * s.p_tie;
                p.p_loss += w * s.p_loss;
            }
            if (!schema_.ties) {
                p.p_win += 0.5 * p.p_tie;
                p.p_loss += 0.5 * p.p_tie;
                p.p_tie = 0.0;
            }
            break;
        }
    }
    return p;
}

double default_epoch(const std::vector<MatchRecord>& records) {
    if (records.empty()) return 0.0;
    return static_cast<double>(records.front().day) / kDaysPerYear;
}

// ---------------------------------------------------------------------------
// Metrics

double record_log_loss(const MatchProbs& p, int outcome) {
    return -std::log(std::max(p.prob(outcome), std::numeric_limits<double>::min()));
}

double record_accuracy(const MatchProbs& p, int outcome) {
    const double best = std::max({p.p_loss, p.p_tie, p.p_win});
    const int ties = (p.p_loss == best) + (p.p_tie == best) + (p.p_win == best);
    return p.prob(outcome) == best ? 1.0 / ties : 0.0;
}

void recompute_metrics(EvalResult& result) {
    double loss = 0.0;
    double acc = 0.0;
    for (const auto& pr : result.predictions) {
        loss += record_log_loss(pr.probs, pr.outcome);
        acc += record_accuracy(pr.probs, pr.outcome);
    }
    const auto n = static_cast<double>(result.predictions.size());
    result.log_loss = result.predictions.empty() ? 0.0 : loss / n;
    result.accuracy = result.predictions.empty() ? 0.0 : acc / n;
}

// ---------------------------------------------------------------------------
// Evaluation protocols

EvalResult rolling_evaluate(const MatchEncoder& encoder, const std::vector<MatchRecord>& records,
                            const EvalOptions& options) {
    if (options.granularity_days < 1) throw ConfigError("refit granularity must be at least one day");
    options.fit.validate();
    EvalResult result;
    const std::size_t n = records.size();
    const std::size_t first_test = split_index(n, options.train_fraction);
    if (first_test == n) return result;

    Model model = encoder.make_model(encoder.spec().epoch.value_or(default_epoch(records)));
    const std::int64_t origin = records[first_test].day;
    const std::int64_t g = options.granularity_days;
    std::size_t added = 0;
    std::size_t k = first_test;
    while (k < n) {
        const std::int64_t offset = records[k].day - origin;
        const std::int64_t window_start = origin + (offset >= 0 ? offset / g : -((-offset + g - 1) / g)) * g;
        const std::int64_t window_end = window_start + g;
        bool grew = false;
        while (added < n && records[added].day < window_start) {
            encoder.observe(model, records[added++]);
            grew = true;
        }
        if (grew) {
            const FitReport report = model.fit(options.fit);
            ++result.fits;
            result.max_fit_iterations = std::max(result.max_fit_iterations, report.iterations);
            result.all_converged = result.all_converged && report.converged;
        }
        for (; k < n && records[k].day < window_end; ++k) {
            result.predictions.push_back({k, encoder.predict(model, records[k]), records[k].outcome});
        }
    }
    recompute_metrics(result);
    return result;
}

EvalResult evaluate_model(const MatchEncoder& encoder, const Model& model, const std::vector<MatchRecord>& records,
                          std::size_t first_index) {
    EvalResult result;
    for (std::size_t k = first_index; k < records.size(); ++k) {
        result.predictions.push_back({k, encoder.predict(model, records[k]), records[k].outcome});
    }
    recompute_metrics(result);
    return result;
}

EvalResult random_baseline(const std::vector<MatchRecord>& records, bool ternary, std::size_t first_index) {
    const MatchProbs uniform = ternary ? MatchProbs{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0} : MatchProbs{0.5, 0.0, 0.5};
    EvalResult result;
    for (std::size_t k = first_index; k < records.size(); ++k) {
        result.predictions.push_back({k, uniform, records[k].outcome});
    }
    recompute_metrics(result);
    return result;
}

// ---------------------------------------------------------------------------
// Elo

EloConfig elo_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("Elo configuration must be a JSON object");
    EloConfig config;
    for (const auto& [key, value] : j.items()) {
        if (key == "learning_rate" || key == "lr") {
            if (!value.is_number()) throw ConfigError("Elo field '" + key + "' must be a number");
            config.learning_rate = value.get<double>();
        } else if (key == "draw_margin") {
            if (!value.is_number()) throw ConfigError("Elo field 'draw_margin' must be a number");
            config.draw_margin = value.get<double>();
        } else if (key == "link") {
            const auto name = value.is_string() ? value.get<std::string>() : std::string();
            if (name == "logit") {
                config.link = EloLink::Logit;
            } else if (name == "probit") {
                config.link = EloLink::Probit;
            } else {
                throw ConfigError("Elo field 'link' must be \"logit\" or \"probit\"");
            }
        } else if (key != "model") {
            throw ConfigError("unknown field '" + key + "' in Elo configuration");
        }
    }
    if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
        throw ConfigError("Elo field 'learning_rate' must be a finite nonnegative number");
    }
    if (!(config.draw_margin >= 0.0) || !std::isfinite(config.draw_margin)) {
        throw ConfigError("Elo field 'draw_margin' must be a finite nonnegative number");
    }
    return config;
}

nlohmann::json elo_config_to_json(const EloConfig& config) {
    return {{"model", "elo"},
            {"link", config.link == EloLink::Logit ? "logit" : "probit"},
            {"learning_rate", config.learning_rate},
            {"draw_margin", config.draw_margin}};
}

namespace {

double link_cdf(EloLink link, double x) {
    return link == EloLink::Logit ? 1.0 / (1.0 + std::exp(-x)) : normal_cdf(x);
}

double link_pdf(EloLink link, double x) {
    if (link == EloLink::Probit) return normal_pdf(x);
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 - s);
}

// d/dx log F(x)
double link_dlog(EloLink link, double x) {
    return link == EloLink::Logit ? 1.0 / (1.0 + std::exp(x)) : inverse_mills(x);
}

}  // namespace

MatchProbs elo_probs(const EloConfig& config, double d) {
    const double a = config.draw_margin;
    MatchProbs p;
    p.p_win = link_cdf(config.link, d - a);
    p.p_loss = link_cdf(config.link, -d - a);
    p.p_tie = a > 0.0 ? std::max(0.0, 1.0 - p.p_win - p.p_loss) : 0.0;
    return p;
}

double elo_gradient(const EloConfig& config, int outcome, double d) {
    const double a = config.draw_margin;
    const double win = link_dlog(config.link, d - a);
    const double loss = -link_dlog(config.link, -d - a);
    if (outcome > 0) return win;
    if (outcome < 0) return loss;
    const double tie = elo_probs(config, d).p_tie;
    // Without a draw margin a tie counts as half a win and half a loss.
    if (!(tie > 0.0)) return 0.5 * (win + loss);
    return (link_pdf(config.link, -d - a) - link_pdf(config.link, d - a)) / tie;
}

EvalResult elo_baseline(const std::vector<MatchRecord>& records, const EloConfig& config, std::size_t first_index) {
    std::unordered_map<std::string, double> score;
    EvalResult result;
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        double& si = score[r.comp_i];
        double& sj = score[r.comp_j];
        const double d = si - sj;
        if (k >= first_index) result.predictions.push_back({k, elo_probs(config, d), r.outcome});
        const double step = config.learning_rate * elo_gradient(config, r.outcome, d);
        si += step;
        sj -= step;
    }
    recompute_metrics(result);
    return result;
}

// ---------------------------------------------------------------------------
// Output

void write_predictions_csv(std::ostream& out, const EvalResult& result, const std::vector<MatchRecord>& records) {
    out << "index,t,comp_i,comp_j,outcome,p_loss,p_tie,p_win\n";
    const auto old_precision = out.precision(17);
    for (const auto& pr : result.predictions) {
        const auto& r = records.at(pr.index);
        out << pr.index << ',' << r.time << ',' << r.comp_i << ',' << r.comp_j << ',' << pr.outcome << ','
            << pr.probs.p_loss << ',' << pr.probs.p_tie << ',' << pr.probs.p_win << '\n';
    }
    out.precision(old_precision);
}

std::vector<Prediction> read_predictions_csv(std::istream& in) {
    std::vector<Prediction> out;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) return out;
    ++lineno;
    if (trim(line) != "index,t,comp_i,comp_j,outcome,p_loss,p_tie,p_win") {
        throw DataError("predictions file: line 1: unexpected header");
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv(line);
        const auto bad = [&] { return DataError("predictions file: line " + std::to_string(lineno) + ": malformed row"); };
        if (f.size() != 8) throw bad();
        const auto index = parse_number<std::size_t>(f[0]);
        const auto outcome = parse_number<int>(f[4]);
        const auto pl = parse_number<double>(f[5]);
        const auto pt = parse_number<double>(f[6]);
        const auto pw = parse_number<double>(f[7]);
        if (!index || !outcome || !pl || !pt || !pw) throw bad();
        out.push_back({*index, {*pl, *pt, *pw}, *outcome});
    }
    return out;
}

nlohmann::json eval_result_to_json(const EvalResult& result) {
    return {{"log_loss", result.log_loss},
            {"accuracy", result.accuracy},
            {"n", result.predictions.size()},
            {"fits", result.fits},
            {"max_fit_iterations", result.max_fit_iterations},
            {"all_converged", result.all_converged}};
}

}  // namespace skillgp
