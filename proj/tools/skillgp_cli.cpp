// skillgp: fit, evaluate, search and export pairwise-comparison models.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 non-convergence (or a numerical failure during fitting), 1 anything else.

#include "skillgp/errors.hpp"
#include "skillgp/evaldata.hpp"
#include "skillgp/model.hpp"
#include "skillgp/search.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace {

using nlohmann::json;
using namespace skillgp;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNoConvergence = 4;

struct FitFlags {
    std::string objective = "ep";
    double learning_rate = 0.0;  // 0: likelihood default
    double tolerance = 1e-3;
    int max_iterations = 500;
    std::string metric = "log_marginal";
    bool quiet = false;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
    cmd->add_option("--objective", f.objective, "ep or kl")->check(CLI::IsMember({"ep", "kl"}));
    cmd->add_option("--lr", f.learning_rate, "damping in (0, 1]; default depends on the likelihood");
    cmd->add_option("--tol", f.tolerance, "convergence tolerance");
    cmd->add_option("--max-iter", f.max_iterations, "iteration cap");
    cmd->add_option("--metric", f.metric, "log_marginal or params")
        ->check(CLI::IsMember({"log_marginal", "params"}));
    cmd->add_flag("--quiet", f.quiet, "no progress lines on stderr");
}

FitConfig to_fit_config(const FitFlags& f, int threads) {
    FitConfig c;
    c.objective = f.objective == "kl" ? Objective::ReverseKL : Objective::EP;
    if (f.learning_rate != 0.0) c.learning_rate = f.learning_rate;
    c.tolerance = f.tolerance;
    c.max_iterations = f.max_iterations;
    c.threads = threads;
    c.metric = f.metric == "params" ? ConvergenceMetric::PseudoParams : ConvergenceMetric::LogMarginal;
    if (!f.quiet) {
        c.progress = [](const IterationRecord& r) {
            std::cerr << json{{"iter", r.iteration}, {"log_marginal", r.log_marginal}, {"elapsed_s", r.elapsed_s}}
                             .dump()
                      << '\n';
        };
    }
    c.validate();
    return c;
}

json fit_config_to_json(const FitConfig& c) {
    json j{{"objective", c.objective == Objective::EP ? "ep" : "kl"},
           {"tolerance", c.tolerance},
           {"max_iterations", c.max_iterations},
           {"metric", c.metric == ConvergenceMetric::LogMarginal ? "log_marginal" : "params"}};
    j["learning_rate"] = c.learning_rate ? json(*c.learning_rate) : json(nullptr);
    return j;
}

json read_json(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw ConfigError(std::string("cannot open ") + what + " '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON in ") + what + " '" + path + "': " + e.what());
    }
}

DatasetSchema load_schema(const std::string& path) {
    return path.empty() ? DatasetSchema{} : dataset_schema_from_json(read_json(path, "schema"));
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------

struct FitCommand {
    std::string data, schema, model, out;
    FitFlags flags;
};

int run_fit(const FitCommand& c, int threads) {
    const DatasetSchema schema = load_schema(c.schema);
    const ModelSpec spec = model_spec_from_json(read_json(c.model, "model specification"));
    const MatchEncoder encoder(spec, schema);
    const FitConfig config = to_fit_config(c.flags, threads);
    const auto records = parse_dataset(c.data, schema).records;

    Model model = encoder.make_model(spec.epoch.value_or(default_epoch(records)));
    for (const auto& r : records) encoder.observe(model, r);
    const FitReport report = model.fit(config);

    json snapshot = model.to_json();
    snapshot["model_spec"] = model_spec_to_json(spec);
    snapshot["schema"] = dataset_schema_to_json(schema);
    snapshot["fit_config"] = fit_config_to_json(config);
    write_text(c.out, snapshot.dump() + "\n");

    json summary{{"iterations", report.iterations},
                 {"converged", report.converged},
                 {"stalled", report.stalled},
                 {"log_marginal", report.log_marginals.empty() ? json(nullptr) : json(report.log_marginals.back())},
                 {"guarded_updates", report.guarded_updates},
                 {"clamped_precisions", report.clamped_precisions},
                 {"observations", model.num_observations()},
                 {"features", model.num_features()}};
    std::cout << summary.dump() << '\n';
    return report.converged ? 0 : kExitNoConvergence;
}

// ---------------------------------------------------------------------------

struct EvaluateCommand {
    std::string data, schema, model, snapshot, baseline, predictions, from_predictions, link = "logit";
    double split = 0.7;
    int granularity = 1;
    double elo_lr = 0.1;
    double draw_margin = 0.0;
    FitFlags flags;
};

int run_evaluate(const EvaluateCommand& c, int threads) {
    EvalResult result;
    std::string method;
    std::vector<MatchRecord> records;
    if (!c.from_predictions.empty()) {
        std::ifstream in(c.from_predictions);
        if (!in) throw DataError("cannot open predictions '" + c.from_predictions + "'");
        result.predictions = read_predictions_csv(in);
        recompute_metrics(result);
        method = "stored";
    } else {
        if (c.data.empty()) throw ConfigError("evaluate needs --data (or --from-predictions)");
        const int sources = !c.model.empty() + !c.snapshot.empty() + !c.baseline.empty();
        if (sources != 1) throw ConfigError("evaluate needs exactly one of --model, --snapshot, --baseline");

        DatasetSchema schema = load_schema(c.schema);
        json snap;
        if (!c.snapshot.empty()) {
            snap = read_json(c.snapshot, "snapshot");
            if (c.schema.empty() && snap.contains("schema")) schema = dataset_schema_from_json(snap["schema"]);
        }
        records = parse_dataset(c.data, schema).records;
        const std::size_t first_test = split_index(records.size(), c.split);

        if (c.baseline == "random") {
            result = random_baseline(records, schema.ties, first_test);
            method = "random";
        } else if (c.baseline == "elo") {
            EloConfig elo;
            elo.learning_rate = c.elo_lr;
            elo.draw_margin = c.draw_margin;
            elo.link = c.link == "probit" ? EloLink::Probit : EloLink::Logit;
            elo = elo_config_from_json(elo_config_to_json(elo));  // validation
            result = elo_baseline(records, elo, first_test);
            method = "elo";
        } else if (!c.baseline.empty()) {
            throw ConfigError("--baseline must be 'random' or 'elo'");
        } else if (!c.snapshot.empty()) {
            if (!snap.contains("model_spec")) throw ConfigError("snapshot lacks 'model_spec'");
            const MatchEncoder encoder(model_spec_from_json(snap["model_spec"]), schema);
            const Model model = Model::from_json(snap);
            result = evaluate_model(encoder, model, records, first_test);
            method = "snapshot";
        } else {
            const MatchEncoder encoder(model_spec_from_json(read_json(c.model, "model specification")), schema);
            EvalOptions options;
            options.train_fraction = c.split;
            options.granularity_days = c.granularity;
            options.fit = to_fit_config(c.flags, threads);
            options.fit.progress = nullptr;
            result = rolling_evaluate(encoder, records, options);
            method = "rolling";
        }
        if (!c.predictions.empty()) {
            std::ostringstream csv;
            write_predictions_csv(csv, result, records);
            write_text(c.predictions, csv.str());
        }
    }
    json out = eval_result_to_json(result);
    out["method"] = method;
    std::cout << out.dump() << '\n';
    return result.all_converged ? 0 : kExitNoConvergence;
}

// ---------------------------------------------------------------------------

struct SearchCommand {
    std::string data, schema, space, out;
    std::size_t n = 100;
    double split = 0.7;
    FitFlags flags;
};

int run_search(const SearchCommand& c, int threads, std::uint64_t seed) {
    const DatasetSchema schema = load_schema(c.schema);
    const json space = read_json(c.space, "search space");
    const auto records = parse_dataset(c.data, schema).records;
    const Split split = chronological_split(records, c.split);

    SearchOptions options;
    options.n = c.n;
    options.seed = seed;
    options.threads = threads;
    options.fit = to_fit_config(c.flags, 1);
    options.fit.progress = nullptr;
    const auto ranked = random_search(space, schema, split.train, options);
    const json out{{"seed", seed}, {"n", c.n}, {"train_records", split.train.size()},
                   {"ranked", search_result_to_json(ranked)}};
    if (c.out.empty()) {
        std::cout << out.dump(2) << '\n';
    } else {
        write_text(c.out, out.dump(2) + "\n");
        if (!ranked.empty()) std::cout << json{{"best", search_result_to_json({ranked.front()})[0]}}.dump() << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct ExportCommand {
    std::string snapshot, out;
    std::vector<std::string> features;
    double start = std::numeric_limits<double>::quiet_NaN();
    double end = std::numeric_limits<double>::quiet_NaN();
    double step = std::numeric_limits<double>::quiet_NaN();
};

int run_export(const ExportCommand& c) {
    const Model model = Model::from_json(read_json(c.snapshot, "snapshot"));
    double lo = c.start;
    double hi = c.end;
    if (std::isnan(lo) || std::isnan(hi)) {
        if (model.num_observations() == 0) throw ConfigError("export needs --start and --end for an empty model");
        if (std::isnan(lo)) lo = model.observation_time(0);
        if (std::isnan(hi)) hi = model.observation_time(model.num_observations() - 1);
    }
    if (!(hi >= lo)) throw ConfigError("export grid needs end >= start");
    double step = c.step;
    if (std::isnan(step)) step = hi > lo ? (hi - lo) / 100.0 : 1.0;
    if (!(step > 0.0)) throw ConfigError("export grid step must be positive");

    std::vector<double> grid;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t k = 0; k <= count; ++k) grid.push_back(lo + static_cast<double>(k) * step);

    const auto ids = c.features.empty() ? model.feature_ids() : c.features;
    for (const auto& id : ids) {
        if (!model.has_feature(id)) throw ConfigError("unknown feature id '" + id + "'");
    }
    std::ostringstream csv;
    csv.precision(17);
    csv << "feature,t,mean,std\n";
    for (const auto& id : ids) {
        for (const auto& p : model.trajectory(id, grid)) csv << id << ',' << p.t << ',' << p.mean << ',' << p.std << '\n';
    }
    if (c.out.empty()) {
        std::cout << csv.str();
    } else {
        write_text(c.out, csv.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pairwise-comparison models with Gaussian-process scores"};
    app.require_subcommand(1);
    int threads = 0;
    std::uint64_t seed = 0;
    app.add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed, "random seed");
    // Global flags may also follow the subcommand name.
    app.fallthrough();

    FitCommand fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit a model and write a snapshot");
    fit_cmd->add_option("--data", fit.data, "dataset CSV")->required();
    fit_cmd->add_option("--schema", fit.schema, "dataset schema JSON");
    fit_cmd->add_option("--model", fit.model, "model specification JSON")->required();
    fit_cmd->add_option("--out", fit.out, "snapshot path")->required();
    add_fit_flags(fit_cmd, fit.flags);

    EvaluateCommand ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "rolling evaluation, snapshot predictions or baselines");
    ev_cmd->add_option("--data", ev.data, "dataset CSV");
    ev_cmd->add_option("--schema", ev.schema, "dataset schema JSON");
    ev_cmd->add_option("--model", ev.model, "model specification JSON (rolling protocol)");
    ev_cmd->add_option("--snapshot", ev.snapshot, "fitted snapshot (predicts the test split)");
    ev_cmd->add_option("--baseline", ev.baseline, "random or elo");
    ev_cmd->add_option("--split", ev.split, "training fraction");
    ev_cmd->add_option("--granularity", ev.granularity, "refit granularity in days");
    ev_cmd->add_option("--elo-lr,--lr", ev.elo_lr, "Elo learning rate (with --baseline elo), else fit damping");
    ev_cmd->add_option("--draw-margin", ev.draw_margin, "Elo draw margin");
    ev_cmd->add_option("--link", ev.link, "Elo link")->check(CLI::IsMember({"logit", "probit"}));
    ev_cmd->add_option("--predictions", ev.predictions, "write per-record predictions CSV");
    ev_cmd->add_option("--from-predictions", ev.from_predictions, "recompute metrics from a predictions CSV");
    ev_cmd->add_option("--objective", ev.flags.objective, "ep or kl")->check(CLI::IsMember({"ep", "kl"}));
    ev_cmd->add_option("--tol", ev.flags.tolerance, "convergence tolerance");
    ev_cmd->add_option("--max-iter", ev.flags.max_iterations, "iteration cap per fit");

    SearchCommand se;
    auto* se_cmd = app.add_subcommand("search", "random hyperparameter search on the training split");
    se_cmd->add_option("--data", se.data, "dataset CSV")->required();
    se_cmd->add_option("--schema", se.schema, "dataset schema JSON");
    se_cmd->add_option("--space", se.space, "search space JSON")->required();
    se_cmd->add_option("--n", se.n, "number of configurations");
    se_cmd->add_option("--split", se.split, "training fraction");
    se_cmd->add_option("--out", se.out, "ranked configurations JSON");
    add_fit_flags(se_cmd, se.flags);

    ExportCommand ex;
    auto* ex_cmd = app.add_subcommand("export", "score trajectories as long-format CSV");
    ex_cmd->add_option("--snapshot", ex.snapshot, "fitted snapshot")->required();
    ex_cmd->add_option("--features", ex.features, "feature ids (default: all)")->delimiter(',');
    ex_cmd->add_option("--start", ex.start, "grid start (years since 1970)");
    ex_cmd->add_option("--end", ex.end, "grid end");
    ex_cmd->add_option("--step", ex.step, "grid step");
    ex_cmd->add_option("--out", ex.out, "CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*fit_cmd) return run_fit(fit, threads);
        if (*ev_cmd) {
            // --lr is the Elo rate with --baseline elo and the fit damping otherwise.
            if (ev.baseline != "elo" && ev_cmd->count("--elo-lr") > 0) ev.flags.learning_rate = ev.elo_lr;
            ev.flags.quiet = true;
            return run_evaluate(ev, threads);
        }
        if (*se_cmd) return run_search(se, threads, seed);
        if (*ex_cmd) return run_export(ex);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNoConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
