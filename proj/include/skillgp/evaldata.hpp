#pragma once

#include "skillgp/inference.hpp"
#include "skillgp/model.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace skillgp {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kDaysPerYear = 365.25;

enum class OutcomeSchema {
    Ordinal,  ///< win / loss (/ tie) in the outcome column
    Points,   ///< points_i and points_j columns
};

/// {"ties": bool, "outcome": "ordinal" | "points", "skip_malformed": bool}
struct DatasetSchema {
    bool ties = false;
    OutcomeSchema outcome = OutcomeSchema::Ordinal;
    bool skip_malformed = false;
};

DatasetSchema dataset_schema_from_json(const nlohmann::json& j);
nlohmann::json dataset_schema_to_json(const DatasetSchema& schema);

struct MatchRecord {
    double time = 0.0;      ///< years since 1970-01-01 UTC
    std::int64_t day = 0;   ///< whole days since 1970-01-01 UTC
    std::string comp_i;
    std::string comp_j;
    int outcome = 0;        ///< +1: i wins, -1: j wins, 0: tie
    std::optional<std::array<std::int64_t, 2>> points;
    bool home = false;         ///< i plays at home
    bool first_mover = false;  ///< i moves first
    std::size_t line = 0;      ///< 1-based line in the source file
};

/// Seconds since the Unix epoch from "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS][Z]"
/// or an integer; nullopt if unparseable.
std::optional<double> parse_timestamp(const std::string& text);

struct ParsedDataset {
    std::vector<MatchRecord> records;  ///< stable-sorted by time
    std::vector<std::string> skipped;  ///< diagnostics for rows dropped under skip_malformed
};

/// Throws DataError naming the line unless schema.skip_malformed.
ParsedDataset parse_dataset(std::istream& in, const DatasetSchema& schema, const std::string& source = "<input>");
ParsedDataset parse_dataset(const std::filesystem::path& path, const DatasetSchema& schema);

struct Split {
    std::vector<MatchRecord> train;
    std::vector<MatchRecord> test;
};

/// Index of the first test record: ceil(fraction * n).
std::size_t split_index(std::size_t n, double fraction);
Split chronological_split(const std::vector<MatchRecord>& records, double fraction = 0.7);

struct MatchProbs {
    double p_loss = 0.0;
    double p_tie = 0.0;
    double p_win = 0.0;

    double prob(int outcome) const { return outcome > 0 ? p_win : outcome < 0 ? p_loss : p_tie; }
};

/*
 * Maps match records onto model observations.
 *
 * d = s_i - s_j, plus s_adv when i plays at home or moves first (requires an
 * advantage kernel), plus sign * s_{ij} for the pair's interaction feature
 * (requires an interaction kernel). Ordinal likelihoods see one observation
 * per match, Gaussian the point difference, Poisson-exp one observation per
 * side with rates exp(d) and exp(-d).
 */
class MatchEncoder {
public:
    /// Throws ConfigError when likelihood and schema do not fit together.
    MatchEncoder(ModelSpec spec, DatasetSchema schema);

    const ModelSpec& spec() const { return spec_; }
    const DatasetSchema& schema() const { return schema_; }
    bool ternary() const { return schema_.ties; }

    Model make_model(double epoch) const;
    /// Registers missing features. Throws ConfigError if no kernel is available for one.
    void ensure_features(Model& model, const MatchRecord& r) const;
    std::vector<Model::Input> inputs(const MatchRecord& r) const;
    void observe(Model& model, const MatchRecord& r) const;

    Coefficients coefficients(const MatchRecord& r) const;
    /// Outcome probabilities; features absent from the model use their prior.
    MatchProbs predict(const Model& model, const MatchRecord& r) const;

private:
    Marginal prior_marginal(const std::string& id, double epoch, double t) const;

    ModelSpec spec_;
    DatasetSchema schema_;
};

/// Epoch used by the evaluation tools: midnight of the first record's day.
double default_epoch(const std::vector<MatchRecord>& records);

struct Prediction {
    std::size_t index = 0;  ///< position in the evaluated record list
    MatchProbs probs;
    int outcome = 0;
};

struct EvalResult {
    double log_loss = 0.0;
    double accuracy = 0.0;
    std::vector<Prediction> predictions;
    // Rolling fits only.
    int fits = 0;
    int max_fit_iterations = 0;
    bool all_converged = true;
};

/// -log p(outcome); probabilities below the smallest normal double are floored there.
double record_log_loss(const MatchProbs& p, int outcome);
/// 1 if the outcome is the unique argmax, 1/k if it shares the argmax with k-1 others, else 0.
double record_accuracy(const MatchProbs& p, int outcome);
/// Mean log loss and accuracy over result.predictions, summed in order.
void recompute_metrics(EvalResult& result);

struct EvalOptions {
    double train_fraction = 0.7;
    int granularity_days = 1;
    FitConfig fit;
};

/// Predicts every test record from a model fitted on all records of earlier days.
EvalResult rolling_evaluate(const MatchEncoder& encoder, const std::vector<MatchRecord>& records,
                            const EvalOptions& options);

/// Predictions of a fixed model on the given records.
EvalResult evaluate_model(const MatchEncoder& encoder, const Model& model, const std::vector<MatchRecord>& records,
                          std::size_t first_index = 0);

/// Uniform predictions over the outcome classes.
EvalResult random_baseline(const std::vector<MatchRecord>& records, bool ternary, std::size_t first_index = 0);

enum class EloLink { Logit, Probit };

struct EloConfig {
    double learning_rate = 0.1;
    EloLink link = EloLink::Logit;
    /// Positive: three-outcome predictions F(d - a), F(-d - a) and the rest for a tie.
    double draw_margin = 0.0;
};

EloConfig elo_config_from_json(const nlohmann::json& j);
nlohmann::json elo_config_to_json(const EloConfig& config);

/// Outcome probabilities of the Elo link at score difference d.
MatchProbs elo_probs(const EloConfig& config, double d);
/// Derivative of log p(outcome | d) with respect to d.
double elo_gradient(const EloConfig& config, int outcome, double d);

/// Single online pass; each record is predicted before its update. Only
/// records from first_index on are scored.
EvalResult elo_baseline(const std::vector<MatchRecord>& records, const EloConfig& config,
                        std::size_t first_index = 0);

/// Per-record predictions as CSV: index,t,comp_i,comp_j,outcome,p_loss,p_tie,p_win.
void write_predictions_csv(std::ostream& out, const EvalResult& result, const std::vector<MatchRecord>& records);
/// Reads back what write_predictions_csv wrote. Throws DataError.
std::vector<Prediction> read_predictions_csv(std::istream& in);

nlohmann::json eval_result_to_json(const EvalResult& result);

}  // namespace skillgp
