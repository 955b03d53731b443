// SPDX-License-Identifier: Apache-2.0
//
// Benchmark scoring: key-level and request-level parsing accuracy, HPO result
// aggregation, and end-to-end F/W/P grading of run artifacts.

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "r2m/common.hpp"
#include "r2m/hpo/stats.hpp"
#include "r2m/orchestrator.hpp"
#include "r2m/schema.hpp"
#include "r2m/textmatch.hpp"

namespace r2m::eval {

enum class KeyKind { item, list };

struct KeyVerdict {
    bool correct = false;
    KeyKind kind = KeyKind::item;

    bool operator==(const KeyVerdict&) const = default;
};

/// Scored key paths. Items: data.scenario, data.modality, model.task,
/// model.specific_model, model.speed, model.flops, model.parameters,
/// deploy.device, deploy.inference engine. Lists: data.object, data.specific,
/// model.metrics. Description fields are not scored.
struct KeyLevelResult {
    std::map<std::string, KeyVerdict> verdicts;
    int item_correct = 0;
    int item_total = 0;
    int list_correct = 0;
    int list_total = 0;

    double item_accuracy() const;
    double list_accuracy() const;
    double total_accuracy() const;
    bool all_correct() const { return item_correct == item_total && list_correct == list_total; }
};

/// Both configs are canonicalized first. Enums and quantities compare exactly
/// (quantities by normalized value); free text compares by fuzzy similarity at
/// `threshold`. A list key is correct only if the two lists can be paired
/// one-to-one with every pair matching; metric targets pair by fuzzy name and
/// exact value.
KeyLevelResult compare_configs(const schema::RequestConfig& pred, const schema::RequestConfig& gold,
                               double threshold = textmatch::kDefaultMatchThreshold);
/// Every key counted wrong; used when no configuration was produced.
KeyLevelResult all_wrong();

struct KeyLevelSummary {
    double item = 0.0;
    double list = 0.0;
    double total = 0.0;
    double req_level = 0.0;
    std::size_t requests = 0;
};

/// Pools key counts over all requests. Throws std::invalid_argument if empty.
KeyLevelSummary summarize_key_level(std::span<const KeyLevelResult> results);
/// Fraction of requests with every scored key correct.
double req_level(std::span<const KeyLevelResult> results);

struct HPOAggregate {
    hpo::MeanStd stats;
    std::size_t count = 0;
    /// "m±s" with three decimals.
    std::string cell;
};

/// Per task: arithmetic mean and population standard deviation. Tasks with no
/// values are skipped with a warning.
std::map<std::string, HPOAggregate> aggregate_hpo(const std::map<std::string, std::vector<double>>& per_request_best,
                                                  std::vector<std::string>* warnings = nullptr);

enum class GradeLetter { F, W, P };

struct Grade {
    GradeLetter letter = GradeLetter::F;
    int points = 0;
    std::vector<std::string> reasons;

    bool operator==(const Grade&) const = default;
};

char to_char(GradeLetter g) noexcept;
Grade make_grade(GradeLetter g, std::vector<std::string> reasons = {});

/// F: run not completed, no model, or best metric 0. P: every hard constraint
/// in `gold` holds (metric targets reached, selected card within parameter,
/// FLOPs and speed limits, requested device and engine in the plan). W otherwise.
Grade grade_run(const orchestrator::RunArtifact& artifact, const schema::RequestConfig& gold);

class DuplicateRequestError : public Error {
public:
    using Error::Error;
};

struct GradedRequest {
    Task task = Task::classification;
    std::string request_id;
    Grade grade;
};

inline constexpr int kRequestsPerTask = 20;

struct BenchmarkScore {
    std::map<Task, int> per_task;
    std::map<Task, int> graded_per_task;
    int total = 0;
    std::vector<GradedRequest> grades;
};

/// Sums points per task and overall. Throws DuplicateRequestError on a repeated
/// (task, request id) and std::invalid_argument if a task has more than 20
/// requests.
BenchmarkScore score_benchmark(std::span<const GradedRequest> grades);

struct GoldEntry {
    Task task = Task::classification;
    std::string request_id;
    schema::RequestConfig config;
};

/// Loads <gold_dir>/<task>/<request_id>.json.
std::vector<GoldEntry> load_gold_dir(const std::filesystem::path& gold_dir);

struct EvaluationReport {
    KeyLevelSummary key_level;
    std::map<std::string, HPOAggregate> hpo;
    BenchmarkScore benchmark;
    std::vector<std::string> warnings;
};

/// Scores run artifacts against gold configurations matched by request id.
/// Gold requests without a run grade F; runs without gold are skipped with a
/// warning.
EvaluationReport evaluate_runs(std::span<const orchestrator::RunArtifact> runs, std::span<const GoldEntry> gold,
                               double threshold = textmatch::kDefaultMatchThreshold);

nlohmann::ordered_json to_json(const EvaluationReport& report);
/// Aligned plain-text tables: parsing accuracy (percent), HPO cells and points.
std::string format_report_table(const EvaluationReport& report);

}  // namespace r2m::eval
