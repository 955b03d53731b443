// SPDX-License-Identifier: Apache-2.0

#include "r2m/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>

#include <fmt/core.h>

#include "r2m/util.hpp"

namespace r2m::eval {

using schema::CanonicalConfig;
using schema::RequestConfig;

double KeyLevelResult::item_accuracy() const {
    return item_total == 0 ? 1.0 : static_cast<double>(item_correct) / item_total;
}

double KeyLevelResult::list_accuracy() const {
    return list_total == 0 ? 1.0 : static_cast<double>(list_correct) / list_total;
}

double KeyLevelResult::total_accuracy() const {
    const int n = item_total + list_total;
    return n == 0 ? 1.0 : static_cast<double>(item_correct + list_correct) / n;
}

namespace {

constexpr const char* kItemKeys[] = {"data.scenario",    "data.modality", "model.task",
                                     "model.specific_model", "model.speed", "model.flops",
                                     "model.parameters", "deploy.device", "deploy.inference engine"};
constexpr const char* kListKeys[] = {"data.object", "data.specific", "model.metrics"};

bool same_number(const std::optional<double>& a, const std::optional<double>& b) {
    if (!a || !b) return !a && !b;
    return std::fabs(*a - *b) <= 1e-9 * std::max({1.0, std::fabs(*a), std::fabs(*b)});
}

bool same_value(double a, double b) { return same_number(std::optional(a), std::optional(b)); }

bool fuzzy_equal(const std::string& a, const std::string& b, double threshold) {
    return textmatch::similarity(a, b) >= threshold;
}

/// True if a perfect one-to-one pairing exists under `match`.
template <class T>
bool lists_match(const std::vector<T>& a, const std::vector<T>& b, const std::function<bool(const T&, const T&)>& match) {
    if (a.size() != b.size()) return false;
    const std::size_t n = a.size();
    std::vector<std::vector<std::size_t>> edges(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (match(a[i], b[j])) edges[i].push_back(j);
        }
    }
    std::vector<std::ptrdiff_t> owner(n, -1);
    std::vector<char> visited;
    std::function<bool(std::size_t)> augment = [&](std::size_t i) {
        for (std::size_t j : edges[i]) {
            if (visited[j]) continue;
            visited[j] = 1;
            if (owner[j] < 0 || augment(static_cast<std::size_t>(owner[j]))) {
                owner[j] = static_cast<std::ptrdiff_t>(i);
                return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < n; ++i) {
        visited.assign(n, 0);
        if (!augment(i)) return false;
    }
    return true;
}

void record(KeyLevelResult& r, const char* key, KeyKind kind, bool correct) {
    r.verdicts[key] = {correct, kind};
    if (kind == KeyKind::item) {
        ++r.item_total;
        r.item_correct += correct ? 1 : 0;
    } else {
        ++r.list_total;
        r.list_correct += correct ? 1 : 0;
    }
}

}  // namespace

KeyLevelResult compare_configs(const RequestConfig& pred, const RequestConfig& gold, double threshold) {
    const CanonicalConfig p = schema::canonicalize(pred);
    const CanonicalConfig g = schema::canonicalize(gold);
    const auto& pd = p.config.data;
    const auto& gd = g.config.data;
    const auto& pm = p.config.model;
    const auto& gm = g.config.model;
    KeyLevelResult r;

    record(r, "data.scenario", KeyKind::item, fuzzy_equal(pd.scenario, gd.scenario, threshold));
    record(r, "data.modality", KeyKind::item, fuzzy_equal(pd.modality, gd.modality, threshold));
    record(r, "model.task", KeyKind::item, pm.task == gm.task);
    record(r, "model.specific_model", KeyKind::item, fuzzy_equal(pm.specific_model, gm.specific_model, threshold));
    record(r, "model.speed", KeyKind::item, same_number(p.speed_ms_per_sample, g.speed_ms_per_sample));
    record(r, "model.flops", KeyKind::item, same_number(p.flops_total, g.flops_total));
    record(r, "model.parameters", KeyKind::item, same_number(p.parameter_count, g.parameter_count));
    record(r, "deploy.device", KeyKind::item, p.config.deploy.device == g.config.deploy.device);
    record(r, "deploy.inference engine", KeyKind::item,
           p.config.deploy.inference_engine == g.config.deploy.inference_engine);

    const std::function<bool(const std::string&, const std::string&)> text_match =
        [&](const std::string& a, const std::string& b) { return fuzzy_equal(a, b, threshold); };
    record(r, "data.object", KeyKind::list, lists_match(pd.object, gd.object, text_match));
    record(r, "data.specific", KeyKind::list, lists_match(pd.specific, gd.specific, text_match));
    const std::function<bool(const schema::MetricTarget&, const schema::MetricTarget&)> metric_match =
        [&](const schema::MetricTarget& a, const schema::MetricTarget& b) {
            return fuzzy_equal(a.name, b.name, threshold) && same_value(a.value, b.value);
        };
    record(r, "model.metrics", KeyKind::list, lists_match(pm.metrics, gm.metrics, metric_match));
    return r;
}

KeyLevelResult all_wrong() {
    KeyLevelResult r;
    for (const char* k : kItemKeys) record(r, k, KeyKind::item, false);
    for (const char* k : kListKeys) record(r, k, KeyKind::list, false);
    return r;
}

double req_level(std::span<const KeyLevelResult> results) {
    if (results.empty()) throw std::invalid_argument("req_level: no results");
    const auto ok = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.all_correct(); });
    return static_cast<double>(ok) / static_cast<double>(results.size());
}

KeyLevelSummary summarize_key_level(std::span<const KeyLevelResult> results) {
    if (results.empty()) throw std::invalid_argument("summarize_key_level: no results");
    KeyLevelResult pooled;
    for (const auto& r : results) {
        pooled.item_correct += r.item_correct;
        pooled.item_total += r.item_total;
        pooled.list_correct += r.list_correct;
        pooled.list_total += r.list_total;
    }
    KeyLevelSummary s;
    s.item = pooled.item_accuracy();
    s.list = pooled.list_accuracy();
    s.total = pooled.total_accuracy();
    s.req_level = req_level(results);
    s.requests = results.size();
    return s;
}

std::map<std::string, HPOAggregate> aggregate_hpo(const std::map<std::string, std::vector<double>>& per_request_best,
                                                  std::vector<std::string>* warnings) {
    std::map<std::string, HPOAggregate> out;
    for (const auto& [task, values] : per_request_best) {
        if (values.empty()) {
            if (warnings != nullptr) warnings->push_back("aggregate_hpo: task '" + task + "' has no values, skipped");
            continue;
        }
        const double n = static_cast<double>(values.size());
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= n;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        HPOAggregate agg;
        agg.stats = {mean, std::sqrt(ss / n)};
        agg.count = values.size();
        agg.cell = format_mean_std(agg.stats.mean, agg.stats.stddev, 3);
        out[task] = std::move(agg);
    }
    return out;
}

char to_char(GradeLetter g) noexcept {
    switch (g) {
        case GradeLetter::F: return 'F';
        case GradeLetter::W: return 'W';
        case GradeLetter::P: return 'P';
    }
    return 'F';
}

Grade make_grade(GradeLetter g, std::vector<std::string> reasons) {
    Grade grade;
    grade.letter = g;
    grade.points = g == GradeLetter::P ? 2 : (g == GradeLetter::W ? 1 : 0);
    grade.reasons = std::move(reasons);
    return grade;
}

Grade grade_run(const orchestrator::RunArtifact& artifact, const RequestConfig& gold) {
    using orchestrator::RunStatus;
    if (artifact.status != RunStatus::completed) {
        return make_grade(GradeLetter::F, {"run " + std::string(orchestrator::to_string(artifact.status))});
    }
    if (!artifact.model) return make_grade(GradeLetter::F, {"no model selected"});
    if (!artifact.hpo || artifact.hpo->best.metric_value <= 0.0) {
        return make_grade(GradeLetter::F, {"best metric is 0"});
    }

    const CanonicalConfig g = schema::canonicalize(gold);
    const double achieved = artifact.hpo->best.metric_value;
    const auto& card = *artifact.model;
    std::vector<std::string> misses;
    for (const auto& target : g.config.model.metrics) {
        if (target.value > achieved) {
            misses.push_back(fmt::format("{} {:.4f} below target {:.4f}", target.name, achieved, target.value));
        }
    }
    auto check_limit = [&](const char* what, double card_value, const std::optional<double>& limit) {
        if (limit && card_value > *limit * (1.0 + 1e-12)) {
            misses.push_back(fmt::format("{} {} exceeds limit {}", what, card_value, *limit));
        }
    };
    check_limit("parameters", card.params_m * 1e6, g.parameter_count);
    check_limit("flops", card.flops_g * 1e9, g.flops_total);
    check_limit("speed_ms", card.speed_ms, g.speed_ms_per_sample);
    const auto& deploy = g.config.deploy;
    if (deploy.device != schema::Device::none && (!artifact.plan || artifact.plan->device != deploy.device)) {
        misses.push_back("device " + std::string(schema::to_string(deploy.device)) + " not honoured");
    }
    if (deploy.inference_engine != schema::Engine::none &&
        (!artifact.plan || artifact.plan->engine != deploy.inference_engine)) {
        misses.push_back("engine " + std::string(schema::to_string(deploy.inference_engine)) + " not honoured");
    }
    if (misses.empty()) return make_grade(GradeLetter::P);
    return make_grade(GradeLetter::W, std::move(misses));
}

BenchmarkScore score_benchmark(std::span<const GradedRequest> grades) {
    BenchmarkScore score;
    std::set<std::pair<Task, std::string>> seen;
    for (Task t : kAllTasks) {
        score.per_task[t] = 0;
        score.graded_per_task[t] = 0;
    }
    for (const auto& g : grades) {
        if (!seen.emplace(g.task, g.request_id).second) {
            throw DuplicateRequestError(
                fmt::format("duplicate request id '{}' in task {}", g.request_id, to_string(g.task)));
        }
        if (++score.graded_per_task[g.task] > kRequestsPerTask) {
            throw std::invalid_argument(
                fmt::format("task {} has more than {} graded requests", to_string(g.task), kRequestsPerTask));
        }
        score.per_task[g.task] += g.grade.points;
        score.total += g.grade.points;
        score.grades.push_back(g);
    }
    return score;
}

std::vector<GoldEntry> load_gold_dir(const std::filesystem::path& gold_dir) {
    if (!std::filesystem::is_directory(gold_dir)) throw IoError("gold directory not found: " + gold_dir.string());
    std::vector<GoldEntry> out;
    for (Task task : kAllTasks) {
        const auto dir = gold_dir / std::string(to_string(task));
        if (!std::filesystem::is_directory(dir)) continue;
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            GoldEntry e;
            e.task = task;
            e.request_id = f.stem().string();
            e.config = schema::parse_request_config(read_file(f), schema::ParseMode::strict);
            out.push_back(std::move(e));
        }
    }
    return out;
}

EvaluationReport evaluate_runs(std::span<const orchestrator::RunArtifact> runs, std::span<const GoldEntry> gold,
                               double threshold) {
    EvaluationReport report;
    std::map<std::string, const orchestrator::RunArtifact*> by_request;
    for (const auto& run : runs) {
        if (!by_request.emplace(run.request_id, &run).second) {
            report.warnings.push_back("more than one run for request '" + run.request_id + "', keeping the first");
        }
    }
    std::set<std::string> gold_ids;
    std::vector<KeyLevelResult> key_results;
    std::map<std::string, std::vector<double>> hpo_values;
    std::vector<GradedRequest> graded;
    for (const auto& entry : gold) {
        gold_ids.insert(entry.request_id);
        auto it = by_request.find(entry.request_id);
        GradedRequest g{entry.task, entry.request_id, make_grade(GradeLetter::F, {"no run found"})};
        if (it == by_request.end()) {
            key_results.push_back(all_wrong());
            hpo_values[std::string(to_string(entry.task))].push_back(0.0);
        } else {
            const auto& run = *it->second;
            key_results.push_back(run.config ? compare_configs(*run.config, entry.config, threshold) : all_wrong());
            hpo_values[std::string(to_string(entry.task))].push_back(run.hpo ? run.hpo->best.metric_value : 0.0);
            g.grade = grade_run(run, entry.config);
        }
        graded.push_back(std::move(g));
    }
    for (const auto& [id, run] : by_request) {
        if (!gold_ids.count(id)) report.warnings.push_back("run for request '" + id + "' has no gold file, skipped");
    }
    if (!key_results.empty()) report.key_level = summarize_key_level(key_results);
    report.hpo = aggregate_hpo(hpo_values, &report.warnings);
    report.benchmark = score_benchmark(graded);
    return report;
}

nlohmann::ordered_json to_json(const EvaluationReport& report) {
    nlohmann::ordered_json j;
    const auto& k = report.key_level;
    j["key_level"] = {{"item", k.item}, {"list", k.list}, {"total", k.total}, {"req_level", k.req_level},
                      {"requests", k.requests}};
    nlohmann::ordered_json hpo = nlohmann::ordered_json::object();
    for (const auto& [task, agg] : report.hpo) {
        hpo[task] = {{"mean", agg.stats.mean}, {"std", agg.stats.stddev}, {"count", agg.count}, {"cell", agg.cell}};
    }
    j["hpo"] = std::move(hpo);
    nlohmann::ordered_json bench;
    for (const auto& [task, points] : report.benchmark.per_task) bench["per_task"][std::string(to_string(task))] = points;
    bench["total"] = report.benchmark.total;
    bench["max_total"] = 2 * kRequestsPerTask * static_cast<int>(std::size(kAllTasks));
    auto grades = nlohmann::ordered_json::array();
    for (const auto& g : report.benchmark.grades) {
        grades.push_back({{"task", std::string(to_string(g.task))},
                          {"request_id", g.request_id},
                          {"grade", std::string(1, to_char(g.grade.letter))},
                          {"points", g.grade.points},
                          {"reasons", g.grade.reasons}});
    }
    bench["grades"] = std::move(grades);
    j["benchmark"] = std::move(bench);
    j["warnings"] = report.warnings;
    return j;
}

namespace {

std::string render_rows(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows) {
        width.resize(std::max(width.size(), row.size()), 0);
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::string out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::string line;
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            if (c > 0) line += "  ";
            line += fmt::format("{:<{}}", rows[r][c], width[c]);
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + '\n';
        if (r == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w;
            out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
        }
    }
    return out;
}

}  // namespace

std::string format_report_table(const EvaluationReport& report) {
    const auto& k = report.key_level;
    auto pct = [](double v) { return fmt::format("{:.2f}", v * 100.0); };
    std::string out = "Request understanding (%)\n";
    out += render_rows({{"Requests", "Item", "List", "Total", "Req-Level"},
                        {std::to_string(k.requests), pct(k.item), pct(k.list), pct(k.total), pct(k.req_level)}});

    std::vector<std::string> header{""};
    std::vector<std::string> cells{"best metric"};
    for (const auto& [task, agg] : report.hpo) {
        header.push_back(task);
        cells.push_back(agg.cell);
    }
    out += "\nHyperparameter optimization\n" + render_rows({header, cells});

    std::vector<std::string> bheader;
    std::vector<std::string> bcells;
    for (const auto& [task, points] : report.benchmark.per_task) {
        bheader.emplace_back(to_string(task));
        bcells.push_back(fmt::format("{}/{}", points, 2 * kRequestsPerTask));
    }
    bheader.emplace_back("Total");
    bcells.push_back(fmt::format("{}/{}", report.benchmark.total, 2 * kRequestsPerTask * 4));
    out += "\nEnd-to-end score\n" + render_rows({bheader, bcells});
    return out;
}

}  // namespace r2m::eval
