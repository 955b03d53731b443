// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: runs criteria 1-10 and prints one PASS/FAIL line for each.
// Exits non-zero if any criterion fails.

#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "r2m/evalharness.hpp"
#include "r2m/hpo/acquisition.hpp"
#include "r2m/hpo/bakeoff.hpp"
#include "r2m/hpo/stats.hpp"
#include "r2m/hpo/surrogate.hpp"
#include "r2m/llm/chat.hpp"
#include "r2m/orchestrator.hpp"
#include "r2m/schema.hpp"
#include "r2m/trainer.hpp"
#include "r2m/util.hpp"

namespace fs = std::filesystem;
using namespace r2m;

namespace {

const fs::path kFixtures = R2M_FIXTURE_DIR;
const fs::path kData = R2M_DATA_DIR;

struct Outcome {
    bool pass = true;
    std::vector<std::string> details;

    void check(bool ok, std::string what) {
        if (!ok) pass = false;
        details.push_back((ok ? "" : "FAILED ") + std::move(what));
    }
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------

Outcome schema_fidelity() {
    Outcome o;
    Stopwatch sw;
    const auto gold = schema::parse_request_config(read_file(kFixtures / "crops_gold.json"), schema::ParseMode::strict);
    const auto canonical = schema::canonicalize(gold);
    const std::string text = schema::serialize_config(canonical.config);
    const auto reparsed = schema::parse_request_config(text, schema::ParseMode::strict);
    o.check(reparsed == canonical.config, "serialized canonical config re-parses to an equal config");
    o.check(text.find("\"inference engine\"") != std::string::npos, "key \"inference engine\" emitted with a space");
    o.check(text.find("inference_engine") == std::string::npos, "no underscore spelling emitted");
    const double t = sw.seconds();
    o.check(t < 1.0, fmt::format("runtime {:.3f}s < 1s", t));
    return o;
}

Outcome unit_normalization() {
    using namespace schema;
    Outcome o;
    auto exact = [&](std::optional<double> got, double want, const char* label) {
        o.check(got.has_value() && *got == want, fmt::format("{} -> {:g}", label, got.value_or(-1.0)));
    };
    exact(normalize_units(FlopsQuantity{20, FlopsUnit::GFLOPs}), 2.0e10, "20 GFLOPs");
    exact(normalize_units(ParamQuantity{5, ParamUnit::B}), 5e9, "5 B");
    exact(normalize_units(SpeedQuantity{2, SpeedUnit::fps}), 500.0, "2 fps");
    exact(normalize_units(SpeedQuantity{3, SpeedUnit::s}), 3000.0, "3 s");
    exact(normalize_units(FlopsQuantity{500, FlopsUnit::GFLOPs}), 5.0e11, "500 GFLOPs");
    o.check(!normalize_units(SpeedQuantity{0, SpeedUnit::none}), "speed {0, none} unset");
    o.check(!normalize_units(FlopsQuantity{0, FlopsUnit::none}), "flops {0, none} unset");
    o.check(!normalize_units(ParamQuantity{0, ParamUnit::none}), "parameters {0, none} unset");
    return o;
}

Outcome key_level_protocol() {
    Outcome o;
    const auto gold = schema::parse_request_config(read_file(kFixtures / "crops_gold.json"), schema::ParseMode::strict);
    {
        const auto r = eval::compare_configs(gold, gold);
        const std::vector<eval::KeyLevelResult> one{r};
        const auto s = eval::summarize_key_level(one);
        o.check(s.item == 1.0 && s.list == 1.0 && s.total == 1.0 && s.req_level == 1.0,
                "identical pred/gold -> item = list = total = req-level = 1.0");
    }
    {
        auto pred = gold;
        pred.data.object = {"crops", "weeds"};
        const auto r = eval::compare_configs(pred, gold);
        bool only_object = !r.verdicts.at("data.object").correct;
        for (const auto& [key, v] : r.verdicts) {
            if (key != "data.object") only_object = only_object && v.correct;
        }
        o.check(only_object && r.list_correct == r.list_total - 1 && r.item_correct == r.item_total,
                "one corrupted list element drops exactly that list key");
    }
    const auto doc = nlohmann::json::parse(read_file(kFixtures / "lamp_cases.json"));
    std::vector<eval::KeyLevelResult> results;
    int verdict_mismatches = 0;
    for (const auto& c : doc.at("cases")) {
        const auto pred = schema::config_from_json(c.at("pred"), schema::ParseMode::strict);
        const auto g = schema::config_from_json(c.at("gold"), schema::ParseMode::strict);
        const auto r = eval::compare_configs(pred, g, doc.at("threshold").get<double>());
        for (const auto& [key, want] : c.at("expected").items()) {
            if (r.verdicts.at(key).correct != want.get<bool>()) ++verdict_mismatches;
        }
        results.push_back(r);
    }
    const auto& sheet = doc.at("sheet");
    int item = 0, list = 0, perfect = 0;
    for (const auto& r : results) {
        item += r.item_correct;
        list += r.list_correct;
        perfect += r.all_correct() ? 1 : 0;
    }
    o.check(verdict_mismatches == 0, fmt::format("{} cases, {} verdict mismatches", results.size(), verdict_mismatches));
    o.check(item == sheet.at("item_correct").get<int>() && list == sheet.at("list_correct").get<int>() &&
                perfect == sheet.at("all_correct_requests").get<int>(),
            fmt::format("score sheet item {}/{} list {}/{} req-level {}/{}", item, sheet.at("item_total").get<int>(),
                        list, sheet.at("list_total").get<int>(), perfect, results.size()));
    const auto s = eval::summarize_key_level(results);
    const double want_item = sheet.at("item_correct").get<double>() / sheet.at("item_total").get<double>();
    const double want_list = sheet.at("list_correct").get<double>() / sheet.at("list_total").get<double>();
    o.check(s.item == want_item && s.list == want_list &&
                s.req_level == sheet.at("all_correct_requests").get<double>() / static_cast<double>(results.size()),
            "summary accuracies equal the sheet ratios");
    return o;
}

// Independent check of the EI closed form: composite Simpson integration of
// max(f - best - xi, 0) against the Gaussian density.
double ei_quadrature(double mean, double variance, double best, double xi) {
    const double sigma = std::sqrt(variance);
    const double lo = std::max(best + xi, mean - 12.0 * sigma);
    const double hi = mean + 12.0 * sigma;
    if (hi <= lo) return 0.0;
    const int n = 20000;
    const double h = (hi - lo) / n;
    auto f = [&](double x) {
        const double z = (x - mean) / sigma;
        return (x - best - xi) * std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    };
    double sum = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) sum += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

Outcome gp_correctness() {
    Outcome o;
    Stopwatch sw;
    Rng rng(20240607);
    std::vector<hpo::EncodedPoint> xs(20);
    std::vector<double> ys(20);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (auto& v : xs[i]) v = rng.uniform01();
        ys[i] = std::sin(3.0 * xs[i][0]) + xs[i][5] * xs[i][9];
    }
    hpo::GPParams params;
    params.noise_variance = 1e-6;
    const auto gp = hpo::GPModel::fit(xs, ys, params);
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, std::fabs(gp.predict(xs[i]).mean - ys[i]));
    o.check(worst <= 1e-6, fmt::format("posterior mean interpolates 20 points, max error {:.2e}", worst));

    double worst_ei = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double mean = rng.uniform(-1.0, 1.0);
        const double variance = rng.uniform(1e-4, 0.5);
        const double best = rng.uniform(-1.0, 1.0);
        const double closed = hpo::expected_improvement(mean, variance, best, hpo::kDefaultXi);
        worst_ei = std::max(worst_ei, std::fabs(closed - ei_quadrature(mean, variance, best, hpo::kDefaultXi)));
    }
    o.check(worst_ei <= 1e-6, fmt::format("EI vs quadrature on 100 triples, max error {:.2e}", worst_ei));
    const double t = sw.seconds();
    o.check(t < 5.0, fmt::format("runtime {:.2f}s < 5s", t));
    return o;
}

Outcome best_of_k() {
    Outcome o;
    Rng rng(7);
    std::vector<std::vector<double>> populations(1);
    for (int i = 0; i < 100000; ++i) populations[0].push_back(rng.uniform01());
    std::vector<hpo::MeanStd> stats;
    bool monotone = true;
    try {
        stats = hpo::best_of_k_stats(populations, 10000, 11, 10);
    } catch (const std::logic_error& e) {
        monotone = false;
        o.check(false, e.what());
        return o;
    }
    double worst = 0.0;
    for (int k = 1; k <= 10; ++k) {
        worst = std::max(worst, std::fabs(stats[static_cast<std::size_t>(k - 1)].mean - k / (k + 1.0)));
        if (k > 1 && stats[static_cast<std::size_t>(k - 1)].mean < stats[static_cast<std::size_t>(k - 2)].mean) {
            monotone = false;
        }
    }
    o.check(worst <= 0.01, fmt::format("max |mean - k/(k+1)| over k=1..10 is {:.4f}", worst));
    o.check(monotone, "mean curve non-decreasing");
    return o;
}

Outcome strategy_ordering() {
    Outcome o;
    Stopwatch sw;
    hpo::BakeoffConfig cfg;
    const hpo::StrategyArm random5{hpo::Strategy::random, 5};
    const hpo::StrategyArm gp5{hpo::Strategy::bayes_gp, 5};
    const hpo::StrategyArm rf5{hpo::Strategy::bayes_rf, 5};
    const hpo::StrategyArm random3{hpo::Strategy::random, 3};
    cfg.arms = {random5, gp5, rf5, random3};
    cfg.surfaces = 20;
    cfg.seeds = 50;
    const auto result = hpo::run_bakeoff(cfg);
    const double t = sw.seconds();
    const double gp_vs_r5 = result.win_rate(gp5, random5);
    const double gp_vs_r3 = result.win_rate(gp5, random3, true);
    const double rf_vs_r3 = result.win_rate(rf5, random3, true);
    o.check(gp_vs_r5 >= 0.80, fmt::format("bayes_gp@5 >= random@5 on {:.1f}% of {} surfaces (need 80%)",
                                          100.0 * gp_vs_r5, result.surfaces.size()));
    o.check(gp_vs_r3 >= 0.95, fmt::format("bayes_gp@5 > random@3 on {:.1f}% (need 95%)", 100.0 * gp_vs_r3));
    o.check(rf_vs_r3 >= 0.95, fmt::format("bayes_rf@5 > random@3 on {:.1f}% (need 95%)", 100.0 * rf_vs_r3));
    o.check(t < 120.0, fmt::format("runtime {:.1f}s < 120s", t));
    return o;
}

Outcome oracle_gap() {
    Outcome o;
    trainer::SimulatedTrainerOptions topts;
    topts.noise = false;
    topts.failure_injection = false;
    trainer::SimulatedTrainer executor(topts);
    int within = 0;
    double slowest = 0.0;
    constexpr int kSurfaces = 50;
    for (int i = 0; i < kSurfaces; ++i) {
        const Task task = kAllTasks[static_cast<std::size_t>(i) % std::size(kAllTasks)];
        hpo::HPOTarget target;
        target.request_id = hpo::surface_id(task, i);
        target.task = task;
        hpo::HPOOptions opts;
        opts.strategy = hpo::Strategy::bayes_gp;
        opts.budget = 25;
        opts.seed = static_cast<std::uint64_t>(i) + 1;
        const double best = hpo::run_hpo(opts, executor, target).best.metric_value;
        Stopwatch sw;
        const auto oracle = trainer::oracle_best(trainer::SurfaceParams::derive(target.request_id, task),
                                                 trainer::SurfaceGrid::standard(hpo::search_space_for(task)));
        slowest = std::max(slowest, sw.seconds());
        if (oracle.score - best <= 0.05) ++within;
    }
    o.check(within >= 45, fmt::format("bayes_gp@25 within 0.05 of the oracle on {}/{} surfaces (need 45)", within,
                                      kSurfaces));
    o.check(slowest < 10.0, fmt::format("slowest oracle {:.3f}s < 10s", slowest));
    return o;
}

Outcome correlation_analysis() {
    Outcome o;
    const auto space = hpo::search_space_for(Task::detection);
    // Optimum at the low end of the learning-rate range: higher rates score worse.
    trainer::SurfaceParams params = trainer::SurfaceParams::defaults(Task::detection);
    params.lr_opt = -7.5;
    params.lr_width = 1.5;
    params.d = 0.0;
    Rng rng(99);
    std::vector<hpo::Observation> data;
    for (int i = 0; i < 500; ++i) {
        const auto s = hpo::sample_uniform(space, rng);
        data.push_back({s, trainer::surface_score(params, s)});
    }
    const auto report = hpo::correlation_report(data);
    const double r_lr = report.pearson.at("learning rate");
    const double r_batch = report.pearson.at("batch size");
    o.check(r_lr < 0.0, fmt::format("pearson(log lr, metric) = {:.3f} is negative", r_lr));
    o.check(std::fabs(r_batch) <= 0.1, fmt::format("D = 0: |pearson(batch, metric)| = {:.3f} <= 0.1", std::fabs(r_batch)));

    // Optimizer effect with noise off: every base setting is scored under each optimizer.
    trainer::SurfaceParams quiet = trainer::SurfaceParams::defaults(Task::detection);
    quiet.noise_amplitude = 0.0;
    std::vector<hpo::Observation> paired;
    for (int i = 0; i < 500; ++i) {
        auto s = hpo::sample_uniform(space, rng);
        for (auto opt : hpo::kOptimizers) {
            s.optimizer = opt;
            paired.push_back({s, trainer::surface_score(quiet, s)});
        }
    }
    const auto by_opt = hpo::correlation_report(paired).by_optimizer;
    const double adamw = by_opt.at("AdamW").median;
    bool dominates = true;
    std::string medians;
    for (const auto& [name, q] : by_opt) {
        medians += fmt::format(" {}={:.4f}", name, q.median);
        if (name != "AdamW" && !(adamw > q.median)) dominates = false;
    }
    o.check(dominates, "AdamW median dominates:" + medians);
    return o;
}

std::string fixed_clock() { return "2024-01-01T00:00:00Z"; }

struct E2E {
    registry::Registry zoo = registry::load_zoo(kData / "zoo.json");
    textmatch::Taxonomy taxonomy = textmatch::Taxonomy::load(kData / "taxonomy.tsv");

    orchestrator::RunArtifact run(const std::string& text, llm::ChatClient& client, std::uint64_t seed,
                                  const std::string& request_id = {}, const std::string& run_id = {}) {
        trainer::SimulatedTrainer executor;
        orchestrator::PipelineOptions opts;
        opts.seed = seed;
        opts.request_id = request_id;
        opts.run_id = run_id;
        opts.clock = fixed_clock;
        return orchestrator::run_pipeline(text, opts, {&zoo, &taxonomy, &client, &executor});
    }
};

std::string corrupt_reply_text() { return "###parse###{\"data\": {\"scenario\": \"agriculture\""; }

Outcome end_to_end() {
    Outcome o;
    E2E e2e;
    const std::string request = read_file(kFixtures / "crops_request.txt");
    const auto gold = schema::parse_request_config(read_file(kFixtures / "crops_gold.json"), schema::ParseMode::strict);

    auto good = llm::ScriptedChatClient::load(kFixtures / "client_crops.json");
    const auto run = e2e.run(request, good, 1);
    const auto grade = eval::grade_run(run, gold);
    const double best = run.hpo ? run.hpo->best.metric_value : 0.0;
    o.check(run.status == orchestrator::RunStatus::completed && grade.letter == eval::GradeLetter::P &&
                grade.points == 2 && best > 0.75,
            fmt::format("crops request: {}, best {:.4f}, grade {}", orchestrator::to_string(run.status), best,
                        eval::to_char(grade.letter)));

    llm::ScriptedChatClient bad({corrupt_reply_text(), corrupt_reply_text()});
    const auto failed = e2e.run(request, bad, 1);
    const auto failed_grade = eval::grade_run(failed, gold);
    o.check(failed.status == orchestrator::RunStatus::failed_understanding &&
                failed_grade.letter == eval::GradeLetter::F && failed_grade.points == 0 && bad.calls() == 2,
            fmt::format("corrupted parse twice: {}, grade {} ({} points)", orchestrator::to_string(failed.status),
                        eval::to_char(failed_grade.letter), failed_grade.points));

    // 12-request benchmark: gold replies for most requests, corrupted ones for a few.
    const fs::path bench = kFixtures / "bench";
    const auto manifest = nlohmann::json::parse(read_file(bench / "requests.json"));
    const auto golds = eval::load_gold_dir(bench / "gold");
    std::map<std::string, const eval::GoldEntry*> gold_by_id;
    for (const auto& g : golds) gold_by_id[g.request_id] = &g;
    std::vector<orchestrator::RunArtifact> runs;
    std::map<Task, int> expected_per_task;
    int expected_total = 0;
    for (const auto& entry : manifest) {
        const std::string id = entry.at("id").get<std::string>();
        std::vector<std::string> replies;
        if (entry.at("reply") == "gold") {
            replies.push_back("###parse###" + schema::config_to_json(gold_by_id.at(id)->config).dump());
        } else {
            replies = {corrupt_reply_text(), corrupt_reply_text()};
        }
        llm::ScriptedChatClient client(replies);
        runs.push_back(e2e.run(entry.at("text").get<std::string>(), client, 1, id));
        const std::string expected = entry.at("expected").get<std::string>();
        const int points = expected == "P" ? 2 : expected == "W" ? 1 : 0;
        expected_per_task[*task_from_string(entry.at("task").get<std::string>())] += points;
        expected_total += points;
    }
    const auto report = eval::evaluate_runs(runs, golds);
    int letter_mismatches = 0;
    for (const auto& g : report.benchmark.grades) {
        for (const auto& entry : manifest) {
            if (entry.at("id") == g.request_id &&
                entry.at("expected").get<std::string>() != std::string(1, eval::to_char(g.grade.letter))) {
                ++letter_mismatches;
            }
        }
    }
    o.check(report.benchmark.grades.size() == 12 && letter_mismatches == 0 &&
                report.benchmark.per_task == expected_per_task && report.benchmark.total == expected_total,
            fmt::format("12-request benchmark total {} (expected {}), {} grade mismatches", report.benchmark.total,
                        expected_total, letter_mismatches));
    return o;
}

Outcome determinism() {
    Outcome o;
    E2E e2e;
    const std::string request = read_file(kFixtures / "crops_request.txt");
    auto a_client = llm::ScriptedChatClient::load(kFixtures / "client_crops.json");
    auto b_client = llm::ScriptedChatClient::load(kFixtures / "client_crops.json");
    const auto a = e2e.run(request, a_client, 42, {}, "determinism");
    const auto b = e2e.run(request, b_client, 42, {}, "determinism");
    const std::string ja = orchestrator::to_json(a).dump(2);
    const std::string jb = orchestrator::to_json(b).dump(2);
    o.check(ja == jb, fmt::format("artifact JSON identical ({} bytes)", ja.size()));

    const fs::path dir_a = fs::temp_directory_path() / "r2m-acceptance-a";
    const fs::path dir_b = fs::temp_directory_path() / "r2m-acceptance-b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    const auto pa = orchestrator::persist_run(a, dir_a);
    const auto pb = orchestrator::persist_run(b, dir_b);
    bool files_equal = true;
    for (const char* name : {"artifact.json", "trace.jsonl", "plan.json"}) {
        files_equal = files_equal && read_file(pa / name) == read_file(pb / name);
    }
    o.check(files_equal, "persisted run files byte-identical");
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"schema fidelity", schema_fidelity},
        {"unit normalization", unit_normalization},
        {"key-level protocol", key_level_protocol},
        {"GP correctness", gp_correctness},
        {"best-of-k statistics", best_of_k},
        {"strategy ordering", strategy_ordering},
        {"oracle gap", oracle_gap},
        {"correlation analysis", correlation_analysis},
        {"end-to-end offline run", end_to_end},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        if (!o.pass) ++failures;
        std::string detail;
        for (const auto& d : o.details) detail += (detail.empty() ? "" : "; ") + d;
        fmt::print("criterion {:>2} {:<24} {}  {}\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", detail);
        std::fflush(stdout);
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
    return failures == 0 ? 0 : 1;
}
