// SPDX-License-Identifier: Apache-2.0
//
// r2m: request-to-model pipeline driver.

#include <CLI11.hpp>
#include <fmt/core.h>

#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "r2m/evalharness.hpp"
#include "r2m/hpo/bakeoff.hpp"
#include "r2m/llm/agents.hpp"
#include "r2m/llm/prompts.hpp"
#include "r2m/orchestrator.hpp"
#include "r2m/util.hpp"

namespace fs = std::filesystem;
using namespace r2m;

namespace {

// Exit codes, one per failure class.
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitUnderstanding = 3;
constexpr int kExitSelection = 4;
constexpr int kExitTraining = 5;

std::string request_from(const std::string& file, const std::string& text) {
    if (!text.empty()) return text;
    if (file.empty()) throw std::invalid_argument("give --request FILE or --text TEXT");
    return read_file(file);
}

textmatch::Taxonomy load_taxonomy(const std::string& path) {
    return path.empty() ? textmatch::Taxonomy{} : textmatch::Taxonomy::load(path);
}

std::unique_ptr<trainer::TrainerExecutor> make_executor(const std::string& command, const std::string& endpoint,
                                                        double timeout_s, bool noise, bool failures) {
    if (!command.empty() || !endpoint.empty()) {
        trainer::AdapterConfig cfg;
        cfg.command = command;
        cfg.endpoint = endpoint;
        cfg.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0));
        return std::make_unique<trainer::ExternalTrainer>(cfg);
    }
    trainer::SimulatedTrainerOptions opts;
    opts.noise = noise;
    opts.failure_injection = failures;
    return std::make_unique<trainer::SimulatedTrainer>(opts);
}

hpo::Strategy parse_strategy(const std::string& s) {
    auto v = hpo::strategy_from_string(s);
    if (!v) throw std::invalid_argument("unknown strategy '" + s + "' (random, bayes_gp, bayes_rf, llm)");
    return *v;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const std::string item = trim(s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

int exit_code_for(orchestrator::RunStatus s) {
    switch (s) {
        case orchestrator::RunStatus::completed: return 0;
        case orchestrator::RunStatus::failed_understanding: return kExitUnderstanding;
        case orchestrator::RunStatus::failed_selection: return kExitSelection;
        case orchestrator::RunStatus::failed_training: return kExitTraining;
    }
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Turns a model request into a configuration, selected data and model, tuned hyperparameters and a "
                 "deployment plan."};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run the full pipeline on one request");
    std::string run_request, run_text, run_zoo, run_tax, run_client, run_runs = "runs", run_id, run_request_id;
    std::string run_strategy = "bayes_gp", run_trainer_cmd, run_trainer_url;
    int run_budget = 5;
    std::uint64_t run_seed = 0;
    double run_timeout = 600.0;
    bool run_no_noise = false, run_no_failures = false;
    run->add_option("--request", run_request, "File holding the request text");
    run->add_option("--text", run_text, "Request text given inline");
    run->add_option("--zoo", run_zoo, "Zoo manifest JSON")->required();
    run->add_option("--taxonomy", run_tax, "Taxonomy file for object expansion");
    run->add_option("--client", run_client, "Chat client config or scripted reply file")->required();
    run->add_option("--strategy", run_strategy, "random, bayes_gp, bayes_rf or llm");
    run->add_option("--budget", run_budget, "HPO rounds")->check(CLI::PositiveNumber);
    run->add_option("--seed", run_seed, "Seed for sampling and the simulated trainer");
    run->add_option("--runs", run_runs, "Directory receiving run artifacts");
    run->add_option("--run-id", run_id, "Run id (default: request id and seed)");
    run->add_option("--request-id", run_request_id, "Request id (default: derived from the text)");
    run->add_option("--trainer-command", run_trainer_cmd, "External trainer command (job JSON on stdin)");
    run->add_option("--trainer-endpoint", run_trainer_url, "External trainer HTTP endpoint");
    run->add_option("--trainer-timeout", run_timeout, "External trainer timeout in seconds");
    run->add_flag("--no-noise", run_no_noise, "Disable the simulated trainer's noise term");
    run->add_flag("--no-failures", run_no_failures, "Disable simulated training failures");

    // parse
    auto* parse = app.add_subcommand("parse", "Parse a request into a configuration");
    std::string parse_request, parse_text, parse_client;
    parse->add_option("--request", parse_request, "File holding the request text");
    parse->add_option("--text", parse_text, "Request text given inline");
    parse->add_option("--client", parse_client, "Chat client config or scripted reply file")->required();

    // select
    auto* select = app.add_subcommand("select", "Select data and model for a configuration");
    std::string select_config, select_zoo, select_tax;
    select->add_option("--config", select_config, "Configuration JSON")->required();
    select->add_option("--zoo", select_zoo, "Zoo manifest JSON")->required();
    select->add_option("--taxonomy", select_tax, "Taxonomy file");

    // hpo
    auto* bake = app.add_subcommand("hpo", "Compare HPO strategies on synthetic surfaces");
    std::string bake_tasks = "all", bake_strategies = "random,bayes_gp,bayes_rf";
    int bake_surfaces = 20, bake_seeds = 50, bake_budget = 5;
    bool bake_oracle = false, bake_no_noise = false, bake_no_failures = false;
    bake->add_option("--tasks", bake_tasks, "Comma-separated tasks or 'all'");
    bake->add_option("--surfaces", bake_surfaces, "Surfaces per task")->check(CLI::PositiveNumber);
    bake->add_option("--seeds", bake_seeds, "Seeds per surface")->check(CLI::PositiveNumber);
    bake->add_option("--strategies", bake_strategies, "Comma-separated strategies (llm is not supported here)");
    bake->add_option("--budget", bake_budget, "Rounds per run")->check(CLI::PositiveNumber);
    bake->add_flag("--oracle", bake_oracle, "Also report the grid oracle per task");
    bake->add_flag("--no-noise", bake_no_noise, "Disable the noise term");
    bake->add_flag("--no-failures", bake_no_failures, "Disable simulated training failures");

    // eval
    auto* ev = app.add_subcommand("eval", "Score run artifacts against gold configurations");
    std::string ev_runs, ev_gold, ev_json;
    double ev_threshold = textmatch::kDefaultMatchThreshold;
    ev->add_option("--runs", ev_runs, "Directory of run directories")->required();
    ev->add_option("--gold", ev_gold, "Gold directory laid out as <task>/<request_id>.json")->required();
    ev->add_option("--json", ev_json, "Also write the JSON report here");
    ev->add_option("--threshold", ev_threshold, "Fuzzy match threshold")->check(CLI::Range(0.0, 1.0));

    // gen-prompts
    auto* gen = app.add_subcommand("gen-prompts", "Render the prompt templates to files");
    std::string gen_out, gen_request;
    int gen_count = 10;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--request", gen_request, "Request text file for the parsing prompt");
    gen->add_option("--count", gen_count, "Requirements asked for by the generation prompt")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const std::string text = request_from(run_request, run_text);
            const auto reg = registry::load_zoo(run_zoo);
            const auto tax = load_taxonomy(run_tax);
            auto client = llm::load_client(run_client);
            auto executor = make_executor(run_trainer_cmd, run_trainer_url, run_timeout, !run_no_noise,
                                          !run_no_failures);
            orchestrator::PipelineOptions opts;
            opts.strategy = parse_strategy(run_strategy);
            opts.budget = run_budget;
            opts.seed = run_seed;
            opts.run_id = run_id;
            opts.request_id = run_request_id;
            const auto artifact =
                orchestrator::run_pipeline(text, opts, {&reg, &tax, client.get(), executor.get()});
            const auto dir = orchestrator::persist_run(artifact, run_runs);
            std::cout << (dir / "artifact.json").string() << '\n';
            if (artifact.status != orchestrator::RunStatus::completed) {
                std::cerr << fmt::format("run {}: {}\n", orchestrator::to_string(artifact.status), artifact.error);
            }
            return exit_code_for(artifact.status);
        }
        if (*parse) {
            auto client = llm::load_client(parse_client);
            try {
                const auto outcome = llm::llm_parse_request(*client, request_from(parse_request, parse_text));
                for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
                std::cout << schema::serialize_config(outcome.config) << '\n';
            } catch (const llm::UnderstandingError& e) {
                std::cerr << "error: " << e.what() << '\n';
                return kExitUnderstanding;
            }
            return 0;
        }
        if (*select) {
            const auto cfg = schema::canonicalize(
                schema::parse_request_config(read_file(select_config), schema::ParseMode::lenient));
            const auto reg = registry::load_zoo(select_zoo);
            const auto tax = load_taxonomy(select_tax);
            try {
                nlohmann::ordered_json out;
                out["data"] = registry::to_json(registry::select_data(cfg, reg, tax));
                out["model"] = registry::to_json(registry::select_model(cfg, reg));
                std::cout << out.dump(2) << '\n';
            } catch (const registry::SelectionError& e) {
                std::cerr << "error: " << e.what() << '\n';
                return kExitSelection;
            }
            return 0;
        }
        if (*bake) {
            hpo::BakeoffConfig cfg;
            if (bake_tasks != "all") {
                cfg.tasks.clear();
                for (const auto& t : split_csv(bake_tasks)) {
                    auto task = task_from_string(t);
                    if (!task) throw std::invalid_argument("unknown task '" + t + "'");
                    cfg.tasks.push_back(*task);
                }
            }
            for (const auto& s : split_csv(bake_strategies)) {
                const auto strategy = parse_strategy(s);
                if (strategy == hpo::Strategy::llm) throw std::invalid_argument("the llm strategy needs a chat client");
                cfg.arms.push_back({strategy, bake_budget});
            }
            cfg.surfaces = bake_surfaces;
            cfg.seeds = bake_seeds;
            cfg.with_oracle = bake_oracle;
            cfg.trainer.noise = !bake_no_noise;
            cfg.trainer.failure_injection = !bake_no_failures;
            const auto result = hpo::run_bakeoff(cfg);
            std::cout << hpo::format_bakeoff(result, cfg.arms);
            if (bake_oracle) {
                std::map<Task, std::pair<double, int>> oracle;
                for (const auto& s : result.surfaces) {
                    oracle[s.task].first += s.oracle;
                    oracle[s.task].second += 1;
                }
                for (const auto& [task, acc] : oracle) {
                    std::cout << fmt::format("oracle {:<14}{:.4f}\n", to_string(task), acc.first / acc.second);
                }
            }
            const auto& random = cfg.arms.front();
            for (std::size_t i = 1; i < cfg.arms.size(); ++i) {
                std::cout << fmt::format("{} >= {} on {:.1f}% of surfaces\n", hpo::arm_label(cfg.arms[i]),
                                         hpo::arm_label(random), 100.0 * result.win_rate(cfg.arms[i], random));
            }
            return 0;
        }
        if (*ev) {
            std::vector<orchestrator::RunArtifact> runs;
            if (!fs::is_directory(ev_runs)) throw IoError("runs directory not found: " + ev_runs);
            std::vector<fs::path> dirs;
            for (const auto& entry : fs::directory_iterator(ev_runs)) {
                if (entry.is_directory() && fs::exists(entry.path() / "artifact.json")) dirs.push_back(entry.path());
            }
            std::sort(dirs.begin(), dirs.end());
            for (const auto& d : dirs) runs.push_back(orchestrator::load_run(d));
            const auto gold = eval::load_gold_dir(ev_gold);
            const auto report = eval::evaluate_runs(runs, gold, ev_threshold);
            const std::string json = eval::to_json(report).dump(2);
            if (!ev_json.empty()) write_file(ev_json, json + "\n");
            std::cout << json << "\n\n" << eval::format_report_table(report);
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
            return 0;
        }
        if (*gen) {
            fs::create_directories(gen_out);
            auto dump = [](const std::vector<llm::ChatMessage>& messages) {
                std::string out;
                for (const auto& m : messages) out += fmt::format("[{}]\n{}\n\n", llm::to_string(m.role), m.content);
                return out;
            };
            const auto constraints = llm::default_generation_constraints();
            const auto examples = llm::default_generation_examples();
            write_file(fs::path(gen_out) / "request_generation.txt",
                       dump(llm::render_generation_prompt(gen_count, constraints, examples)));
            const auto demo = llm::default_parsing_demo();
            const std::string request = gen_request.empty() ? demo.request : read_file(gen_request);
            write_file(fs::path(gen_out) / "request_parsing.txt",
                       dump(llm::render_parsing_prompt(request, std::span<const llm::ParsingDemo>(&demo, 1))));
            const auto ctx = llm::HPOContext{4, "ImageNet1k", "resnet34_8xb32_in1k", 2.18, 3.68, 73.62, "accuracy"};
            write_file(fs::path(gen_out) / "hpo_round1.txt",
                       dump(llm::render_hpo_messages(
                           1, ctx, hpo::space_prompt_json(hpo::search_space_for(Task::classification)).dump(4), {})));
            std::cout << gen_out << '\n';
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitUsage;
}
