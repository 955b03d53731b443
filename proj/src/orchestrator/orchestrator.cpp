// SPDX-License-Identifier: Apache-2.0

#include "r2m/orchestrator.hpp"

#include <chrono>
#include <ctime>
#include <set>

#include <fmt/core.h>

#include "r2m/hpo/space.hpp"
#include "r2m/llm/agents.hpp"
#include "r2m/llm/prompts.hpp"
#include "r2m/util.hpp"

namespace r2m::orchestrator {

namespace {

constexpr std::string_view kLibraryVersion = "r2m 0.1.0";
constexpr std::string_view kArtifactFormat = "r2m-run/1";

constexpr std::array<std::pair<RunStatus, std::string_view>, 4> kStatuses{{
    {RunStatus::completed, "completed"},
    {RunStatus::failed_understanding, "failed_understanding"},
    {RunStatus::failed_selection, "failed_selection"},
    {RunStatus::failed_training, "failed_training"},
}};

nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? json_number(*v) : nlohmann::json(nullptr);
}

std::optional<double> number_or_null(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
}

std::string versions_digest(const registry::Registry& reg) {
    std::string material(kLibraryVersion);
    for (const auto& [name, text] : llm::template_assets()) {
        material += '\n';
        material += name;
        material += ':';
        material += sha256_hex(text);
    }
    material += "\nzoo:" + reg.digest;
    return sha256_hex(material);
}

}  // namespace

std::string_view to_string(RunStatus s) noexcept {
    for (const auto& [v, name] : kStatuses) {
        if (v == s) return name;
    }
    return "failed_understanding";
}

std::optional<RunStatus> run_status_from_string(std::string_view s) noexcept {
    for (const auto& [v, name] : kStatuses) {
        if (name == s) return v;
    }
    return std::nullopt;
}

DeploymentPlan make_deployment_plan(const schema::CanonicalConfig& cfg, const registry::ModelCard& card,
                                    const std::optional<hpo::HyperparameterSetting>& setting) {
    DeploymentPlan plan;
    const auto& deploy = cfg.config.deploy;
    plan.device = deploy.device == schema::Device::none ? schema::Device::cpu : deploy.device;
    plan.engine = deploy.inference_engine == schema::Engine::none ? schema::Engine::onnxruntime
                                                                  : deploy.inference_engine;
    if (deploy.device == schema::Device::none) plan.notes.push_back("no device requested, defaulting to cpu");
    if (deploy.inference_engine == schema::Engine::none) {
        plan.notes.push_back("no inference engine requested, defaulting to onnxruntime");
    }
    plan.model = card.name;
    if (setting) plan.setting_digest = hpo::setting_digest(*setting);
    return plan;
}

nlohmann::ordered_json to_json(const DeploymentPlan& plan) {
    nlohmann::ordered_json j;
    j["device"] = std::string(schema::to_string(plan.device));
    j["inference engine"] = std::string(schema::to_string(plan.engine));
    j["model"] = plan.model;
    j["setting_digest"] = plan.setting_digest;
    j["notes"] = plan.notes;
    return j;
}

DeploymentPlan deployment_plan_from_json(const nlohmann::json& j) {
    DeploymentPlan p;
    const auto device = schema::device_from_string(j.at("device").get<std::string>());
    const auto engine = schema::engine_from_string(j.at("inference engine").get<std::string>());
    if (!device || *device == schema::Device::none) throw SchemaError("plan.device", "invalid device");
    if (!engine || *engine == schema::Engine::none) throw SchemaError("plan.inference engine", "invalid engine");
    p.device = *device;
    p.engine = *engine;
    p.model = j.at("model").get<std::string>();
    p.setting_digest = j.value("setting_digest", "");
    p.notes = j.value("notes", std::vector<std::string>{});
    return p;
}

nlohmann::ordered_json to_json(const schema::CanonicalConfig& c) {
    nlohmann::ordered_json j;
    j["config"] = schema::config_to_json(c.config);
    j["speed_ms_per_sample"] = optional_number(c.speed_ms_per_sample);
    j["flops_total"] = optional_number(c.flops_total);
    j["parameter_count"] = optional_number(c.parameter_count);
    return j;
}

schema::CanonicalConfig canonical_config_from_json(const nlohmann::json& j) {
    schema::CanonicalConfig c;
    c.config = schema::config_from_json(j.at("config"), schema::ParseMode::lenient);
    c.speed_ms_per_sample = number_or_null(j, "speed_ms_per_sample");
    c.flops_total = number_or_null(j, "flops_total");
    c.parameter_count = number_or_null(j, "parameter_count");
    return c;
}

nlohmann::ordered_json to_json(const RunArtifact& a) {
    nlohmann::ordered_json j;
    j["run_id"] = a.run_id;
    j["request_id"] = a.request_id;
    j["request_text"] = a.request_text;
    j["status"] = std::string(to_string(a.status));
    j["error"] = a.error;
    j["options"] = {{"strategy", std::string(hpo::to_string(a.strategy))}, {"budget", a.budget}, {"seed", a.seed}};
    j["parse_retries"] = a.parse_retries;
    j["warnings"] = a.warnings;
    j["config"] = a.config ? schema::config_to_json(*a.config) : nlohmann::ordered_json(nullptr);
    j["canonical"] = a.canonical ? to_json(*a.canonical) : nlohmann::ordered_json(nullptr);
    j["data"] = a.data ? registry::to_json(*a.data) : nlohmann::ordered_json(nullptr);
    j["model"] = a.model ? registry::to_json(*a.model) : nlohmann::ordered_json(nullptr);
    j["hpo"] = a.hpo ? hpo::to_json(*a.hpo) : nlohmann::ordered_json(nullptr);
    j["plan"] = a.plan ? to_json(*a.plan) : nlohmann::ordered_json(nullptr);
    auto timings = nlohmann::ordered_json::array();
    for (const auto& t : a.timings) {
        timings.push_back({{"stage", t.stage}, {"started", t.started}, {"finished", t.finished}});
    }
    j["timings"] = std::move(timings);
    j["versions_digest"] = a.versions_digest;
    return j;
}

RunArtifact run_artifact_from_json(const nlohmann::json& j) {
    RunArtifact a;
    a.run_id = j.at("run_id").get<std::string>();
    a.request_id = j.at("request_id").get<std::string>();
    a.request_text = j.at("request_text").get<std::string>();
    const auto status = run_status_from_string(j.at("status").get<std::string>());
    if (!status) throw SchemaError("status", "unknown run status");
    a.status = *status;
    a.error = j.value("error", "");
    const auto& opts = j.at("options");
    const auto strategy = hpo::strategy_from_string(opts.at("strategy").get<std::string>());
    if (!strategy) throw SchemaError("options.strategy", "unknown strategy");
    a.strategy = *strategy;
    a.budget = opts.at("budget").get<int>();
    a.seed = opts.at("seed").get<std::uint64_t>();
    a.parse_retries = j.value("parse_retries", 0);
    a.warnings = j.value("warnings", std::vector<std::string>{});
    auto present = [&](const char* key) { return j.contains(key) && !j.at(key).is_null(); };
    if (present("config")) a.config = schema::config_from_json(j.at("config"), schema::ParseMode::lenient);
    if (present("canonical")) a.canonical = canonical_config_from_json(j.at("canonical"));
    if (present("data")) a.data = registry::data_selection_from_json(j.at("data"));
    if (present("model")) a.model = registry::model_card_from_json(j.at("model"));
    if (present("hpo")) a.hpo = hpo::trace_from_json(j.at("hpo"));
    if (present("plan")) a.plan = deployment_plan_from_json(j.at("plan"));
    for (const auto& t : j.value("timings", nlohmann::json::array())) {
        a.timings.push_back({t.at("stage").get<std::string>(), t.at("started").get<std::string>(),
                             t.at("finished").get<std::string>()});
    }
    a.versions_digest = j.value("versions_digest", "");
    return a;
}

std::string derive_request_id(std::string_view request_text) {
    return "req-" + sha256_hex(trim(request_text)).substr(0, 12);
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                       tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
}

RunArtifact run_pipeline(std::string_view request_text, const PipelineOptions& options,
                         const PipelineServices& services) {
    RunArtifact a;
    a.request_text = std::string(request_text);
    a.request_id = options.request_id.empty() ? derive_request_id(request_text) : options.request_id;
    a.run_id = options.run_id.empty() ? a.request_id + "-" + std::to_string(options.seed) : options.run_id;
    a.strategy = options.strategy;
    a.budget = options.budget;
    a.seed = options.seed;
    const auto clock = options.clock ? options.clock : std::function<std::string()>(utc_timestamp);
    if (services.registry == nullptr || services.taxonomy == nullptr || services.client == nullptr ||
        services.executor == nullptr) {
        throw std::invalid_argument("run_pipeline: registry, taxonomy, client and executor are required");
    }
    a.versions_digest = versions_digest(*services.registry);

    // Runs one stage, recording its timing. Returns false (with status and
    // error set) if the stage threw.
    auto stage = [&](const char* name, RunStatus on_failure, auto&& body) {
        StageTiming timing{name, clock(), ""};
        bool ok = true;
        try {
            body();
        } catch (const std::exception& e) {
            a.status = on_failure;
            a.error = fmt::format("{}: {}", name, e.what());
            ok = false;
        }
        timing.finished = clock();
        a.timings.push_back(std::move(timing));
        return ok;
    };

    if (!stage("understand", RunStatus::failed_understanding, [&] {
            auto outcome = llm::llm_parse_request(*services.client, request_text);
            a.parse_retries = outcome.retries;
            for (auto& w : outcome.warnings) a.warnings.push_back("understand: " + w);
            a.canonical = schema::canonicalize(outcome.config);
            a.config = std::move(outcome.config);
        })) {
        return a;
    }

    if (!stage("select_data", RunStatus::failed_selection, [&] {
            auto sel = registry::select_data(*a.canonical, *services.registry, *services.taxonomy,
                                             options.match_threshold);
            for (const auto& term : sel.uncovered) a.warnings.push_back("select_data: uncovered object '" + term + "'");
            const bool chosen = !sel.chosen.empty();
            a.data = std::move(sel);
            if (!chosen) throw registry::SelectionError("no data card covers any requested object");
        })) {
        return a;
    }

    if (!stage("select_model", RunStatus::failed_selection,
               [&] { a.model = registry::select_model(*a.canonical, *services.registry); })) {
        return a;
    }

    if (!stage("hpo", RunStatus::failed_training, [&] {
            std::set<std::string> classes;
            std::string dataset;
            for (const auto& c : a.data->chosen) {
                classes.insert(c.matched_classes.begin(), c.matched_classes.end());
                dataset += (dataset.empty() ? "" : "+") + c.card.name;
            }
            if (classes.empty()) {
                for (const auto& c : a.data->chosen) classes.insert(c.card.classes.begin(), c.card.classes.end());
            }
            hpo::HPOTarget target;
            target.request_id = a.request_id;
            target.task = a.canonical->config.model.task;
            target.model = *a.model;
            target.class_count = static_cast<std::int64_t>(classes.size());
            target.image_count = a.data->total_images;
            target.context = hpo::make_hpo_context(*a.model, target.class_count, dataset);

            hpo::HPOOptions hopts;
            hopts.strategy = options.strategy;
            hopts.budget = options.budget;
            hopts.seed = options.seed;
            hopts.client = services.client;
            a.hpo = hpo::run_hpo(hopts, *services.executor, target);
            if (!a.hpo->best.setting || a.hpo->best.metric_value <= 0.0) {
                throw std::runtime_error("every training round failed");
            }
        })) {
        return a;
    }

    stage("deploy", RunStatus::failed_training,
          [&] { a.plan = make_deployment_plan(*a.canonical, *a.model, a.hpo->best.setting); });
    if (a.plan) {
        a.status = RunStatus::completed;
        a.error.clear();
    }
    return a;
}

std::filesystem::path persist_run(const RunArtifact& artifact, const std::filesystem::path& runs_dir) {
    if (artifact.run_id.empty() || artifact.run_id.find('/') != std::string::npos || artifact.run_id == "." ||
        artifact.run_id == "..") {
        throw IoError("invalid run id '" + artifact.run_id + "'");
    }
    const auto dir = runs_dir / artifact.run_id;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    const auto body = to_json(artifact);
    nlohmann::ordered_json wrapper;
    wrapper["format"] = std::string(kArtifactFormat);
    wrapper["digest"] = sha256_hex(body.dump());
    wrapper["artifact"] = body;
    write_file(dir / "artifact.json", wrapper.dump(2) + "\n");
    write_file(dir / "trace.jsonl", artifact.hpo ? hpo::to_jsonl(*artifact.hpo) : std::string());
    write_file(dir / "plan.json", artifact.plan ? to_json(*artifact.plan).dump(2) + "\n" : std::string("null\n"));
    return dir;
}

RunArtifact load_run(const std::filesystem::path& path) {
    const auto file = std::filesystem::is_directory(path) ? path / "artifact.json" : path;
    const std::string text = read_file(file);
    nlohmann::ordered_json wrapper;
    try {
        wrapper = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IntegrityError(file.string() + ": unreadable artifact (" + e.what() + ")");
    }
    if (!wrapper.is_object() || !wrapper.contains("digest") || !wrapper.contains("artifact")) {
        throw IntegrityError(file.string() + ": missing digest or artifact");
    }
    if (wrapper.at("digest") != sha256_hex(wrapper.at("artifact").dump())) {
        throw IntegrityError(file.string() + ": digest mismatch");
    }
    try {
        return run_artifact_from_json(nlohmann::json::parse(wrapper.at("artifact").dump()));
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(file.string() + ": malformed artifact (" + e.what() + ")");
    }
}

}  // namespace r2m::orchestrator
