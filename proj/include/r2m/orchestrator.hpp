// SPDX-License-Identifier: Apache-2.0
//
// The five-stage request-to-model pipeline, deployment plans and persisted
// run artifacts.

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "r2m/common.hpp"
#include "r2m/hpo/loop.hpp"
#include "r2m/hpo/trace.hpp"
#include "r2m/llm/chat.hpp"
#include "r2m/registry.hpp"
#include "r2m/schema.hpp"
#include "r2m/textmatch.hpp"
#include "r2m/trainer.hpp"

namespace r2m::orchestrator {

enum class RunStatus { completed, failed_understanding, failed_selection, failed_training };

std::string_view to_string(RunStatus s) noexcept;
std::optional<RunStatus> run_status_from_string(std::string_view s) noexcept;

struct DeploymentPlan {
    schema::Device device = schema::Device::cpu;
    schema::Engine engine = schema::Engine::onnxruntime;
    std::string model;
    std::string setting_digest;
    std::vector<std::string> notes;

    bool operator==(const DeploymentPlan&) const = default;
};

/// Requested engine and device, falling back to onnxruntime and cpu.
DeploymentPlan make_deployment_plan(const schema::CanonicalConfig& cfg, const registry::ModelCard& card,
                                    const std::optional<hpo::HyperparameterSetting>& setting = std::nullopt);

struct StageTiming {
    std::string stage;
    std::string started;
    std::string finished;

    bool operator==(const StageTiming&) const = default;
};

struct RunArtifact {
    std::string run_id;
    std::string request_id;
    std::string request_text;
    RunStatus status = RunStatus::failed_understanding;
    std::string error;
    hpo::Strategy strategy = hpo::Strategy::random;
    int budget = 0;
    std::uint64_t seed = 0;
    int parse_retries = 0;
    std::vector<std::string> warnings;
    std::optional<schema::RequestConfig> config;
    std::optional<schema::CanonicalConfig> canonical;
    std::optional<registry::DataSelection> data;
    std::optional<registry::ModelCard> model;
    std::optional<hpo::HPOTrace> hpo;
    std::optional<DeploymentPlan> plan;
    std::vector<StageTiming> timings;
    /// Digest over the library version, bundled prompt assets and the zoo.
    std::string versions_digest;

    bool operator==(const RunArtifact&) const = default;
};

nlohmann::ordered_json to_json(const DeploymentPlan& plan);
DeploymentPlan deployment_plan_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const schema::CanonicalConfig& c);
schema::CanonicalConfig canonical_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const RunArtifact& a);
RunArtifact run_artifact_from_json(const nlohmann::json& j);

struct PipelineOptions {
    hpo::Strategy strategy = hpo::Strategy::bayes_gp;
    int budget = 5;
    std::uint64_t seed = 0;
    /// Empty: derived from the request text.
    std::string request_id;
    std::string run_id;
    /// Timestamp source for stage timings; defaults to UTC wall time.
    std::function<std::string()> clock;
    double match_threshold = textmatch::kDefaultMatchThreshold;
};

/// Everything the pipeline talks to. The registry and taxonomy are shared
/// read-only; the client and executor must outlive the call.
struct PipelineServices {
    const registry::Registry* registry = nullptr;
    const textmatch::Taxonomy* taxonomy = nullptr;
    llm::ChatClient* client = nullptr;
    trainer::TrainerExecutor* executor = nullptr;
};

/// Stable id for a request text: "req-" plus 12 hex digits of its SHA-256.
std::string derive_request_id(std::string_view request_text);
std::string utc_timestamp();

/// understand -> select data -> select model -> HPO -> deploy. A failing stage
/// sets its failed_* status, records the error and stops; nothing is thrown.
RunArtifact run_pipeline(std::string_view request_text, const PipelineOptions& options,
                         const PipelineServices& services);

class IntegrityError : public Error {
public:
    using Error::Error;
};

/// Writes <runs_dir>/<run_id>/{artifact.json, trace.jsonl, plan.json}.
/// artifact.json wraps the artifact with a SHA-256 digest of its content.
std::filesystem::path persist_run(const RunArtifact& artifact, const std::filesystem::path& runs_dir);
/// Reads a run directory (or an artifact.json path). Throws IntegrityError on
/// digest mismatch or an unreadable document, IoError if missing.
RunArtifact load_run(const std::filesystem::path& path);

}  // namespace r2m::orchestrator
