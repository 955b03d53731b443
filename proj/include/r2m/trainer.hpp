// SPDX-License-Identifier: Apache-2.0
//
// The trainer-executor contract, a deterministic synthetic response surface
// that stands in for real training, its brute-force grid oracle, and an
// adapter for external trainers.

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "r2m/common.hpp"
#include "r2m/hpo/space.hpp"
#include "r2m/registry.hpp"

namespace r2m::trainer {

struct TrainJob {
    std::string request_id;
    Task task = Task::classification;
    registry::ModelCard model;
    std::int64_t class_count = 0;
    std::int64_t image_count = 0;
    hpo::HyperparameterSetting setting;
    std::uint64_t seed = 0;

    bool operator==(const TrainJob&) const = default;
};

enum class TrainStatus { ok, failed };

struct TrainResult {
    std::string metric;
    double value = 0.0;
    TrainStatus status = TrainStatus::ok;
    std::string note;

    bool operator==(const TrainResult&) const = default;
};

nlohmann::ordered_json to_json(const TrainJob& job);
nlohmann::ordered_json to_json(const TrainResult& result);
/// Decodes an adapter reply. Missing or ill-typed fields yield a failed result.
TrainResult train_result_from_json(const nlohmann::json& j);

/// Evaluates one hyperparameter setting. Implementations used in tests must
/// return identical results for identical jobs.
class TrainerExecutor {
public:
    virtual ~TrainerExecutor() = default;
    virtual TrainResult train_and_eval(const TrainJob& job) = 0;
};

/// Parameters of the synthetic response surface
///
///   clamp01( base + opt_offset + sched_offset
///            + A exp(-(log10 lr - lr_opt)^2 / (2 lr_width^2))
///            - B |log10 wd - wd_opt|
///            + C iters_norm + D (1 - |batch_norm - batch_opt|)
///            + noise * noise_amplitude )
///
/// where iters_norm and batch_norm are scaled to [0, 1] over the task's range.
struct SurfaceParams {
    Task task = Task::classification;
    double lr_opt = -3.5;
    double lr_width = 1.0;
    double wd_opt = -3.0;
    double batch_opt = 0.5;
    double base = 0.45;
    double a = 0.35;
    double b = 0.02;
    double c = 0.05;
    double d = 0.03;
    /// Indexed by hpo::Optimizer: SGD, Adam, AdamW, RMSprop.
    std::array<double, 4> optimizer_offset{0.00, 0.03, 0.05, 0.01};
    /// Indexed by hpo::Schedule: MultiStepLR, CosineAnnealingLR, StepLR, PolyLR.
    std::array<double, 4> schedule_offset{0.00, 0.02, -0.01, 0.01};
    double noise_amplitude = 0.01;
    std::uint64_t noise_seed = 0;

    bool operator==(const SurfaceParams&) const = default;

    /// Fixed reference surface for a task.
    static SurfaceParams defaults(Task task);
    /// Per-request surface drawn from a seeded generator.
    static SurfaceParams derive(std::uint64_t seed, Task task);
    static SurfaceParams derive(std::string_view request_id, Task task);
};

/// Deterministic noise term in [-1, 1] for a setting.
double surface_noise(const SurfaceParams& params, const hpo::HyperparameterSetting& setting);
double surface_score(const SurfaceParams& params, const hpo::HyperparameterSetting& setting);

struct SurfaceGrid {
    std::vector<hpo::Optimizer> optimizers;
    std::vector<hpo::Schedule> schedules;
    std::vector<double> learning_rates;
    std::vector<double> weight_decays;
    std::vector<std::int64_t> iters;
    std::vector<std::int64_t> batch_sizes;

    std::size_t size() const noexcept {
        return optimizers.size() * schedules.size() * learning_rates.size() * weight_decays.size() * iters.size() *
               batch_sizes.size();
    }

    /// 4 optimizers x 4 schedules x 29 log-lr x 17 log-wd x 7 iters x 8 batch.
    static SurfaceGrid standard(const hpo::SearchSpace& space);
};

struct OracleResult {
    hpo::HyperparameterSetting setting;
    double score = 0.0;
};

/// Exhaustive argmax over the grid with the noise term disabled; the first
/// grid point wins ties.
OracleResult oracle_best(const SurfaceParams& params, const SurfaceGrid& grid);

struct SimulatedTrainerOptions {
    bool noise = true;
    bool failure_injection = true;
    double failure_lr_threshold = 0.05;
    double failure_gate = 0.9;
};

/// Scores jobs on the request's derived surface. Jobs with a large learning
/// rate fail deterministically for a fraction of settings.
class SimulatedTrainer final : public TrainerExecutor {
public:
    explicit SimulatedTrainer(SimulatedTrainerOptions options = {}) : options_(options) {}

    TrainResult train_and_eval(const TrainJob& job) override;

    SurfaceParams surface_for(const TrainJob& job) const;

private:
    SimulatedTrainerOptions options_;
};

struct AdapterConfig {
    /// Shell command that reads TrainJob JSON on stdin and writes TrainResult
    /// JSON on stdout. Used when non-empty.
    std::string command;
    /// Alternatively an HTTP(S) endpoint accepting the job as a POST body.
    std::string endpoint;
    std::chrono::milliseconds timeout{std::chrono::minutes(10)};
};

/// Sends jobs to an external trainer. Any transport failure, non-zero exit,
/// timeout or malformed reply becomes a failed result with value 0.
class ExternalTrainer final : public TrainerExecutor {
public:
    explicit ExternalTrainer(AdapterConfig config) : config_(std::move(config)) {}

    TrainResult train_and_eval(const TrainJob& job) override;

private:
    AdapterConfig config_;
};

TrainResult external_train(const TrainJob& job, const AdapterConfig& config);

}  // namespace r2m::trainer
