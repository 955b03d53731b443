// SPDX-License-Identifier: Apache-2.0

#include "r2m/trainer.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "r2m/transport.hpp"
#include "r2m/util.hpp"

namespace r2m::trainer {

using hpo::HyperparameterSetting;

nlohmann::ordered_json to_json(const TrainJob& job) {
    nlohmann::ordered_json j;
    j["request_id"] = job.request_id;
    j["task"] = std::string(to_string(job.task));
    j["model"] = registry::to_json(job.model);
    j["data"] = {{"class_count", job.class_count}, {"image_count", job.image_count}};
    j["setting"] = hpo::to_json(job.setting);
    j["seed"] = job.seed;
    return j;
}

nlohmann::ordered_json to_json(const TrainResult& result) {
    nlohmann::ordered_json j;
    j["metric"] = result.metric;
    j["value"] = result.value;
    j["status"] = result.status == TrainStatus::ok ? "ok" : "failed";
    if (!result.note.empty()) j["note"] = result.note;
    return j;
}

TrainResult train_result_from_json(const nlohmann::json& j) {
    TrainResult r;
    r.status = TrainStatus::failed;
    if (!j.is_object()) {
        r.note = "reply is not a JSON object";
        return r;
    }
    if (auto it = j.find("metric"); it != j.end() && it->is_string()) r.metric = it->get<std::string>();
    auto value = j.find("value");
    if (value == j.end() || !value->is_number()) {
        r.note = "reply has no numeric 'value'";
        return r;
    }
    const double v = value->get<double>();
    if (!(v >= 0.0 && v <= 1.0)) {
        r.note = fmt::format("reply value {} outside [0, 1]", v);
        return r;
    }
    std::string status = "ok";
    if (auto it = j.find("status"); it != j.end() && it->is_string()) status = it->get<std::string>();
    if (status == "failed") {
        r.note = j.value("note", "trainer reported failure");
        return r;
    }
    if (status != "ok") {
        r.note = "unknown status '" + status + "'";
        return r;
    }
    r.status = TrainStatus::ok;
    r.value = v;
    r.note = j.value("note", "");
    return r;
}

SurfaceParams SurfaceParams::defaults(Task task) {
    SurfaceParams p;
    p.task = task;
    return p;
}

SurfaceParams SurfaceParams::derive(std::uint64_t seed, Task task) {
    SurfaceParams p;
    p.task = task;
    Rng rng(splitmix64(seed ^ 0x5eed5eed5eed5eedULL));
    p.lr_opt = rng.uniform(-5.0, -2.0);
    p.lr_width = rng.uniform(0.5, 1.5);
    p.wd_opt = rng.uniform(-5.0, -1.0);
    p.batch_opt = rng.uniform(0.0, 1.0);
    for (auto& s : p.schedule_offset) s = rng.uniform(-0.02, 0.02);
    p.noise_seed = rng.next_u64();
    return p;
}

SurfaceParams SurfaceParams::derive(std::string_view request_id, Task task) {
    return derive(fnv1a64(request_id), task);
}

namespace {

std::uint64_t setting_hash(std::uint64_t state, const HyperparameterSetting& s) {
    state = hash_combine(state, static_cast<std::uint64_t>(s.iters));
    state = hash_combine(state, static_cast<std::uint64_t>(s.batch_size));
    state = hash_combine(state, static_cast<std::uint64_t>(s.optimizer));
    state = hash_combine(state, hash_double(s.learning_rate));
    state = hash_combine(state, hash_double(s.weight_decay));
    state = hash_combine(state, static_cast<std::uint64_t>(s.schedule));
    return state;
}

double unit_from_hash(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

double deterministic_score(const SurfaceParams& p, const HyperparameterSetting& s) {
    const hpo::SearchSpace space = hpo::search_space_for(p.task);
    const double log_lr = std::log10(s.learning_rate);
    const double log_wd = std::log10(s.weight_decay);
    const double iters_norm = static_cast<double>(s.iters - space.iters.lo) /
                              static_cast<double>(space.iters.hi - space.iters.lo);
    const double batch_norm = static_cast<double>(s.batch_size - space.batch.lo) /
                              static_cast<double>(space.batch.hi - space.batch.lo);
    const double lr_dev = log_lr - p.lr_opt;
    return p.base + p.optimizer_offset[static_cast<std::size_t>(s.optimizer)] +
           p.schedule_offset[static_cast<std::size_t>(s.schedule)] +
           p.a * std::exp(-(lr_dev * lr_dev) / (2.0 * p.lr_width * p.lr_width)) - p.b * std::fabs(log_wd - p.wd_opt) +
           p.c * iters_norm + p.d * (1.0 - std::fabs(batch_norm - p.batch_opt));
}

}  // namespace

double surface_noise(const SurfaceParams& params, const HyperparameterSetting& setting) {
    const std::uint64_t h = setting_hash(hash_combine(params.noise_seed, 0x6e6f697365ULL), setting);
    return 2.0 * unit_from_hash(h) - 1.0;
}

double surface_score(const SurfaceParams& params, const HyperparameterSetting& setting) {
    double score = deterministic_score(params, setting);
    if (params.noise_amplitude != 0.0) score += params.noise_amplitude * surface_noise(params, setting);
    return std::clamp(score, 0.0, 1.0);
}

SurfaceGrid SurfaceGrid::standard(const hpo::SearchSpace& space) {
    SurfaceGrid g;
    g.optimizers.assign(hpo::kOptimizers.begin(), hpo::kOptimizers.end());
    g.schedules.assign(hpo::kSchedules.begin(), hpo::kSchedules.end());
    auto log_axis = [](double lo, double hi, int points) {
        std::vector<double> out;
        const double a = std::log10(lo);
        const double b = std::log10(hi);
        for (int i = 0; i < points; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (points - 1)));
        out.front() = lo;
        out.back() = hi;
        return out;
    };
    auto int_axis = [](std::int64_t lo, std::int64_t hi, int points) {
        std::vector<std::int64_t> out;
        for (int i = 0; i < points; ++i) {
            out.push_back(static_cast<std::int64_t>(
                std::llround(static_cast<double>(lo) + static_cast<double>(hi - lo) * i / (points - 1))));
        }
        return out;
    };
    g.learning_rates = log_axis(space.lr.lo, space.lr.hi, 29);
    g.weight_decays = log_axis(space.wd.lo, space.wd.hi, 17);
    g.iters = int_axis(space.iters.lo, space.iters.hi, 7);
    g.batch_sizes = int_axis(space.batch.lo, space.batch.hi, 8);
    return g;
}

OracleResult oracle_best(const SurfaceParams& params, const SurfaceGrid& grid) {
    SurfaceParams quiet = params;
    quiet.noise_amplitude = 0.0;
    OracleResult best;
    bool first = true;
    HyperparameterSetting s;
    for (auto opt : grid.optimizers) {
        s.optimizer = opt;
        for (auto sched : grid.schedules) {
            s.schedule = sched;
            for (double lr : grid.learning_rates) {
                s.learning_rate = lr;
                for (double wd : grid.weight_decays) {
                    s.weight_decay = wd;
                    for (auto it : grid.iters) {
                        s.iters = it;
                        for (auto bs : grid.batch_sizes) {
                            s.batch_size = bs;
                            const double v = std::clamp(deterministic_score(quiet, s), 0.0, 1.0);
                            if (first || v > best.score) {
                                best = {s, v};
                                first = false;
                            }
                        }
                    }
                }
            }
        }
    }
    return best;
}

SurfaceParams SimulatedTrainer::surface_for(const TrainJob& job) const {
    SurfaceParams p = SurfaceParams::derive(job.request_id, job.task);
    p.noise_seed = hash_combine(p.noise_seed, job.seed);
    if (!options_.noise) p.noise_amplitude = 0.0;
    return p;
}

TrainResult SimulatedTrainer::train_and_eval(const TrainJob& job) {
    TrainResult r;
    r.metric = std::string(metric_name_for(job.task));
    const hpo::SearchSpace space = hpo::search_space_for(job.task);
    if (!hpo::within_bounds(job.setting, space)) {
        r.status = TrainStatus::failed;
        r.note = "setting outside the task search space";
        return r;
    }
    const SurfaceParams p = surface_for(job);
    if (options_.failure_injection && job.setting.learning_rate > options_.failure_lr_threshold) {
        const double gate = unit_from_hash(setting_hash(hash_combine(p.noise_seed, 0x6661696cULL), job.setting));
        if (gate > options_.failure_gate) {
            r.status = TrainStatus::failed;
            r.note = "simulated divergence at high learning rate";
            return r;
        }
    }
    r.value = surface_score(p, job.setting);
    r.note = "simulated";
    return r;
}

TrainResult external_train(const TrainJob& job, const AdapterConfig& config) {
    const std::string payload = to_json(job).dump();
    TrainResult failed;
    failed.metric = std::string(metric_name_for(job.task));
    failed.status = TrainStatus::failed;

    std::string reply;
    if (!config.command.empty()) {
        const auto proc = transport::run_process(config.command, payload, config.timeout);
        if (proc.timed_out) {
            failed.note = "trainer timed out";
            return failed;
        }
        if (proc.exit_code != 0) {
            failed.note = fmt::format("trainer exited with status {}", proc.exit_code);
            return failed;
        }
        reply = proc.out;
    } else if (!config.endpoint.empty()) {
        const auto res = transport::http_post_json(config.endpoint, payload, {}, config.timeout);
        if (res.status == 0) {
            failed.note = res.error;
            return failed;
        }
        if (res.status < 200 || res.status >= 300) {
            failed.note = fmt::format("trainer endpoint returned HTTP {}", res.status);
            return failed;
        }
        reply = res.body;
    } else {
        failed.note = "adapter has neither a command nor an endpoint";
        return failed;
    }

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(reply);
    } catch (const nlohmann::json::parse_error&) {
        failed.note = "malformed trainer reply";
        return failed;
    }
    TrainResult r = train_result_from_json(doc);
    if (r.metric.empty()) r.metric = failed.metric;
    if (r.status == TrainStatus::failed) r.value = 0.0;
    return r;
}

TrainResult ExternalTrainer::train_and_eval(const TrainJob& job) { return external_train(job, config_); }

}  // namespace r2m::trainer
