// SPDX-License-Identifier: Apache-2.0

#include "r2m/hpo/space.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

namespace r2m::hpo {

std::string_view to_string(Optimizer o) noexcept {
    switch (o) {
        case Optimizer::SGD: return "SGD";
        case Optimizer::Adam: return "Adam";
        case Optimizer::AdamW: return "AdamW";
        case Optimizer::RMSprop: return "RMSprop";
    }
    return "SGD";
}

std::string_view to_string(Schedule s) noexcept {
    switch (s) {
        case Schedule::MultiStepLR: return "MultiStepLR";
        case Schedule::CosineAnnealingLR: return "CosineAnnealingLR";
        case Schedule::StepLR: return "StepLR";
        case Schedule::PolyLR: return "PolyLR";
    }
    return "MultiStepLR";
}

std::optional<Optimizer> optimizer_from_string(std::string_view s) noexcept {
    for (auto o : kOptimizers) {
        if (to_string(o) == s) return o;
    }
    return std::nullopt;
}

std::optional<Schedule> schedule_from_string(std::string_view s) noexcept {
    for (auto v : kSchedules) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

SearchSpace search_space_for(Task task) {
    SearchSpace space;
    space.task = task;
    switch (task) {
        case Task::classification:
            space.iters = {2000, 5000};
            space.batch = {1, 64};
            break;
        case Task::detection:
            space.iters = {4000, 9000};
            space.batch = {1, 16};
            break;
        case Task::segmentation:
            space.iters = {2000, 7000};
            space.batch = {2, 8};
            break;
        case Task::keypoint:
            space.iters = {2000, 5000};
            space.batch = {2, 64};
            break;
    }
    return space;
}

bool within_bounds(const HyperparameterSetting& s, const SearchSpace& space) {
    return space.iters.contains(s.iters) && space.batch.contains(s.batch_size) &&
           space.lr.contains(s.learning_rate) && space.wd.contains(s.weight_decay);
}

namespace {

double log_uniform(Rng& rng, const Range<double>& r) {
    const double v = std::pow(10.0, rng.uniform(std::log10(r.lo), std::log10(r.hi)));
    return std::clamp(v, r.lo, r.hi);
}

double unit_scale(double v, double lo, double hi) {
    if (hi <= lo) return 0.0;
    return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

}  // namespace

HyperparameterSetting sample_uniform(const SearchSpace& space, Rng& rng) {
    HyperparameterSetting s;
    s.optimizer = kOptimizers[rng.index(kOptimizers.size())];
    s.schedule = kSchedules[rng.index(kSchedules.size())];
    s.learning_rate = log_uniform(rng, space.lr);
    s.weight_decay = log_uniform(rng, space.wd);
    s.iters = rng.uniform_int(space.iters.lo, space.iters.hi);
    s.batch_size = rng.uniform_int(space.batch.lo, space.batch.hi);
    return s;
}

HyperparameterSetting sample_uniform(const SearchSpace& space, std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    return sample_uniform(space, rng);
}

EncodedPoint encode(const HyperparameterSetting& s, const SearchSpace& space) {
    EncodedPoint x{};
    x[static_cast<std::size_t>(s.optimizer)] = 1.0;
    x[4 + static_cast<std::size_t>(s.schedule)] = 1.0;
    x[8] = unit_scale(std::log10(s.learning_rate), std::log10(space.lr.lo), std::log10(space.lr.hi));
    x[9] = unit_scale(std::log10(s.weight_decay), std::log10(space.wd.lo), std::log10(space.wd.hi));
    x[10] = unit_scale(static_cast<double>(s.iters), static_cast<double>(space.iters.lo),
                       static_cast<double>(space.iters.hi));
    x[11] = unit_scale(static_cast<double>(s.batch_size), static_cast<double>(space.batch.lo),
                       static_cast<double>(space.batch.hi));
    return x;
}

nlohmann::ordered_json to_json(const HyperparameterSetting& s) {
    nlohmann::ordered_json j;
    j["iters"] = s.iters;
    j["batch size"] = s.batch_size;
    j["optimizer"] = std::string(to_string(s.optimizer));
    j["learning rate"] = s.learning_rate;
    j["weight decay"] = s.weight_decay;
    j["lr schedule"] = std::string(to_string(s.schedule));
    return j;
}

namespace {

const nlohmann::json& key(const nlohmann::json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) throw SchemaError(name, "missing key");
    return *it;
}

std::int64_t integral(const nlohmann::json& j, const char* name) {
    const auto& v = key(j, name);
    if (!v.is_number()) throw SchemaError(name, "expected a number");
    const double d = v.get<double>();
    if (std::floor(d) != d) throw SchemaError(name, "expected an integer");
    return static_cast<std::int64_t>(d);
}

double real(const nlohmann::json& j, const char* name) {
    const auto& v = key(j, name);
    if (!v.is_number()) throw SchemaError(name, "expected a number");
    return v.get<double>();
}

std::string text(const nlohmann::json& j, const char* name) {
    const auto& v = key(j, name);
    if (!v.is_string()) throw SchemaError(name, "expected a string");
    return v.get<std::string>();
}

}  // namespace

HyperparameterSetting setting_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SchemaError("$", "expected a JSON object");
    HyperparameterSetting s;
    s.iters = integral(j, "iters");
    s.batch_size = integral(j, "batch size");
    const std::string opt = text(j, "optimizer");
    auto o = optimizer_from_string(opt);
    if (!o) throw SchemaError("optimizer", "unknown optimizer '" + opt + "'");
    s.optimizer = *o;
    s.learning_rate = real(j, "learning rate");
    s.weight_decay = real(j, "weight decay");
    const std::string sched = text(j, "lr schedule");
    auto sc = schedule_from_string(sched);
    if (!sc) throw SchemaError("lr schedule", "unknown schedule '" + sched + "'");
    s.schedule = *sc;
    return s;
}

nlohmann::ordered_json space_prompt_json(const SearchSpace& space) {
    nlohmann::ordered_json j;
    j["iters"] = {{"type", "number"},
                  {"description", fmt::format("The number of iterations of model training, an integer from {} to {}.",
                                              space.iters.lo, space.iters.hi)}};
    j["batch size"] = {{"type", "number"},
                       {"description", fmt::format("Batch size during model training, an integer between {} and {}.",
                                                   space.batch.lo, space.batch.hi)}};
    nlohmann::ordered_json opts = nlohmann::ordered_json::array();
    for (auto o : kOptimizers) opts.push_back(std::string(to_string(o)));
    j["optimizer"] = {{"type", "string"}, {"enum", opts}, {"description", "Parameter optimizer for model training."}};
    j["learning rate"] = {{"type", "number"}, {"description", "Initial learning rate for model training."}};
    j["weight decay"] = {{"type", "number"}, {"description", "Weight decay value for model training."}};
    nlohmann::ordered_json scheds = nlohmann::ordered_json::array();
    for (auto s : kSchedules) scheds.push_back(std::string(to_string(s)));
    j["lr schedule"] = {{"type", "string"},
                        {"enum", scheds},
                        {"description", "Learning rate decay rules during model training."}};
    return j;
}

std::string setting_digest(const HyperparameterSetting& s) {
    return sha256_hex(to_json(s).dump()).substr(0, 16);
}

}  // namespace r2m::hpo
