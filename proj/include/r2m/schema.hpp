// SPDX-License-Identifier: Apache-2.0
//
// The three-part (data / model / deploy) request configuration, its JSON wire
// format, and the unit-normalized canonical form used by model selection and
// evaluation.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "r2m/common.hpp"

namespace r2m::schema {

enum class SpeedUnit { ms, s, min, h, fps, none };
enum class FlopsUnit { FLOPs, MFLOPs, GFLOPs, TFLOPs, PFLOPs, EFLOPs, none };
enum class ParamUnit { K, M, B, none };
enum class Device { cpu, gpu, none };
enum class Engine { onnxruntime, ncnn, openvino, none };

std::string_view to_string(SpeedUnit u) noexcept;
std::string_view to_string(FlopsUnit u) noexcept;
std::string_view to_string(ParamUnit u) noexcept;
std::string_view to_string(Device d) noexcept;
std::string_view to_string(Engine e) noexcept;
/// Exact spelling match.
std::optional<Device> device_from_string(std::string_view s) noexcept;
std::optional<Engine> engine_from_string(std::string_view s) noexcept;

/// A value with a unit drawn from one kind's enumeration. `{0, none}` is the
/// unconstrained default.
template <class Unit>
struct Quantity {
    double value = 0.0;
    Unit unit = Unit::none;

    bool operator==(const Quantity&) const = default;
};

using SpeedQuantity = Quantity<SpeedUnit>;
using FlopsQuantity = Quantity<FlopsUnit>;
using ParamQuantity = Quantity<ParamUnit>;

struct MetricTarget {
    std::string name;
    double value = 0.0;

    bool operator==(const MetricTarget&) const = default;
};

struct DataRequirement {
    std::string description;
    std::string scenario;
    std::vector<std::string> object;
    std::string modality;
    std::vector<std::string> specific;

    bool operator==(const DataRequirement&) const = default;
};

struct ModelRequirement {
    std::string description;
    Task task = Task::classification;
    std::string specific_model = "none";
    SpeedQuantity speed;
    FlopsQuantity flops;
    ParamQuantity parameters;
    std::vector<MetricTarget> metrics;

    bool operator==(const ModelRequirement&) const = default;
};

struct DeployRequirement {
    std::string description;
    Device device = Device::none;
    Engine inference_engine = Engine::none;

    bool operator==(const DeployRequirement&) const = default;
};

struct RequestConfig {
    DataRequirement data;
    ModelRequirement model;
    DeployRequirement deploy;
    /// Unknown keys kept by lenient parsing, keyed by dotted path
    /// (e.g. "model.backbone"). Re-emitted by serialize_config.
    std::map<std::string, nlohmann::json> extras;

    bool operator==(const RequestConfig&) const = default;
};

struct CanonicalConfig {
    RequestConfig config;
    std::optional<double> speed_ms_per_sample;
    std::optional<double> flops_total;
    std::optional<double> parameter_count;

    bool operator==(const CanonicalConfig&) const = default;
};

enum class ParseMode { strict, lenient };

/// Parses Listing-style configuration JSON. Missing optional fields take their
/// defaults; `model.task` is mandatory in both modes. In lenient mode unknown
/// keys land in `extras` and a message is appended to `warnings` (if given);
/// enum spellings are also matched case-insensitively.
RequestConfig parse_request_config(std::string_view json_text, ParseMode mode,
                                   std::vector<std::string>* warnings = nullptr);
RequestConfig config_from_json(const nlohmann::json& doc, ParseMode mode,
                               std::vector<std::string>* warnings = nullptr);

nlohmann::ordered_json config_to_json(const RequestConfig& cfg);
std::string serialize_config(const RequestConfig& cfg, int indent = 2);

/// Speed in milliseconds per sample. Unset for unit none or value 0;
/// UnitError for `{0, fps}`.
std::optional<double> normalize_units(const SpeedQuantity& q);
/// Raw FLOP count.
std::optional<double> normalize_units(const FlopsQuantity& q);
/// Raw parameter count.
std::optional<double> normalize_units(const ParamQuantity& q);

/// Lowercases and whitespace-collapses free text.
std::string canonical_text(std::string_view text);

CanonicalConfig canonicalize(const RequestConfig& cfg);

}  // namespace r2m::schema
