// SPDX-License-Identifier: Apache-2.0
//
// Dataset and model zoos loaded from a JSON manifest, plus the data and model
// selection pipelines that run against them.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "r2m/common.hpp"
#include "r2m/schema.hpp"
#include "r2m/textmatch.hpp"

namespace r2m::registry {

struct DataCard {
    std::string name;
    Task task = Task::classification;
    std::vector<std::string> classes;
    std::string modality;
    std::vector<std::string> scenarios;
    std::int64_t image_count = 0;
    std::string source;

    bool operator==(const DataCard&) const = default;
};

struct ModelCard {
    std::string name;
    Task task = Task::classification;
    std::string structure;
    double params_m = 0.0;
    double flops_g = 0.0;
    double speed_ms = 0.0;
    schema::MetricTarget performance;
    std::string source;

    bool operator==(const ModelCard&) const = default;
};

class ManifestError : public Error {
public:
    using Error::Error;
};

class DuplicateError : public ManifestError {
public:
    using ManifestError::ManifestError;
};

class SelectionError : public Error {
public:
    using Error::Error;
};

struct Registry {
    std::vector<DataCard> data;
    std::vector<ModelCard> models;
    std::string digest;
};

/// Manifest format: {"data": [DataCard...], "models": [ModelCard...]}. Model
/// cards carry "params(M)" and "flops(G)".
Registry load_zoo(const std::filesystem::path& manifest_path);
Registry parse_zoo(std::string_view manifest_text);

nlohmann::ordered_json to_json(const DataCard& card);
nlohmann::ordered_json to_json(const ModelCard& card);
DataCard data_card_from_json(const nlohmann::json& j);
ModelCard model_card_from_json(const nlohmann::json& j);

struct ChosenData {
    DataCard card;
    std::vector<std::string> matched_classes;

    bool operator==(const ChosenData&) const = default;
};

struct DataSelection {
    std::vector<ChosenData> chosen;
    /// Request object term -> card classes that cover it.
    std::map<std::string, std::vector<std::string>> class_mapping;
    std::vector<std::string> uncovered;
    std::int64_t total_images = 0;

    bool operator==(const DataSelection&) const = default;
};

nlohmann::ordered_json to_json(const DataSelection& sel);
DataSelection data_selection_from_json(const nlohmann::json& j);

/// Task filter, optional fuzzy ranking against requested dataset names, then a
/// walk that accumulates cards until every request object is covered. Class
/// matching uses `threshold` on textmatch::similarity after taxonomy expansion.
/// Throws SelectionError when no card matches the task.
DataSelection select_data(const schema::CanonicalConfig& cfg, const Registry& reg,
                          const textmatch::Taxonomy& tax,
                          double threshold = textmatch::kDefaultMatchThreshold);

/// Task filter, fuzzy score against the requested model, constraint filter
/// (inclusive), then argmax over (score, performance). Ties keep manifest order.
ModelCard select_model(const schema::CanonicalConfig& cfg, const Registry& reg);

}  // namespace r2m::registry
