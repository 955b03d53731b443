// SPDX-License-Identifier: Apache-2.0

#include "r2m/registry.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <fmt/core.h>

#include "r2m/util.hpp"

namespace r2m::registry {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        throw ManifestError(fmt::format("{}: missing field '{}'", where, key));
    }
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string()) throw ManifestError(fmt::format("{}: '{}' must be a string", where, key));
    return v.get<std::string>();
}

double require_positive(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number()) throw ManifestError(fmt::format("{}: '{}' must be a number", where, key));
    const double d = v.get<double>();
    if (!(d > 0.0)) throw ManifestError(fmt::format("{}: '{}' must be positive", where, key));
    return d;
}

Task require_task(const json& obj, const std::string& where) {
    const std::string t = require_string(obj, "task", where);
    auto task = task_from_string(t);
    if (!task) throw ManifestError(fmt::format("{}: unknown task '{}'", where, t));
    return *task;
}

std::vector<std::string> string_list(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_array()) throw ManifestError(fmt::format("{}: '{}' must be an array", where, key));
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) throw ManifestError(fmt::format("{}: '{}' entries must be strings", where, key));
        out.push_back(v.get<std::string>());
    }
    return out;
}

bool within(double card_value, const std::optional<double>& limit) {
    if (!limit) return true;
    return card_value <= *limit * (1.0 + 1e-12);
}

}  // namespace

DataCard data_card_from_json(const json& j) {
    if (!j.is_object()) throw ManifestError("data card must be an object");
    DataCard c;
    c.name = require_string(j, "name", "data card");
    const std::string where = "data card '" + c.name + "'";
    c.task = require_task(j, where);
    c.classes = string_list(j, "classes", where);
    if (c.classes.empty()) throw ManifestError(where + ": 'classes' must not be empty");
    c.modality = j.value("modality", "");
    c.scenarios = string_list(j, "scenarios", where);
    const json& count = require(j, "image_count", where);
    if (!count.is_number_integer() || count.get<std::int64_t>() <= 0) {
        throw ManifestError(where + ": 'image_count' must be a positive integer");
    }
    c.image_count = count.get<std::int64_t>();
    c.source = j.value("source", "");
    return c;
}

ModelCard model_card_from_json(const json& j) {
    if (!j.is_object()) throw ManifestError("model card must be an object");
    ModelCard c;
    c.name = require_string(j, "name", "model card");
    const std::string where = "model card '" + c.name + "'";
    c.task = require_task(j, where);
    c.structure = j.value("structure", "");
    c.params_m = require_positive(j, "params(M)", where);
    c.flops_g = require_positive(j, "flops(G)", where);
    c.speed_ms = require_positive(j, "speed_ms", where);
    const json& perf = require(j, "performance", where);
    if (!perf.is_object()) throw ManifestError(where + ": 'performance' must be an object");
    c.performance.name = perf.value("name", std::string(metric_name_for(c.task)));
    const json& pv = require(perf, "value", where + " performance");
    if (!pv.is_number()) throw ManifestError(where + ": performance value must be a number");
    c.performance.value = pv.get<double>();
    if (c.performance.value < 0.0 || c.performance.value > 100.0) {
        throw ManifestError(where + ": performance value out of range");
    }
    // Percent-scale benchmark scores are folded into [0, 1].
    if (c.performance.value > 1.0) c.performance.value /= 100.0;
    c.source = j.value("source", "");
    return c;
}

nlohmann::ordered_json to_json(const DataCard& card) {
    nlohmann::ordered_json j;
    j["name"] = card.name;
    j["task"] = std::string(to_string(card.task));
    j["classes"] = card.classes;
    j["modality"] = card.modality;
    j["scenarios"] = card.scenarios;
    j["image_count"] = card.image_count;
    if (!card.source.empty()) j["source"] = card.source;
    return j;
}

nlohmann::ordered_json to_json(const ModelCard& card) {
    nlohmann::ordered_json j;
    j["name"] = card.name;
    j["task"] = std::string(to_string(card.task));
    j["structure"] = card.structure;
    j["params(M)"] = card.params_m;
    j["flops(G)"] = card.flops_g;
    j["speed_ms"] = card.speed_ms;
    j["performance"] = {{"name", card.performance.name}, {"value", card.performance.value}};
    if (!card.source.empty()) j["source"] = card.source;
    return j;
}

Registry parse_zoo(std::string_view manifest_text) {
    json doc;
    try {
        doc = json::parse(manifest_text);
    } catch (const json::parse_error& e) {
        throw ManifestError(std::string("malformed manifest JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ManifestError("manifest must be a JSON object");

    Registry reg;
    reg.digest = sha256_hex(manifest_text);
    std::set<std::string> names;
    if (auto it = doc.find("data"); it != doc.end()) {
        if (!it->is_array()) throw ManifestError("'data' must be an array");
        for (const auto& j : *it) {
            DataCard c = data_card_from_json(j);
            if (!names.insert(c.name).second) throw DuplicateError("duplicate data card '" + c.name + "'");
            reg.data.push_back(std::move(c));
        }
    }
    names.clear();
    if (auto it = doc.find("models"); it != doc.end()) {
        if (!it->is_array()) throw ManifestError("'models' must be an array");
        for (const auto& j : *it) {
            ModelCard c = model_card_from_json(j);
            if (!names.insert(c.name).second) throw DuplicateError("duplicate model card '" + c.name + "'");
            reg.models.push_back(std::move(c));
        }
    }
    return reg;
}

Registry load_zoo(const std::filesystem::path& manifest_path) {
    std::string text;
    try {
        text = read_file(manifest_path);
    } catch (const IoError& e) {
        throw ManifestError(e.what());
    }
    return parse_zoo(text);
}

nlohmann::ordered_json to_json(const DataSelection& sel) {
    nlohmann::ordered_json j;
    j["chosen"] = nlohmann::ordered_json::array();
    for (const auto& c : sel.chosen) {
        j["chosen"].push_back({{"card", to_json(c.card)}, {"matched_classes", c.matched_classes}});
    }
    j["class_mapping"] = nlohmann::ordered_json::object();
    for (const auto& [term, classes] : sel.class_mapping) j["class_mapping"][term] = classes;
    j["uncovered"] = sel.uncovered;
    j["total_images"] = sel.total_images;
    return j;
}

DataSelection data_selection_from_json(const json& j) {
    DataSelection sel;
    for (const auto& c : j.at("chosen")) {
        sel.chosen.push_back({data_card_from_json(c.at("card")),
                              c.at("matched_classes").get<std::vector<std::string>>()});
    }
    for (auto it = j.at("class_mapping").begin(); it != j.at("class_mapping").end(); ++it) {
        sel.class_mapping[it.key()] = it.value().get<std::vector<std::string>>();
    }
    sel.uncovered = j.at("uncovered").get<std::vector<std::string>>();
    sel.total_images = j.at("total_images").get<std::int64_t>();
    return sel;
}

DataSelection select_data(const schema::CanonicalConfig& cfg, const Registry& reg,
                          const textmatch::Taxonomy& tax, double threshold) {
    const auto& req = cfg.config;
    std::vector<const DataCard*> candidates;
    for (const auto& card : reg.data) {
        if (card.task == req.model.task) candidates.push_back(&card);
    }
    if (candidates.empty()) {
        throw SelectionError(fmt::format("no data: no dataset card for task '{}'", to_string(req.model.task)));
    }

    if (!req.data.specific.empty()) {
        std::vector<double> score(candidates.size(), 0.0);
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            for (const auto& wanted : req.data.specific) {
                score[i] = std::max(score[i], textmatch::similarity(wanted, candidates[i]->name));
            }
        }
        std::vector<std::size_t> order(candidates.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
        std::vector<const DataCard*> ranked;
        for (auto i : order) ranked.push_back(candidates[i]);
        candidates = std::move(ranked);
    }

    DataSelection sel;
    if (req.data.object.empty()) {
        const DataCard& top = *candidates.front();
        sel.chosen.push_back({top, {}});
        sel.total_images = top.image_count;
        return sel;
    }

    // Unique request terms in request order, each with its taxonomy expansion.
    std::vector<std::string> terms;
    for (const auto& o : req.data.object) {
        if (std::find(terms.begin(), terms.end(), o) == terms.end()) terms.push_back(o);
    }
    std::vector<std::set<std::string>> expansions;
    for (const auto& t : terms) expansions.push_back(textmatch::expand_objects(t, tax));

    std::vector<bool> covered(terms.size(), false);
    for (const DataCard* card : candidates) {
        if (std::all_of(covered.begin(), covered.end(), [](bool c) { return c; })) break;
        std::vector<std::string> matched;
        bool useful = false;
        std::vector<std::pair<std::size_t, std::string>> hits;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            for (const auto& cls : card->classes) {
                const std::string cls_canon = schema::canonical_text(cls);
                const bool hit = std::any_of(expansions[i].begin(), expansions[i].end(), [&](const std::string& e) {
                    return e == cls_canon || textmatch::similarity(e, cls_canon) >= threshold;
                });
                if (!hit) continue;
                hits.emplace_back(i, cls);
                if (!covered[i]) useful = true;
            }
        }
        if (!useful) continue;
        for (const auto& [i, cls] : hits) {
            covered[i] = true;
            auto& mapped = sel.class_mapping[terms[i]];
            if (std::find(mapped.begin(), mapped.end(), cls) == mapped.end()) mapped.push_back(cls);
            if (std::find(matched.begin(), matched.end(), cls) == matched.end()) matched.push_back(cls);
        }
        sel.chosen.push_back({*card, std::move(matched)});
        sel.total_images += card->image_count;
    }
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (!covered[i]) sel.uncovered.push_back(terms[i]);
    }
    return sel;
}

ModelCard select_model(const schema::CanonicalConfig& cfg, const Registry& reg) {
    const auto& req = cfg.config;
    const bool wants_specific = req.model.specific_model != "none" && !req.model.specific_model.empty();

    std::size_t task_matches = 0;
    std::size_t dropped_params = 0;
    std::size_t dropped_flops = 0;
    std::size_t dropped_speed = 0;
    const ModelCard* best = nullptr;
    double best_score = -1.0;

    for (const auto& card : reg.models) {
        if (card.task != req.model.task) continue;
        ++task_matches;
        const bool params_ok = within(card.params_m * 1e6, cfg.parameter_count);
        const bool flops_ok = within(card.flops_g * 1e9, cfg.flops_total);
        const bool speed_ok = within(card.speed_ms, cfg.speed_ms_per_sample);
        dropped_params += params_ok ? 0 : 1;
        dropped_flops += flops_ok ? 0 : 1;
        dropped_speed += speed_ok ? 0 : 1;
        if (!(params_ok && flops_ok && speed_ok)) continue;

        const double score =
            wants_specific ? textmatch::similarity(req.model.specific_model, card.name + " " + card.structure) : 0.0;
        if (!best || score > best_score ||
            (score == best_score && card.performance.value > best->performance.value)) {
            best = &card;
            best_score = score;
        }
    }

    if (task_matches == 0) {
        throw SelectionError(fmt::format("no model card for task '{}'", to_string(req.model.task)));
    }
    if (!best) {
        std::vector<std::string> binding;
        if (dropped_params) binding.push_back(fmt::format("parameters <= {} (excluded {})", *cfg.parameter_count, dropped_params));
        if (dropped_flops) binding.push_back(fmt::format("flops <= {} (excluded {})", *cfg.flops_total, dropped_flops));
        if (dropped_speed) binding.push_back(fmt::format("speed_ms <= {} (excluded {})", *cfg.speed_ms_per_sample, dropped_speed));
        std::string joined;
        for (const auto& b : binding) joined += (joined.empty() ? "" : "; ") + b;
        throw SelectionError("all model cards filtered out by constraints: " + joined);
    }
    return *best;
}

}  // namespace r2m::registry
