// SPDX-License-Identifier: Apache-2.0

#include "r2m/schema.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <set>
#include <utility>

#include <fmt/core.h>

#include "r2m/util.hpp"

namespace r2m::schema {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<SpeedUnit, std::string_view>, 6> kSpeedUnits{{
    {SpeedUnit::ms, "ms"},
    {SpeedUnit::s, "s"},
    {SpeedUnit::min, "min"},
    {SpeedUnit::h, "h"},
    {SpeedUnit::fps, "fps"},
    {SpeedUnit::none, "none"},
}};
constexpr std::array<std::pair<FlopsUnit, std::string_view>, 7> kFlopsUnits{{
    {FlopsUnit::FLOPs, "FLOPs"},
    {FlopsUnit::MFLOPs, "MFLOPs"},
    {FlopsUnit::GFLOPs, "GFLOPs"},
    {FlopsUnit::TFLOPs, "TFLOPs"},
    {FlopsUnit::PFLOPs, "PFLOPs"},
    {FlopsUnit::EFLOPs, "EFLOPs"},
    {FlopsUnit::none, "none"},
}};
constexpr std::array<std::pair<ParamUnit, std::string_view>, 4> kParamUnits{{
    {ParamUnit::K, "K"},
    {ParamUnit::M, "M"},
    {ParamUnit::B, "B"},
    {ParamUnit::none, "none"},
}};
constexpr std::array<std::pair<Device, std::string_view>, 3> kDevices{{
    {Device::cpu, "cpu"},
    {Device::gpu, "gpu"},
    {Device::none, "none"},
}};
constexpr std::array<std::pair<Engine, std::string_view>, 4> kEngines{{
    {Engine::onnxruntime, "onnxruntime"},
    {Engine::ncnn, "ncnn"},
    {Engine::openvino, "openvino"},
    {Engine::none, "none"},
}};
constexpr std::array<std::pair<Task, std::string_view>, 4> kTasks{{
    {Task::classification, "classification"},
    {Task::detection, "detection"},
    {Task::segmentation, "segmentation"},
    {Task::keypoint, "keypoint"},
}};

template <class E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value) {
    for (const auto& [e, name] : table) {
        if (e == value) return name;
    }
    return "none";
}

template <class E, std::size_t N>
std::string allowed_list(const std::array<std::pair<E, std::string_view>, N>& table) {
    std::string out;
    for (const auto& [e, name] : table) {
        if (!out.empty()) out += ", ";
        out += name;
    }
    return out;
}

struct Reader {
    ParseMode mode;
    std::vector<std::string>* warnings;
    std::map<std::string, json>* extras;

    bool lenient() const { return mode == ParseMode::lenient; }

    void warn(std::string message) const {
        if (warnings) warnings->push_back(std::move(message));
    }

    const json* field(const json& obj, const char* key) const {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) return nullptr;
        return &*it;
    }

    void check_object(const json& obj, const std::string& path) const {
        if (!obj.is_object()) {
            throw SchemaError(path.empty() ? "$" : path, "expected a JSON object");
        }
    }

    void check_keys(const json& obj, const std::string& path,
                    std::initializer_list<std::string_view> known) const {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool found = false;
            for (auto k : known) found = found || (k == it.key());
            if (found) continue;
            const std::string key_path = path.empty() ? it.key() : path + "." + it.key();
            if (!lenient()) throw SchemaError(key_path, "unknown key");
            warn("unknown key '" + key_path + "' preserved");
            (*extras)[key_path] = it.value();
        }
    }

    std::string text(const json& obj, const char* key, const std::string& path,
                     std::string fallback = "") const {
        const json* v = field(obj, key);
        if (!v) return fallback;
        if (!v->is_string()) throw SchemaError(path, "expected a string");
        return v->get<std::string>();
    }

    std::vector<std::string> text_list(const json& obj, const char* key,
                                       const std::string& path) const {
        const json* v = field(obj, key);
        if (!v) return {};
        if (v->is_string() && lenient()) {
            warn("'" + path + "' given as a string; wrapped into a list");
            return {v->get<std::string>()};
        }
        if (!v->is_array()) throw SchemaError(path, "expected an array of strings");
        std::vector<std::string> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            const json& item = (*v)[i];
            if (!item.is_string()) {
                throw SchemaError(fmt::format("{}[{}]", path, i), "expected a string");
            }
            out.push_back(item.get<std::string>());
        }
        return out;
    }

    double number(const json& obj, const char* key, const std::string& path) const {
        const json* v = field(obj, key);
        if (!v) return 0.0;
        if (!v->is_number()) throw SchemaError(path, "expected a number");
        const double d = v->get<double>();
        if (!std::isfinite(d) || d < 0.0) throw SchemaError(path, "expected a non-negative number");
        return d;
    }

    template <class E, std::size_t N>
    E enumeration(const json& obj, const char* key, const std::string& path,
                  const std::array<std::pair<E, std::string_view>, N>& table, E fallback) const {
        const json* v = field(obj, key);
        if (!v) return fallback;
        if (!v->is_string()) throw SchemaError(path, "expected a string");
        const std::string s = v->get<std::string>();
        for (const auto& [e, name] : table) {
            if (name == s) return e;
        }
        if (lenient()) {
            const std::string folded = to_lower(trim(s));
            for (const auto& [e, name] : table) {
                if (to_lower(name) == folded) {
                    warn(fmt::format("'{}' value '{}' matched to '{}'", path, s, name));
                    return e;
                }
            }
        }
        throw SchemaError(path, fmt::format("'{}' is not one of [{}]", s, allowed_list(table)));
    }

    template <class Unit, std::size_t N>
    Quantity<Unit> quantity(const json& parent, const char* key, const std::string& path,
                            const std::array<std::pair<Unit, std::string_view>, N>& table) const {
        const json* v = field(parent, key);
        if (!v) return {};
        check_object(*v, path);
        check_keys(*v, path, {"value", "unit"});
        Quantity<Unit> q;
        q.value = number(*v, "value", path + ".value");
        q.unit = enumeration(*v, "unit", path + ".unit", table, Unit::none);
        return q;
    }
};

void set_at_path(nlohmann::ordered_json& root, const std::string& path, const json& value) {
    nlohmann::ordered_json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        std::string segment = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        std::optional<std::size_t> index;
        if (const auto lb = segment.find('['); lb != std::string::npos && segment.back() == ']') {
            index = std::stoul(segment.substr(lb + 1, segment.size() - lb - 2));
            segment = segment.substr(0, lb);
        }
        const bool last = dot == std::string::npos;
        nlohmann::ordered_json* next = &(*node)[segment];
        if (index) {
            if (!next->is_array()) *next = nlohmann::ordered_json::array();
            while (next->size() <= *index) next->push_back(nlohmann::ordered_json::object());
            next = &(*next)[*index];
        }
        if (last) {
            *next = nlohmann::ordered_json(value);
            return;
        }
        node = next;
        start = dot + 1;
    }
}

template <class Unit, std::size_t N>
nlohmann::ordered_json quantity_json(const Quantity<Unit>& q,
                                     const std::array<std::pair<Unit, std::string_view>, N>& table) {
    nlohmann::ordered_json j;
    j["value"] = json_number(q.value);
    j["unit"] = std::string(name_of(table, q.unit));
    return j;
}

}  // namespace

std::string_view to_string(SpeedUnit u) noexcept { return name_of(kSpeedUnits, u); }
std::string_view to_string(FlopsUnit u) noexcept { return name_of(kFlopsUnits, u); }
std::string_view to_string(ParamUnit u) noexcept { return name_of(kParamUnits, u); }
std::string_view to_string(Device d) noexcept { return name_of(kDevices, d); }
std::string_view to_string(Engine e) noexcept { return name_of(kEngines, e); }

std::optional<Device> device_from_string(std::string_view s) noexcept {
    for (const auto& [e, name] : kDevices) {
        if (name == s) return e;
    }
    return std::nullopt;
}

std::optional<Engine> engine_from_string(std::string_view s) noexcept {
    for (const auto& [e, name] : kEngines) {
        if (name == s) return e;
    }
    return std::nullopt;
}

RequestConfig config_from_json(const json& doc, ParseMode mode, std::vector<std::string>* warnings) {
    RequestConfig cfg;
    Reader r{mode, warnings, &cfg.extras};
    r.check_object(doc, "");
    r.check_keys(doc, "", {"data", "model", "deploy"});

    static const json kEmpty = json::object();

    const json* data = r.field(doc, "data");
    if (data) r.check_object(*data, "data");
    const json& d = data ? *data : kEmpty;
    r.check_keys(d, "data", {"description", "scenario", "object", "modality", "specific"});
    cfg.data.description = r.text(d, "description", "data.description");
    cfg.data.scenario = r.text(d, "scenario", "data.scenario");
    cfg.data.object = r.text_list(d, "object", "data.object");
    cfg.data.modality = r.text(d, "modality", "data.modality");
    cfg.data.specific = r.text_list(d, "specific", "data.specific");

    const json* model = r.field(doc, "model");
    if (model) r.check_object(*model, "model");
    const json& m = model ? *model : kEmpty;
    r.check_keys(m, "model", {"description", "task", "specific_model", "speed", "flops", "parameters", "metrics"});
    cfg.model.description = r.text(m, "description", "model.description");
    if (!r.field(m, "task")) throw SchemaError("model.task", "missing mandatory key");
    cfg.model.task = r.enumeration(m, "task", "model.task", kTasks, Task::classification);
    cfg.model.specific_model = r.text(m, "specific_model", "model.specific_model", "none");
    cfg.model.speed = r.quantity(m, "speed", "model.speed", kSpeedUnits);
    cfg.model.flops = r.quantity(m, "flops", "model.flops", kFlopsUnits);
    cfg.model.parameters = r.quantity(m, "parameters", "model.parameters", kParamUnits);
    if (const json* metrics = r.field(m, "metrics")) {
        if (!metrics->is_array()) throw SchemaError("model.metrics", "expected an array");
        for (std::size_t i = 0; i < metrics->size(); ++i) {
            const std::string path = fmt::format("model.metrics[{}]", i);
            const json& item = (*metrics)[i];
            r.check_object(item, path);
            r.check_keys(item, path, {"name", "value"});
            MetricTarget t;
            t.name = r.text(item, "name", path + ".name");
            t.value = r.number(item, "value", path + ".value");
            if (t.value > 100.0) throw SchemaError(path + ".value", "metric value above 100");
            cfg.model.metrics.push_back(std::move(t));
        }
    }

    const json* deploy = r.field(doc, "deploy");
    if (deploy) r.check_object(*deploy, "deploy");
    const json& dp = deploy ? *deploy : kEmpty;
    r.check_keys(dp, "deploy", {"description", "device", "inference engine"});
    cfg.deploy.description = r.text(dp, "description", "deploy.description");
    cfg.deploy.device = r.enumeration(dp, "device", "deploy.device", kDevices, Device::none);
    cfg.deploy.inference_engine =
        r.enumeration(dp, "inference engine", "deploy.inference engine", kEngines, Engine::none);
    return cfg;
}

RequestConfig parse_request_config(std::string_view json_text, ParseMode mode,
                                   std::vector<std::string>* warnings) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    return config_from_json(doc, mode, warnings);
}

nlohmann::ordered_json config_to_json(const RequestConfig& cfg) {
    nlohmann::ordered_json root;
    auto& data = root["data"];
    data["description"] = cfg.data.description;
    data["scenario"] = cfg.data.scenario;
    data["object"] = cfg.data.object;
    data["modality"] = cfg.data.modality;
    data["specific"] = cfg.data.specific;

    auto& model = root["model"];
    model["description"] = cfg.model.description;
    model["task"] = std::string(to_string(cfg.model.task));
    model["specific_model"] = cfg.model.specific_model;
    model["speed"] = quantity_json(cfg.model.speed, kSpeedUnits);
    model["flops"] = quantity_json(cfg.model.flops, kFlopsUnits);
    model["parameters"] = quantity_json(cfg.model.parameters, kParamUnits);
    model["metrics"] = nlohmann::ordered_json::array();
    for (const auto& t : cfg.model.metrics) {
        nlohmann::ordered_json mt;
        mt["name"] = t.name;
        mt["value"] = json_number(t.value);
        model["metrics"].push_back(std::move(mt));
    }

    auto& deploy = root["deploy"];
    deploy["description"] = cfg.deploy.description;
    deploy["device"] = std::string(to_string(cfg.deploy.device));
    deploy["inference engine"] = std::string(to_string(cfg.deploy.inference_engine));

    for (const auto& [path, value] : cfg.extras) set_at_path(root, path, value);
    return root;
}

std::string serialize_config(const RequestConfig& cfg, int indent) {
    return config_to_json(cfg).dump(indent);
}

std::optional<double> normalize_units(const SpeedQuantity& q) {
    if (q.unit == SpeedUnit::none) return std::nullopt;
    if (q.unit == SpeedUnit::fps) {
        if (q.value == 0.0) throw UnitError("speed of 0 fps cannot be converted to ms per sample");
        return 1000.0 / q.value;
    }
    if (q.value == 0.0) return std::nullopt;
    switch (q.unit) {
        case SpeedUnit::ms: return q.value;
        case SpeedUnit::s: return q.value * 1e3;
        case SpeedUnit::min: return q.value * 6e4;
        case SpeedUnit::h: return q.value * 3.6e6;
        default: return std::nullopt;
    }
}

std::optional<double> normalize_units(const FlopsQuantity& q) {
    if (q.unit == FlopsUnit::none || q.value == 0.0) return std::nullopt;
    switch (q.unit) {
        case FlopsUnit::FLOPs: return q.value;
        case FlopsUnit::MFLOPs: return q.value * 1e6;
        case FlopsUnit::GFLOPs: return q.value * 1e9;
        case FlopsUnit::TFLOPs: return q.value * 1e12;
        case FlopsUnit::PFLOPs: return q.value * 1e15;
        case FlopsUnit::EFLOPs: return q.value * 1e18;
        default: return std::nullopt;
    }
}

std::optional<double> normalize_units(const ParamQuantity& q) {
    if (q.unit == ParamUnit::none || q.value == 0.0) return std::nullopt;
    switch (q.unit) {
        case ParamUnit::K: return q.value * 1e3;
        case ParamUnit::M: return q.value * 1e6;
        case ParamUnit::B: return q.value * 1e9;
        default: return std::nullopt;
    }
}

std::string canonical_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

CanonicalConfig canonicalize(const RequestConfig& cfg) {
    CanonicalConfig out;
    RequestConfig& c = out.config;
    c = cfg;
    c.data.description = canonical_text(cfg.data.description);
    c.data.scenario = canonical_text(cfg.data.scenario);
    c.data.modality = canonical_text(cfg.data.modality);
    for (auto& o : c.data.object) o = canonical_text(o);
    for (auto& s : c.data.specific) s = canonical_text(s);
    c.model.description = canonical_text(cfg.model.description);
    c.model.specific_model = canonical_text(cfg.model.specific_model);
    if (c.model.specific_model.empty()) c.model.specific_model = "none";
    for (auto& t : c.model.metrics) {
        t.name = canonical_text(t.name);
        if (t.value > 1.0 && t.value <= 100.0) t.value /= 100.0;
    }
    c.deploy.description = canonical_text(cfg.deploy.description);

    // A zero value is unconstrained whatever its unit, so {0, fps} never
    // reaches the division in normalize_units.
    if (c.model.speed.value != 0.0) out.speed_ms_per_sample = normalize_units(c.model.speed);
    out.flops_total = normalize_units(c.model.flops);
    out.parameter_count = normalize_units(c.model.parameters);
    return out;
}

}  // namespace r2m::schema
