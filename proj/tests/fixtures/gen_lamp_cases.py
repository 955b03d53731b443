# SPDX-License-Identifier: Apache-2.0
"""Generates lamp_cases.json: 50 (pred, gold) configuration pairs with the
expected key verdicts, computed here independently of the C++ scorer.

Run from this directory: python3 gen_lamp_cases.py
"""

import copy
import itertools
import json
from pathlib import Path

HERE = Path(__file__).resolve().parent
THRESHOLD = 0.8

ITEM_KEYS = ["data.scenario", "data.modality", "model.task", "model.specific_model", "model.speed",
             "model.flops", "model.parameters", "deploy.device", "deploy.inference engine"]
LIST_KEYS = ["data.object", "data.specific", "model.metrics"]

SPEED = {"ms": 1.0, "s": 1e3, "min": 6e4, "h": 3.6e6}
FLOPS = {"FLOPs": 1.0, "MFLOPs": 1e6, "GFLOPs": 1e9, "TFLOPs": 1e12, "PFLOPs": 1e15, "EFLOPs": 1e18}
PARAMS = {"K": 1e3, "M": 1e6, "B": 1e9}


def tokens(s):
    def cls(ch):
        if ch.isascii() and ch.isdigit():
            return "digit"
        if (ch.isascii() and ch.isalpha()) or not ch.isascii():
            return "letter"
        return None

    out, cur, cur_cls = [], "", None
    for ch in s:
        c = cls(ch)
        if c is None or (c != cur_cls and cur):
            if cur:
                out.append(cur)
            cur = ""
        if c is not None:
            cur += ch.lower()
        cur_cls = c
    if cur:
        out.append(cur)
    return out


def levenshtein(a, b):
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def similarity(a, b):
    ta, tb = tokens(a), tokens(b)
    ja, jb = "".join(ta), "".join(tb)
    if not ja and not jb:
        return 1.0
    char = 1.0 - levenshtein(ja, jb) / max(len(ja), len(jb))
    sa, sb = set(ta), set(tb)
    union = len(sa | sb)
    tok = len(sa & sb) / union if union else 0.0
    return max(char, tok)


def canon(s):
    return " ".join(s.lower().split())


def fuzzy(a, b):
    return similarity(canon(a), canon(b)) >= THRESHOLD


def quantity(q, table):
    if q["unit"] == "none" or q["value"] == 0:
        return None
    if q["unit"] == "fps":
        return 1000.0 / q["value"]
    return q["value"] * table[q["unit"]]


def same(a, b):
    if a is None or b is None:
        return a is None and b is None
    return abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))


def metric_value(v):
    return v / 100.0 if 1.0 < v <= 100.0 else v


def paired(xs, ys, match):
    if len(xs) != len(ys):
        return False
    return any(all(match(x, y) for x, y in zip(xs, perm)) for perm in itertools.permutations(ys))


def verdicts(pred, gold):
    pd, gd = pred["data"], gold["data"]
    pm, gm = pred["model"], gold["model"]
    spec = lambda m: canon(m["specific_model"]) or "none"
    return {
        "data.scenario": fuzzy(pd["scenario"], gd["scenario"]),
        "data.modality": fuzzy(pd["modality"], gd["modality"]),
        "model.task": pm["task"] == gm["task"],
        "model.specific_model": fuzzy(spec(pm), spec(gm)),
        "model.speed": same(quantity(pm["speed"], SPEED), quantity(gm["speed"], SPEED)),
        "model.flops": same(quantity(pm["flops"], FLOPS), quantity(gm["flops"], FLOPS)),
        "model.parameters": same(quantity(pm["parameters"], PARAMS), quantity(gm["parameters"], PARAMS)),
        "deploy.device": pred["deploy"]["device"] == gold["deploy"]["device"],
        "deploy.inference engine": pred["deploy"]["inference engine"] == gold["deploy"]["inference engine"],
        "data.object": paired(pd["object"], gd["object"], fuzzy),
        "data.specific": paired(pd["specific"], gd["specific"], fuzzy),
        "model.metrics": paired(pm["metrics"], gm["metrics"],
                                lambda a, b: fuzzy(a["name"], b["name"])
                                and same(metric_value(a["value"]), metric_value(b["value"]))),
    }


def set_path(cfg, path, value):
    node = cfg
    parts = path.split(".")
    for p in parts[:-1]:
        node = node[p]
    node[parts[-1]] = value


# (name, path, new value). Paths are dotted; list values replace the whole list.
MUTATIONS = [
    ("identical", None, None),
    ("scenario_other", "data.scenario", "underwater"),
    ("scenario_case", "data.scenario", "  AGRICULTURE "),
    ("modality_other", "data.modality", "thermal"),
    ("modality_case", "data.modality", "RGB"),
    ("task_other", "model.task", "detection"),
    ("specific_model_set", "model.specific_model", "resnet34"),
    ("speed_set", "model.speed", {"value": 20, "unit": "ms"}),
    ("flops_same_in_tflops", "model.flops", {"value": 0.5, "unit": "TFLOPs"}),
    ("flops_other", "model.flops", {"value": 50, "unit": "GFLOPs"}),
    ("flops_unset", "model.flops", {"value": 0, "unit": "none"}),
    ("params_set", "model.parameters", {"value": 5, "unit": "B"}),
    ("device_other", "deploy.device", "gpu"),
    ("engine_other", "deploy.inference engine", "openvino"),
    ("engine_none", "deploy.inference engine", "none"),
    ("object_typo", "data.object", ["crop"]),
    ("object_other", "data.object", ["weeds"]),
    ("object_extra", "data.object", ["crops", "weeds"]),
    ("object_empty", "data.object", []),
    ("specific_added", "data.specific", ["agri1k"]),
    ("metric_value_other", "model.metrics", [{"name": "accuracy", "value": 0.8}]),
    ("metric_percent", "model.metrics", [{"name": "accuracy", "value": 75}]),
    ("metric_name_case", "model.metrics", [{"name": "Accuracy", "value": 0.75}]),
    ("metric_name_other", "model.metrics", [{"name": "f1 score", "value": 0.75}]),
    ("metric_extra", "model.metrics", [{"name": "accuracy", "value": 0.75}, {"name": "precision", "value": 0.7}]),
    ("description_other", "data.description", "Something else entirely."),
]

# Golds for the remaining cases: multi-element lists exercise the pairing rule.
MULTI_GOLD = {
    "data": {"description": "Street scenes.", "scenario": "street", "object": ["person", "car", "bicycle"],
             "modality": "rgb", "specific": ["coco2017", "voc07"]},
    "model": {"description": "A detector.", "task": "detection", "specific_model": "yolox",
              "speed": {"value": 25, "unit": "fps"}, "flops": {"value": 0, "unit": "none"},
              "parameters": {"value": 20, "unit": "M"},
              "metrics": [{"name": "mAP", "value": 0.45}, {"name": "recall", "value": 0.6}]},
    "deploy": {"description": "Edge GPU.", "device": "gpu", "inference engine": "onnxruntime"},
}

MULTI_MUTATIONS = [
    ("multi_identical", None, None),
    ("multi_object_reordered", "data.object", ["bicycle", "person", "car"]),
    ("multi_object_one_wrong", "data.object", ["person", "car", "horse"]),
    ("multi_object_missing", "data.object", ["person", "car"]),
    ("multi_object_duplicate", "data.object", ["person", "person", "car"]),
    ("multi_object_plural", "data.object", ["persons", "cars", "bicycles"]),
    ("multi_specific_reordered", "data.specific", ["voc07", "coco2017"]),
    ("multi_specific_one_wrong", "data.specific", ["coco2017", "cityscapes"]),
    ("multi_specific_near", "data.specific", ["coco 2017", "voc 07"]),
    ("multi_speed_in_ms", "model.speed", {"value": 40, "unit": "ms"}),
    ("multi_speed_other", "model.speed", {"value": 30, "unit": "fps"}),
    ("multi_speed_unset", "model.speed", {"value": 0, "unit": "none"}),
    ("multi_params_in_k", "model.parameters", {"value": 20000, "unit": "K"}),
    ("multi_params_other", "model.parameters", {"value": 2, "unit": "M"}),
    ("multi_specific_model_variant", "model.specific_model", "YOLOX"),
    ("multi_specific_model_other", "model.specific_model", "faster rcnn"),
    ("multi_metrics_reordered", "model.metrics", [{"name": "recall", "value": 0.6}, {"name": "mAP", "value": 0.45}]),
    ("multi_metrics_one_wrong", "model.metrics", [{"name": "mAP", "value": 0.45}, {"name": "recall", "value": 0.5}]),
    ("multi_metrics_swapped_values", "model.metrics", [{"name": "mAP", "value": 0.6}, {"name": "recall", "value": 0.45}]),
    ("multi_device_cpu", "deploy.device", "cpu"),
    ("multi_engine_ncnn", "deploy.inference engine", "ncnn"),
    ("multi_flops_set", "model.flops", {"value": 100, "unit": "GFLOPs"}),
    ("multi_scenario_near", "data.scenario", "streets"),
    ("multi_modality_other", "data.modality", "depth"),
]


def main():
    crops_gold = json.loads((HERE / "crops_gold.json").read_text())
    cases = []
    for gold, mutations in ((crops_gold, MUTATIONS), (MULTI_GOLD, MULTI_MUTATIONS)):
        for name, path, value in mutations:
            pred = copy.deepcopy(gold)
            if path is not None:
                set_path(pred, path, value)
            cases.append({"name": name, "pred": pred, "gold": gold, "expected": verdicts(pred, gold)})
    assert len(cases) == 50, len(cases)

    item = sum(c["expected"][k] for c in cases for k in ITEM_KEYS)
    lst = sum(c["expected"][k] for c in cases for k in LIST_KEYS)
    perfect = sum(all(c["expected"].values()) for c in cases)
    sheet = {"cases": len(cases), "item_correct": item, "item_total": 9 * len(cases), "list_correct": lst,
             "list_total": 3 * len(cases), "all_correct_requests": perfect}
    out = {"threshold": THRESHOLD, "sheet": sheet, "cases": cases}
    (HERE / "lamp_cases.json").write_text(json.dumps(out, indent=1) + "\n")
    print(json.dumps(sheet))


if __name__ == "__main__":
    main()
