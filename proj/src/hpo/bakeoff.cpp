// SPDX-License-Identifier: Apache-2.0

#include "r2m/hpo/bakeoff.hpp"

#include <fmt/core.h>

namespace r2m::hpo {

std::string arm_label(const StrategyArm& arm) { return fmt::format("{}@{}", to_string(arm.strategy), arm.budget); }

std::string surface_id(Task task, int index) { return fmt::format("surface-{}-{:03}", to_string(task), index); }

double BakeoffResult::win_rate(const StrategyArm& a, const StrategyArm& b, bool strict) const {
    if (surfaces.empty()) return 0.0;
    std::size_t wins = 0;
    for (const auto& s : surfaces) {
        const double va = s.mean_best.at(a);
        const double vb = s.mean_best.at(b);
        if (strict ? va > vb : va >= vb) ++wins;
    }
    return static_cast<double>(wins) / static_cast<double>(surfaces.size());
}

BakeoffResult run_bakeoff(const BakeoffConfig& config) {
    BakeoffResult result;
    trainer::SimulatedTrainer executor(config.trainer);
    for (Task task : config.tasks) {
        for (int i = 0; i < config.surfaces; ++i) {
            SurfaceOutcome outcome;
            outcome.task = task;
            outcome.surface = surface_id(task, i);
            HPOTarget target;
            target.request_id = outcome.surface;
            target.task = task;
            for (const auto& arm : config.arms) {
                double sum = 0.0;
                for (int s = 0; s < config.seeds; ++s) {
                    HPOOptions o;
                    o.strategy = arm.strategy;
                    o.budget = arm.budget;
                    o.seed = static_cast<std::uint64_t>(s) + 1;
                    sum += run_hpo(o, executor, target).best.metric_value;
                }
                outcome.mean_best[arm] = sum / config.seeds;
            }
            if (config.with_oracle) {
                trainer::SurfaceParams params = trainer::SurfaceParams::derive(outcome.surface, task);
                outcome.oracle = trainer::oracle_best(params, trainer::SurfaceGrid::standard(search_space_for(task))).score;
            }
            result.surfaces.push_back(std::move(outcome));
        }
    }
    return result;
}

std::string format_bakeoff(const BakeoffResult& result, const std::vector<StrategyArm>& arms) {
    std::map<Task, std::map<StrategyArm, std::pair<double, int>>> acc;
    for (const auto& s : result.surfaces) {
        for (const auto& arm : arms) {
            auto& cell = acc[s.task][arm];
            cell.first += s.mean_best.at(arm);
            cell.second += 1;
        }
    }
    std::string out = fmt::format("{:<16}", "task");
    for (const auto& arm : arms) out += fmt::format("{:>14}", arm_label(arm));
    out += '\n';
    for (const auto& [task, cells] : acc) {
        out += fmt::format("{:<16}", to_string(task));
        for (const auto& arm : arms) {
            const auto& [sum, n] = cells.at(arm);
            out += fmt::format("{:>14.4f}", n == 0 ? 0.0 : sum / n);
        }
        out += '\n';
    }
    return out;
}

}  // namespace r2m::hpo
