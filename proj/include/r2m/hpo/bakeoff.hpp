// SPDX-License-Identifier: Apache-2.0
//
// Strategy comparison on seeded synthetic response surfaces.

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "r2m/hpo/loop.hpp"
#include "r2m/trainer.hpp"

namespace r2m::hpo {

struct StrategyArm {
    Strategy strategy = Strategy::random;
    int budget = 5;

    bool operator<(const StrategyArm& o) const {
        return std::pair(strategy, budget) < std::pair(o.strategy, o.budget);
    }
    bool operator==(const StrategyArm&) const = default;
};

std::string arm_label(const StrategyArm& arm);

struct BakeoffConfig {
    std::vector<Task> tasks{kAllTasks, kAllTasks + 4};
    int surfaces = 20;
    int seeds = 50;
    std::vector<StrategyArm> arms;
    trainer::SimulatedTrainerOptions trainer{};
    /// Also compute the grid oracle for each surface (noise disabled).
    bool with_oracle = false;
};

/// Request id naming surface `index` of `task`; the simulated trainer derives
/// the surface parameters from it.
std::string surface_id(Task task, int index);

struct SurfaceOutcome {
    std::string surface;
    Task task = Task::classification;
    /// Mean over seeds of the best metric per arm.
    std::map<StrategyArm, double> mean_best;
    double oracle = 0.0;
};

struct BakeoffResult {
    std::vector<SurfaceOutcome> surfaces;

    /// Fraction of surfaces on which `a` scores at least (strict: more than) `b`.
    double win_rate(const StrategyArm& a, const StrategyArm& b, bool strict = false) const;
};

BakeoffResult run_bakeoff(const BakeoffConfig& config);

/// Plain-text table: per task, the mean over surfaces of each arm's mean best.
std::string format_bakeoff(const BakeoffResult& result, const std::vector<StrategyArm>& arms);

}  // namespace r2m::hpo
