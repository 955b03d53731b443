// SPDX-License-Identifier: Apache-2.0
//
// The optimization loop shared by every strategy: propose, train, record.

#pragma once

#include <cstdint>
#include <string>

#include "r2m/hpo/acquisition.hpp"
#include "r2m/hpo/trace.hpp"
#include "r2m/llm/chat.hpp"
#include "r2m/llm/prompts.hpp"
#include "r2m/registry.hpp"
#include "r2m/trainer.hpp"

namespace r2m::hpo {

/// What is being tuned: the request, its selected model and data summary.
struct HPOTarget {
    std::string request_id;
    Task task = Task::classification;
    registry::ModelCard model;
    std::int64_t class_count = 0;
    std::int64_t image_count = 0;
    llm::HPOContext context;
};

/// Context for the HPO conversation built from a selected model card and data.
llm::HPOContext make_hpo_context(const registry::ModelCard& model, std::int64_t class_count,
                                 const std::string& dataset);

struct HPOOptions {
    Strategy strategy = Strategy::random;
    int budget = 5;
    std::uint64_t seed = 0;
    /// Required by the llm strategy.
    llm::ChatClient* client = nullptr;
    std::size_t pool_size = kDefaultPoolSize;
    double xi = kDefaultXi;
    /// Uniform rounds taken before the surrogate is first fitted.
    int initial_points = 2;
    /// Parallel evaluations for the random strategy; other strategies are
    /// sequential because each proposal depends on earlier results.
    int workers = 1;
};

/// Runs `budget` rounds. A round whose training fails, or whose LLM proposal
/// cannot be decoded, is recorded with metric 0 and a note; the run continues.
HPOTrace run_hpo(const HPOOptions& options, trainer::TrainerExecutor& executor, const HPOTarget& target);

}  // namespace r2m::hpo
