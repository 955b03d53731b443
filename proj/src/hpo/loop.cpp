// SPDX-License-Identifier: Apache-2.0

#include "r2m/hpo/loop.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include <fmt/core.h>

#include "r2m/hpo/surrogate.hpp"
#include "r2m/llm/agents.hpp"
#include "r2m/util.hpp"

namespace r2m::hpo {

llm::HPOContext make_hpo_context(const registry::ModelCard& model, std::int64_t class_count,
                                 const std::string& dataset) {
    llm::HPOContext ctx;
    ctx.num_classes = class_count;
    ctx.dataset = dataset;
    ctx.model_name = model.name;
    ctx.params_m = model.params_m;
    ctx.flops_g = model.flops_g;
    ctx.accuracy = std::round(model.performance.value * 100.0 * 100.0) / 100.0;
    ctx.metric = std::string(metric_name_for(model.task));
    return ctx;
}

namespace {

trainer::TrainJob job_for(const HPOTarget& target, const HyperparameterSetting& s, std::uint64_t seed) {
    trainer::TrainJob job;
    job.request_id = target.request_id;
    job.task = target.task;
    job.model = target.model;
    job.class_count = target.class_count;
    job.image_count = target.image_count;
    job.setting = s;
    job.seed = seed;
    return job;
}

TrialRecord evaluate(trainer::TrainerExecutor& executor, const HPOTarget& target, const HyperparameterSetting& s,
                     int round, std::uint64_t seed) {
    TrialRecord t;
    t.round = round;
    t.setting = s;
    trainer::TrainResult r;
    try {
        r = executor.train_and_eval(job_for(target, s, seed));
    } catch (const std::exception& e) {
        r.status = trainer::TrainStatus::failed;
        r.note = e.what();
    }
    if (r.status == trainer::TrainStatus::ok) {
        t.metric_value = std::clamp(r.value, 0.0, 1.0);
    } else {
        t.metric_value = 0.0;
        t.note = r.note.empty() ? "training failed" : "training failed: " + r.note;
    }
    return t;
}

std::uint64_t round_seed(std::uint64_t seed, int round) {
    return splitmix64(hash_combine(seed, static_cast<std::uint64_t>(round)));
}

void run_random(const HPOOptions& o, trainer::TrainerExecutor& executor, const HPOTarget& target,
                const SearchSpace& space, HPOTrace& trace) {
    Rng rng(o.seed);
    std::vector<HyperparameterSetting> settings;
    for (int r = 0; r < o.budget; ++r) settings.push_back(sample_uniform(space, rng));

    if (o.workers <= 1) {
        for (int r = 0; r < o.budget; ++r) {
            trace.trials.push_back(evaluate(executor, target, settings[static_cast<std::size_t>(r)], r + 1, o.seed));
        }
        return;
    }
    std::vector<TrialRecord> results(settings.size());
    for (std::size_t start = 0; start < settings.size(); start += static_cast<std::size_t>(o.workers)) {
        const std::size_t end = std::min(settings.size(), start + static_cast<std::size_t>(o.workers));
        std::vector<std::future<TrialRecord>> batch;
        for (std::size_t i = start; i < end; ++i) {
            batch.push_back(std::async(std::launch::async, [&, i] {
                return evaluate(executor, target, settings[i], static_cast<int>(i) + 1, o.seed);
            }));
        }
        for (std::size_t i = start; i < end; ++i) results[i] = batch[i - start].get();
    }
    trace.trials = std::move(results);
}

void run_bayes(const HPOOptions& o, SurrogateKind kind, trainer::TrainerExecutor& executor, const HPOTarget& target,
               const SearchSpace& space, HPOTrace& trace) {
    Rng rng(o.seed);
    const int seeds = std::max(o.initial_points, 2);
    for (int r = 1; r <= o.budget; ++r) {
        HyperparameterSetting next;
        std::string fallback_note;
        if (r <= seeds) {
            next = sample_uniform(space, rng);
        } else {
            try {
                auto model = fit_surrogate(kind, trace.trials, space, round_seed(o.seed, r));
                next = propose_next(*model, space, trace.trials, round_seed(o.seed ^ 0xa5a5a5a5ULL, r), o.pool_size,
                                    o.xi);
            } catch (const FitError& e) {
                next = sample_uniform(space, rng);
                fallback_note = std::string("surrogate fit failed, sampled uniformly: ") + e.what();
            }
        }
        TrialRecord t = evaluate(executor, target, next, r, o.seed);
        if (!fallback_note.empty()) t.note = t.note.empty() ? fallback_note : fallback_note + "; " + t.note;
        trace.trials.push_back(std::move(t));
    }
}

void run_llm(const HPOOptions& o, trainer::TrainerExecutor& executor, const HPOTarget& target,
             const SearchSpace& space, HPOTrace& trace) {
    if (o.client == nullptr) throw std::invalid_argument("run_hpo: the llm strategy needs a chat client");
    std::vector<llm::HPOTurn> history;
    for (int r = 1; r <= o.budget; ++r) {
        try {
            const auto proposal = llm::llm_propose_setting(*o.client, target.context, space, history);
            TrialRecord t = evaluate(executor, target, proposal.setting, r, o.seed);
            if (!proposal.warnings.empty()) {
                std::string joined;
                for (const auto& w : proposal.warnings) joined += (joined.empty() ? "" : "; ") + w;
                t.note = t.note.empty() ? joined : joined + "; " + t.note;
            }
            history.push_back({to_json(proposal.setting).dump(4), t.metric_value});
            trace.trials.push_back(std::move(t));
        } catch (const llm::ProposalError& e) {
            TrialRecord t;
            t.round = r;
            t.metric_value = 0.0;
            t.note = e.what();
            history.push_back({e.last_reply().empty() ? std::string("(empty reply)") : e.last_reply(), 0.0});
            trace.trials.push_back(std::move(t));
        }
    }
}

}  // namespace

HPOTrace run_hpo(const HPOOptions& options, trainer::TrainerExecutor& executor, const HPOTarget& target) {
    if (options.budget < 1) throw std::invalid_argument("run_hpo: budget must be at least 1");
    const SearchSpace space = search_space_for(target.task);
    HPOTrace trace;
    trace.request_id = target.request_id;
    trace.strategy = options.strategy;
    switch (options.strategy) {
        case Strategy::random: run_random(options, executor, target, space, trace); break;
        case Strategy::bayes_gp: run_bayes(options, SurrogateKind::gp, executor, target, space, trace); break;
        case Strategy::bayes_rf: run_bayes(options, SurrogateKind::rf, executor, target, space, trace); break;
        case Strategy::llm: run_llm(options, executor, target, space, trace); break;
    }
    update_best(trace);
    return trace;
}

}  // namespace r2m::hpo
