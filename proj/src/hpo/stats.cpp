// SPDX-License-Identifier: Apache-2.0

#include "r2m/hpo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/core.h>

namespace r2m::hpo {

std::vector<MeanStd> best_of_k_stats(const std::vector<std::vector<double>>& populations, int repeats,
                                     std::uint64_t rng_seed, int max_k) {
    if (populations.empty() || repeats < 1 || max_k < 1) throw std::invalid_argument("best_of_k_stats: empty input");
    for (const auto& p : populations) {
        if (p.empty()) throw std::invalid_argument("best_of_k_stats: empty population");
    }

    const auto k_count = static_cast<std::size_t>(max_k);
    std::vector<double> sum(k_count, 0.0);
    std::vector<double> sum_sq(k_count, 0.0);
    std::vector<double> per_repeat(k_count);
    Rng rng(rng_seed);
    for (int r = 0; r < repeats; ++r) {
        std::fill(per_repeat.begin(), per_repeat.end(), 0.0);
        for (const auto& pop : populations) {
            double running = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < k_count; ++k) {
                running = std::max(running, pop[rng.index(pop.size())]);
                per_repeat[k] += running;
            }
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            const double v = per_repeat[k] / static_cast<double>(populations.size());
            sum[k] += v;
            sum_sq[k] += v * v;
        }
    }

    std::vector<MeanStd> out(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        const double mean = sum[k] / repeats;
        const double var = std::max(sum_sq[k] / repeats - mean * mean, 0.0);
        out[k] = {mean, std::sqrt(var)};
        if (k > 0 && out[k].mean < out[k - 1].mean - 1e-12) {
            throw std::logic_error(fmt::format("best-of-k mean decreased at k={}", k + 1));
        }
    }
    return out;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
    if (xs.size() < 2) throw std::invalid_argument("pearson: need at least two points");
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateError("pearson: constant input vector");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Quartiles quartiles(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("quartiles: empty input");
    std::sort(values.begin(), values.end());
    auto at = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] + frac * (values[hi] - values[lo]);
    };
    return {values.front(), at(0.25), at(0.5), at(0.75), values.back(), values.size()};
}

CorrelationReport correlation_report(std::span<const Observation> data) {
    CorrelationReport report;
    std::vector<double> metric, lr, wd, iters, batch;
    std::map<std::string, std::vector<double>> opt_groups, sched_groups;
    for (const auto& o : data) {
        metric.push_back(o.metric);
        lr.push_back(std::log10(o.setting.learning_rate));
        wd.push_back(std::log10(o.setting.weight_decay));
        iters.push_back(static_cast<double>(o.setting.iters));
        batch.push_back(static_cast<double>(o.setting.batch_size));
        opt_groups[std::string(to_string(o.setting.optimizer))].push_back(o.metric);
        sched_groups[std::string(to_string(o.setting.schedule))].push_back(o.metric);
    }

    const std::pair<const char*, const std::vector<double>*> numeric[] = {
        {"learning rate", &lr}, {"weight decay", &wd}, {"iters", &iters}, {"batch size", &batch}};
    for (const auto& [name, xs] : numeric) {
        try {
            report.pearson[name] = pearson(*xs, metric);
        } catch (const std::exception& e) {
            report.warnings.push_back(fmt::format("{} correlation skipped: {}", name, e.what()));
        }
    }

    auto summarize = [&](const std::map<std::string, std::vector<double>>& groups, const char* what,
                         std::map<std::string, Quartiles>& out) {
        for (const auto& [name, values] : groups) {
            if (values.size() < 2) {
                report.warnings.push_back(fmt::format("{} '{}' skipped: {} sample(s)", what, name, values.size()));
                continue;
            }
            out[name] = quartiles(values);
        }
    };
    summarize(opt_groups, "optimizer", report.by_optimizer);
    summarize(sched_groups, "schedule", report.by_schedule);
    return report;
}

}  // namespace r2m::hpo
