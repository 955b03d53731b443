// SPDX-License-Identifier: Apache-2.0
//
// Surrogate models for model-based HPO: a Gaussian process with a fixed
// squared-exponential kernel and a bootstrap random forest.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "r2m/common.hpp"
#include "r2m/hpo/space.hpp"
#include "r2m/hpo/trace.hpp"

namespace r2m::hpo {

class FitError : public Error {
public:
    using Error::Error;
};

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

class Surrogate {
public:
    virtual ~Surrogate() = default;
    virtual Prediction predict(const EncodedPoint& x) const = 0;
};

struct GPParams {
    double length_scale = 0.5;
    /// Observation noise, in units of the standardized targets.
    double noise_variance = 1e-6;
    double variance_floor = 1e-4;
    double max_jitter = 1e-3;
};

/// GP regression with constant mean (the target mean) and kernel
/// σ_f² exp(-|x - x'|² / 2ℓ²), where σ_f² is the sample variance of the
/// targets. Targets are standardized internally, so `noise_variance` is
/// relative to σ_f². If the Cholesky factorization fails the jitter is raised
/// tenfold up to `max_jitter`.
class GPModel final : public Surrogate {
public:
    static GPModel fit(std::span<const EncodedPoint> inputs, std::span<const double> targets,
                       const GPParams& params = {});

    Prediction predict(const EncodedPoint& x) const override;

    double signal_variance() const noexcept { return signal_variance_; }
    double jitter() const noexcept { return jitter_; }

private:
    GPParams params_;
    Eigen::MatrixXd inputs_;  // n x d
    Eigen::VectorXd alpha_;
    Eigen::LLT<Eigen::MatrixXd> factor_;
    double mean_ = 0.0;
    double scale_ = 1.0;
    double signal_variance_ = 1.0;
    double jitter_ = 0.0;
};

struct RFParams {
    int trees = 50;
    int max_depth = 8;
    int min_samples_split = 2;
    double variance_floor = 1e-6;
    std::uint64_t seed = 0;
};

/// Bagged regression trees. Predictive mean and variance are the moments of
/// the per-tree outputs, with the variance floored.
class RFModel final : public Surrogate {
public:
    static RFModel fit(std::span<const EncodedPoint> inputs, std::span<const double> targets,
                       const RFParams& params = {});

    Prediction predict(const EncodedPoint& x) const override;

    std::size_t tree_count() const noexcept { return trees_.size(); }

private:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };
    using Tree = std::vector<Node>;

    static double eval(const Tree& tree, const EncodedPoint& x);

    RFParams params_;
    std::vector<Tree> trees_;
};

enum class SurrogateKind { gp, rf };

/// Fits on the trials that carry a setting. Requires at least two of them.
std::unique_ptr<Surrogate> fit_surrogate(SurrogateKind kind, std::span<const TrialRecord> history,
                                         const SearchSpace& space, std::uint64_t seed = 0);

}  // namespace r2m::hpo
