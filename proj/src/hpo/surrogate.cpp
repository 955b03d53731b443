// SPDX-License-Identifier: Apache-2.0

#include "r2m/hpo/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

namespace r2m::hpo {

GPModel GPModel::fit(std::span<const EncodedPoint> inputs, std::span<const double> targets,
                     const GPParams& params) {
    const auto n = static_cast<Eigen::Index>(inputs.size());
    if (inputs.size() != targets.size()) throw FitError("GP fit: input/target size mismatch");
    if (n < 2) throw FitError("GP fit: need at least two observations");

    GPModel gp;
    gp.params_ = params;
    gp.inputs_.resize(n, static_cast<Eigen::Index>(kEncodedDims));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < kEncodedDims; ++d) gp.inputs_(i, static_cast<Eigen::Index>(d)) = inputs[i][d];
    }

    const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double y : targets) ss += (y - mean) * (y - mean);
    gp.mean_ = mean;
    gp.signal_variance_ = std::max(ss / static_cast<double>(n - 1), params.variance_floor);
    gp.scale_ = std::sqrt(gp.signal_variance_);

    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = (targets[i] - mean) / gp.scale_;

    const double inv_two_l2 = 1.0 / (2.0 * params.length_scale * params.length_scale);
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double d2 = (gp.inputs_.row(i) - gp.inputs_.row(j)).squaredNorm();
            k(i, j) = k(j, i) = std::exp(-d2 * inv_two_l2);
        }
    }

    double jitter = params.noise_variance;
    while (true) {
        Eigen::MatrixXd a = k;
        a.diagonal().array() += jitter;
        gp.factor_.compute(a);
        if (gp.factor_.info() == Eigen::Success) break;
        if (jitter >= params.max_jitter) {
            throw FitError(fmt::format("GP fit: kernel matrix not positive definite with jitter {}", jitter));
        }
        jitter = std::min(jitter * 10.0, params.max_jitter);
    }
    gp.jitter_ = jitter;
    gp.alpha_ = gp.factor_.solve(z);
    return gp;
}

Prediction GPModel::predict(const EncodedPoint& x) const {
    const Eigen::Index n = inputs_.rows();
    const double inv_two_l2 = 1.0 / (2.0 * params_.length_scale * params_.length_scale);
    Eigen::Map<const Eigen::Matrix<double, 1, static_cast<int>(kEncodedDims)>> xr(x.data());
    Eigen::VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks(i) = std::exp(-(inputs_.row(i) - xr).squaredNorm() * inv_two_l2);

    Prediction p;
    p.mean = mean_ + scale_ * ks.dot(alpha_);
    const Eigen::VectorXd v = factor_.matrixL().solve(ks);
    p.variance = signal_variance_ * std::max(1.0 - v.squaredNorm(), 0.0);
    return p;
}

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double sse = 0.0;
};

double sse_of(const std::vector<std::size_t>& idx, std::span<const double> y) {
    double mean = 0.0;
    for (auto i : idx) mean += y[i];
    mean /= static_cast<double>(idx.size());
    double s = 0.0;
    for (auto i : idx) s += (y[i] - mean) * (y[i] - mean);
    return s;
}

}  // namespace

RFModel RFModel::fit(std::span<const EncodedPoint> inputs, std::span<const double> targets,
                     const RFParams& params) {
    if (inputs.size() != targets.size()) throw FitError("RF fit: input/target size mismatch");
    if (inputs.size() < 2) throw FitError("RF fit: need at least two observations");
    if (params.trees < 2) throw FitError("RF fit: need at least two trees");

    RFModel rf;
    rf.params_ = params;
    Rng rng(params.seed);
    const std::size_t n = inputs.size();

    for (int t = 0; t < params.trees; ++t) {
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) s = rng.index(n);

        Tree tree;
        // Iterative build: (node index, sample indices, depth).
        struct Pending {
            int node;
            std::vector<std::size_t> idx;
            int depth;
        };
        tree.push_back({});
        std::vector<Pending> work;
        work.push_back({0, std::move(sample), 0});
        while (!work.empty()) {
            Pending p = std::move(work.back());
            work.pop_back();
            double mean = 0.0;
            for (auto i : p.idx) mean += targets[i];
            mean /= static_cast<double>(p.idx.size());
            tree[p.node].value = mean;

            if (p.depth >= params.max_depth || static_cast<int>(p.idx.size()) < params.min_samples_split) continue;
            const double parent_sse = sse_of(p.idx, targets);
            if (parent_sse <= 0.0) continue;

            SplitChoice best;
            best.sse = parent_sse;
            for (int f = 0; f < static_cast<int>(kEncodedDims); ++f) {
                std::vector<double> values;
                for (auto i : p.idx) values.push_back(inputs[i][f]);
                std::sort(values.begin(), values.end());
                values.erase(std::unique(values.begin(), values.end()), values.end());
                for (std::size_t v = 0; v + 1 < values.size(); ++v) {
                    const double thr = 0.5 * (values[v] + values[v + 1]);
                    double sl = 0, sr = 0, ql = 0, qr = 0;
                    double nl = 0, nr = 0;
                    for (auto i : p.idx) {
                        const double y = targets[i];
                        if (inputs[i][f] <= thr) {
                            sl += y; ql += y * y; nl += 1;
                        } else {
                            sr += y; qr += y * y; nr += 1;
                        }
                    }
                    const double sse = (ql - sl * sl / nl) + (qr - sr * sr / nr);
                    if (sse < best.sse - 1e-15) best = {f, thr, sse};
                }
            }
            if (best.feature < 0) continue;

            std::vector<std::size_t> left, right;
            for (auto i : p.idx) (inputs[i][best.feature] <= best.threshold ? left : right).push_back(i);
            const int li = static_cast<int>(tree.size());
            tree.push_back({});
            const int ri = static_cast<int>(tree.size());
            tree.push_back({});
            tree[p.node].feature = best.feature;
            tree[p.node].threshold = best.threshold;
            tree[p.node].left = li;
            tree[p.node].right = ri;
            work.push_back({ri, std::move(right), p.depth + 1});
            work.push_back({li, std::move(left), p.depth + 1});
        }
        rf.trees_.push_back(std::move(tree));
    }
    return rf;
}

double RFModel::eval(const Tree& tree, const EncodedPoint& x) {
    int node = 0;
    while (tree[node].feature >= 0) {
        node = x[tree[node].feature] <= tree[node].threshold ? tree[node].left : tree[node].right;
    }
    return tree[node].value;
}

Prediction RFModel::predict(const EncodedPoint& x) const {
    double sum = 0.0;
    double sq = 0.0;
    for (const auto& t : trees_) {
        const double v = eval(t, x);
        sum += v;
        sq += v * v;
    }
    const double n = static_cast<double>(trees_.size());
    Prediction p;
    p.mean = sum / n;
    p.variance = std::max(sq / n - p.mean * p.mean, params_.variance_floor);
    return p;
}

std::unique_ptr<Surrogate> fit_surrogate(SurrogateKind kind, std::span<const TrialRecord> history,
                                         const SearchSpace& space, std::uint64_t seed) {
    std::vector<EncodedPoint> xs;
    std::vector<double> ys;
    for (const auto& t : history) {
        if (!t.setting) continue;
        xs.push_back(encode(*t.setting, space));
        ys.push_back(t.metric_value);
    }
    if (xs.size() < 2) throw FitError("surrogate fit needs at least two evaluated settings");
    if (kind == SurrogateKind::gp) return std::make_unique<GPModel>(GPModel::fit(xs, ys));
    RFParams p;
    p.seed = seed;
    return std::make_unique<RFModel>(RFModel::fit(xs, ys, p));
}

}  // namespace r2m::hpo
