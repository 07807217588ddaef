#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "oscloc/mts.hpp"
#include "oscloc/rng.hpp"

namespace oscloc {

// Bisection cap for the feasibility bound: when P P^T - Q Q^T is PSD every
// step size keeps the metric PSD and this value is returned.
inline constexpr double kLambdaSearchCap = 1e6;

// One relative-similarity constraint: anchor must end up closer to positive
// (same class) than to negative (different class) by the margin.
struct Triplet {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
};

struct LearnConfig {
    double margin_rho = 1.0;       // desired margin, > 0
    double lambda_scale = 0.5;     // fraction of the feasible bound used per update, in (0,1]
    double lambda_cap = 10.0;      // hard cap so one triplet cannot dominate
    int max_outer = 20;            // outer iterations
    int max_inner = 0;             // triplets per outer pass; 0 = all anchors
    std::optional<double> loss_threshold;  // unset = 1e-3 x first outer loss
    std::uint64_t rng_seed = 0;
    int row_stride = 1;            // subsample series rows when building P/Q

    void validate() const;
};

struct TrainedMetric {
    MetricMatrix metric;
    std::vector<double> loss_trace;  // total loss per outer iteration
    int iterations_run = 0;
    bool converged = false;
    std::size_t updates_applied = 0;
    std::size_t updates_skipped = 0;       // singular inner factor, logged
    std::size_t loss_increase_events = 0;  // post-update loss grew, logged
};

// Margin loss rho + D_M(X,Y) - D_M(X,Z); the triplet is violated iff > 0.
double triplet_loss(const Triplet& triplet, const Dataset& dataset,
                    const MetricMatrix& metric, double rho);

// Difference columns for the update: p x ceil(h/stride) matrix whose columns
// are (x_j - y_j) for the retained rows j.
Eigen::MatrixXd row_differences(const MTSeries& x, const MTSeries& y, int stride = 1);

// Largest lambda >= 0 keeping M^{-1} + lambda (P P^T - Q Q^T) PSD, found by
// eigenvalue bisection on the pencil; capped at kLambdaSearchCap when the
// perturbation is itself PSD. The metric is epsilon-regularized if needed.
double max_feasible_lambda(const MetricMatrix& metric, const Eigen::MatrixXd& p_diffs,
                           const Eigen::MatrixXd& q_diffs);

// Metric update (M^{-1} + lambda (P P^T - Q Q^T))^{-1}, evaluated through the
// two-stage Woodbury form so only h x h inner factors are inverted. The
// result is symmetrized and PSD-validated. A singular inner factor raises
// SingularFactorError (skippable); PSD loss raises NumericalError.
MetricMatrix update_metric(const MetricMatrix& metric, const Eigen::MatrixXd& p_diffs,
                           const Eigen::MatrixXd& q_diffs, double lambda);

// LogDet divergence tr(A B^{-1}) - log det(A B^{-1}) - n between positive
// definite matrices (epsilon-regularized when needed).
double logdet_divergence(const MetricMatrix& a, const MetricMatrix& b);

// For each anchor (in seeded-shuffled order) pairs the nearest same-class
// sample as positive and the nearest other-class sample as negative under
// the current metric. Anchors whose class has a single sample are skipped.
std::vector<Triplet> select_triplets(const Dataset& dataset, const MetricMatrix& metric,
                                     Rng& rng);

// Iterative triplet training: rebuild triplets each outer pass, update on
// every violated one with lambda = lambda_scale x feasible bound (capped),
// stop early once the total violated loss drops below the threshold.
TrainedMetric train(const Dataset& dataset, const LearnConfig& config,
                    std::ostream* log = nullptr);

} // namespace oscloc
