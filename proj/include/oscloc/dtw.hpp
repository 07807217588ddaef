#pragma once

#include <utility>
#include <vector>

#include "oscloc/mts.hpp"

namespace oscloc {

// An alignment between two series: ordered index pairs, 0-based internally.
// A valid path starts at (0,0), ends at (m-1,n-1), and each step advances
// either index by 0 or 1 but not both by 0.
struct WarpPath {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;

    // Throws InvalidInputError if boundary, continuity, monotonicity, or the
    // length bound s in [max(m,n), m+n] is violated.
    void validate(Eigen::Index m, Eigen::Index n) const;
};

struct DTWResult {
    double distance = 0.0;
    WarpPath path;
};

struct DTWOptions {
    // Sakoe-Chiba band half-width in samples; negative disables (default).
    // When enabled the band is widened to at least |m-n| so a path exists.
    int band = -1;
};

// Dynamic time warping with the squared-Mahalanobis local distance. Fills the
// m x n cumulative table D(i,k) = d(i,k) + min(diag, up, left) and backtracks
// the optimal path. Backtracking ties prefer diagonal, then the smaller
// predecessor, then vertical.
DTWResult dtw_distance(const MTSeries& a, const MTSeries& b, const MetricMatrix& metric,
                       const DTWOptions& options = {});

// Distance-only fast path on raw matrices (no path recovery, rolling rows).
double dtw_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                const Eigen::MatrixXd& metric, int band = -1);

// Exhaustively generates every valid warp path between series of lengths m
// and n. Test oracle only: refuses m > 6 or n > 6.
std::vector<WarpPath> enumerate_paths_oracle(Eigen::Index m, Eigen::Index n);

// Cost of a given path: sum of local distances over its pairs.
double warp_path_cost(const WarpPath& path, const MTSeries& a, const MTSeries& b,
                      const MetricMatrix& metric);

} // namespace oscloc
