#include "oscloc/dtw.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace oscloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Local-distance terms for d(i,k) = u(i) + v(k) - 2*cross(i,k), the expansion
// of (a_i - b_k) M (a_i - b_k)^T. One GEMM replaces per-cell quadratic forms.
struct LocalDistance {
    Eigen::VectorXd u, v;
    Eigen::MatrixXd cross;

    LocalDistance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                  const Eigen::MatrixXd& metric) {
        const Eigen::MatrixXd am = a * metric;
        u = am.cwiseProduct(a).rowwise().sum();
        v = (b * metric).cwiseProduct(b).rowwise().sum();
        cross = am * b.transpose();
    }

    double operator()(Eigen::Index i, Eigen::Index k) const {
        const double d = u[i] + v[k] - 2.0 * cross(i, k);
        return d < 0.0 ? 0.0 : d;
    }
};

int effective_band(int band, Eigen::Index m, Eigen::Index n) {
    if (band < 0) return -1;
    const auto gap = static_cast<int>(m > n ? m - n : n - m);
    return std::max(band, gap);
}

bool in_band(Eigen::Index i, Eigen::Index k, int band) {
    if (band < 0) return true;
    const auto d = i > k ? i - k : k - i;
    return d <= static_cast<Eigen::Index>(band);
}

} // namespace

void WarpPath::validate(Eigen::Index m, Eigen::Index n) const {
    if (pairs.empty()) throw InvalidInputError("warp path is empty");
    if (pairs.front() != std::make_pair<Eigen::Index, Eigen::Index>(0, 0))
        throw InvalidInputError("warp path must start at (1,1)");
    if (pairs.back().first != m - 1 || pairs.back().second != n - 1)
        throw InvalidInputError("warp path must end at (m,n)");
    for (std::size_t j = 1; j < pairs.size(); ++j) {
        const auto di = pairs[j].first - pairs[j - 1].first;
        const auto dk = pairs[j].second - pairs[j - 1].second;
        if (di < 0 || di > 1 || dk < 0 || dk > 1 || (di == 0 && dk == 0))
            throw InvalidInputError("warp path violates continuity/monotonicity");
    }
    const auto s = static_cast<Eigen::Index>(pairs.size());
    if (s < std::max(m, n) || s > m + n)
        throw InvalidInputError("warp path length outside [max(m,n), m+n]");
}

DTWResult dtw_distance(const MTSeries& a, const MTSeries& b, const MetricMatrix& metric,
                       const DTWOptions& options) {
    if (a.channels() != b.channels() || a.channels() != metric.dim())
        throw InvalidInputError("dtw_distance: channel count mismatch");
    const Eigen::Index m = a.rows();
    const Eigen::Index n = b.rows();
    const int band = effective_band(options.band, m, n);

    const LocalDistance local(a.values, b.values, metric.m());
    Eigen::MatrixXd table(m, n);
    table.setConstant(kInf);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (!in_band(i, k, band)) continue;
            double best;
            if (i == 0 && k == 0) {
                best = 0.0;
            } else {
                best = kInf;
                if (i > 0 && k > 0) best = std::min(best, table(i - 1, k - 1));
                if (i > 0) best = std::min(best, table(i - 1, k));
                if (k > 0) best = std::min(best, table(i, k - 1));
            }
            table(i, k) = local(i, k) + best;
        }
    }

    DTWResult result;
    result.distance = table(m - 1, n - 1);

    // Backtrack: among exact minimizers prefer diagonal, then the smaller of
    // the remaining predecessors, then vertical.
    Eigen::Index i = m - 1, k = n - 1;
    result.path.pairs.emplace_back(i, k);
    while (i > 0 || k > 0) {
        const double diag = (i > 0 && k > 0) ? table(i - 1, k - 1) : kInf;
        const double vert = i > 0 ? table(i - 1, k) : kInf;
        const double horz = k > 0 ? table(i, k - 1) : kInf;
        const double best = std::min({diag, vert, horz});
        if (diag == best) {
            --i;
            --k;
        } else if (vert <= horz) {
            --i;
        } else {
            --k;
        }
        result.path.pairs.emplace_back(i, k);
    }
    std::reverse(result.path.pairs.begin(), result.path.pairs.end());

#ifndef NDEBUG
    result.path.validate(m, n);
    double path_sum = 0.0;
    for (const auto& [pi, pk] : result.path.pairs) path_sum += local(pi, pk);
    assert(std::abs(path_sum - result.distance) <= 1e-10 * std::max(1.0, result.distance));
#endif
    return result;
}

double dtw_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                const Eigen::MatrixXd& metric, int band) {
    const Eigen::Index m = a.rows();
    const Eigen::Index n = b.rows();
    const int w = effective_band(band, m, n);
    const LocalDistance local(a, b, metric);

    Eigen::VectorXd prev = Eigen::VectorXd::Constant(n, kInf);
    Eigen::VectorXd cur(n);
    for (Eigen::Index i = 0; i < m; ++i) {
        cur.setConstant(kInf);
        for (Eigen::Index k = 0; k < n; ++k) {
            if (!in_band(i, k, w)) continue;
            double best;
            if (i == 0 && k == 0) {
                best = 0.0;
            } else {
                best = std::min({i > 0 && k > 0 ? prev[k - 1] : kInf,
                                 i > 0 ? prev[k] : kInf,
                                 k > 0 ? cur[k - 1] : kInf});
            }
            cur[k] = local(i, k) + best;
        }
        std::swap(prev, cur);
    }
    return prev[n - 1];
}

std::vector<WarpPath> enumerate_paths_oracle(Eigen::Index m, Eigen::Index n) {
    if (m < 1 || n < 1) throw InvalidInputError("enumerate_paths_oracle: lengths must be >= 1");
    if (m > 6 || n > 6)
        throw InvalidInputError("enumerate_paths_oracle: refused, lengths must be <= 6");

    std::vector<WarpPath> all;
    WarpPath current;
    current.pairs.emplace_back(0, 0);

    // Depth-first over the three allowed steps.
    struct Walker {
        Eigen::Index m, n;
        std::vector<WarpPath>& all;
        WarpPath& current;

        void walk(Eigen::Index i, Eigen::Index k) {
            if (i == m - 1 && k == n - 1) {
                all.push_back(current);
                return;
            }
            const Eigen::Index steps[3][2] = {{1, 1}, {1, 0}, {0, 1}};
            for (const auto& s : steps) {
                const Eigen::Index ni = i + s[0], nk = k + s[1];
                if (ni >= m || nk >= n) continue;
                current.pairs.emplace_back(ni, nk);
                walk(ni, nk);
                current.pairs.pop_back();
            }
        }
    };
    Walker{m, n, all, current}.walk(0, 0);
    return all;
}

double warp_path_cost(const WarpPath& path, const MTSeries& a, const MTSeries& b,
                      const MetricMatrix& metric) {
    double cost = 0.0;
    for (const auto& [i, k] : path.pairs)
        cost += mahalanobis_dist(a.values.row(i).transpose(), b.values.row(k).transpose(), metric);
    return cost;
}

} // namespace oscloc
