#include "oscloc/metric_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "oscloc/parallel.hpp"

namespace oscloc {

namespace {

constexpr double kEpsRegularize = 1e-10;

// Symmetric inverse through an eigendecomposition, epsilon-regularizing a
// metric that is PSD but not strictly PD.
Eigen::MatrixXd symmetric_inverse(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.eigenvalues().minCoeff() < kEpsRegularize) {
        Eigen::MatrixXd reg = m + kEpsRegularize * Eigen::MatrixXd::Identity(m.rows(), m.cols());
        eig.compute(reg);
        if (eig.eigenvalues().minCoeff() <= 0.0)
            throw NumericalError("metric is not invertible after regularization");
    }
    return eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
           eig.eigenvectors().transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
        .eigenvalues()
        .minCoeff();
}

} // namespace

void LearnConfig::validate() const {
    if (!(margin_rho > 0.0)) throw InvalidInputError("margin_rho must be > 0");
    if (!(lambda_scale > 0.0) || lambda_scale > 1.0)
        throw InvalidInputError("lambda_scale must be in (0, 1]");
    if (!(lambda_cap > 0.0)) throw InvalidInputError("lambda_cap must be > 0");
    if (max_outer < 1) throw InvalidInputError("max_outer must be >= 1");
    if (max_inner < 0) throw InvalidInputError("max_inner must be >= 0 (0 = all anchors)");
    if (loss_threshold && !(*loss_threshold >= 0.0))
        throw InvalidInputError("loss_threshold must be >= 0");
    if (row_stride < 1) throw InvalidInputError("row_stride must be >= 1");
}

double triplet_loss(const Triplet& triplet, const Dataset& dataset,
                    const MetricMatrix& metric, double rho) {
    const std::size_t n = dataset.samples.size();
    if (triplet.anchor >= n || triplet.positive >= n || triplet.negative >= n)
        throw InvalidInputError("triplet index out of range");
    const auto& x = dataset.samples[triplet.anchor].series;
    const auto& y = dataset.samples[triplet.positive].series;
    const auto& z = dataset.samples[triplet.negative].series;
    return rho + sync_series_dist(x, y, metric) - sync_series_dist(x, z, metric);
}

Eigen::MatrixXd row_differences(const MTSeries& x, const MTSeries& y, int stride) {
    if (stride < 1) throw InvalidInputError("row stride must be >= 1");
    if (x.rows() != y.rows() || x.channels() != y.channels())
        throw InvalidInputError("row_differences: series shapes differ");
    const Eigen::Index h = x.rows();
    const Eigen::Index kept = (h + stride - 1) / stride;
    Eigen::MatrixXd diffs(x.channels(), kept);
    for (Eigen::Index j = 0, c = 0; j < h; j += stride, ++c)
        diffs.col(c) = (x.values.row(j) - y.values.row(j)).transpose();
    return diffs;
}

double max_feasible_lambda(const MetricMatrix& metric, const Eigen::MatrixXd& p_diffs,
                           const Eigen::MatrixXd& q_diffs) {
    const Eigen::Index p = metric.dim();
    if (p_diffs.rows() != p || q_diffs.rows() != p)
        throw InvalidInputError("max_feasible_lambda: difference matrices must have p rows");

    const Eigen::MatrixXd minv = symmetric_inverse(metric.m());
    Eigen::MatrixXd delta = p_diffs * p_diffs.transpose() - q_diffs * q_diffs.transpose();
    delta = 0.5 * (delta + delta.transpose());

    const auto mineig_at = [&](double lambda) { return min_eigenvalue(minv + lambda * delta); };

    // Grow the bracket until the pencil loses PSD or the cap says it never will.
    double lo = 0.0;
    double hi = 1.0;
    for (;;) {
        if (hi > kLambdaSearchCap) hi = kLambdaSearchCap;
        if (mineig_at(hi) < 0.0) break;
        lo = hi;
        if (hi == kLambdaSearchCap) return kLambdaSearchCap;
        hi *= 2.0;
    }

    // Bisect: the minimum eigenvalue is concave in lambda, so the feasible set
    // is the interval [0, lambda_bar]. Tighten until the Lipschitz bound
    // |mineig(lo)| <= ||delta|| * (hi - lo) puts mineig(lo) within 1e-6 of 0.
    const double delta_norm = std::max(delta.norm(), 1e-300);
    for (int it = 0; it < 300 && (hi - lo) * delta_norm > 5e-7; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mineig_at(mid) >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

MetricMatrix update_metric(const MetricMatrix& metric, const Eigen::MatrixXd& p_diffs,
                           const Eigen::MatrixXd& q_diffs, double lambda) {
    const Eigen::Index p = metric.dim();
    if (p_diffs.rows() != p || q_diffs.rows() != p)
        throw InvalidInputError("update_metric: difference matrices must have p rows");
    if (!(lambda >= 0.0)) throw InvalidInputError("update_metric: lambda must be >= 0");
    if (lambda == 0.0) return metric;

    const Eigen::MatrixXd& m = metric.m();

    // Stage 1: gamma = M - lambda M P (I + lambda P^T M P)^{-1} P^T M.
    // The inner factor is I plus a PSD term, hence always PD.
    const Eigen::Index hp = p_diffs.cols();
    const Eigen::MatrixXd mp = m * p_diffs;
    const Eigen::MatrixXd s1 = Eigen::MatrixXd::Identity(hp, hp) +
                               lambda * p_diffs.transpose() * mp;
    Eigen::LLT<Eigen::MatrixXd> llt1(s1);
    if (llt1.info() != Eigen::Success)
        throw SingularFactorError("update_metric: first Woodbury factor not PD");
    const Eigen::MatrixXd gamma = m - lambda * mp * llt1.solve(mp.transpose());

    // Stage 2: M+ = gamma + lambda gamma Q (I - lambda Q^T gamma Q)^{-1} Q^T gamma.
    // The inner factor stays PD only for lambda inside the feasible bound, so
    // the solve is residual-checked.
    const Eigen::Index hq = q_diffs.cols();
    const Eigen::MatrixXd gq = gamma * q_diffs;
    const Eigen::MatrixXd s2 = Eigen::MatrixXd::Identity(hq, hq) -
                               lambda * q_diffs.transpose() * gq;
    Eigen::LDLT<Eigen::MatrixXd> ldlt2(s2);
    if (ldlt2.info() != Eigen::Success)
        throw SingularFactorError("update_metric: second Woodbury factor failed to factorize");
    const Eigen::MatrixXd rhs = gq.transpose();
    const Eigen::MatrixXd sol = ldlt2.solve(rhs);
    const double residual = (s2 * sol - rhs).norm() / std::max(1.0, rhs.norm());
    if (!sol.allFinite() || residual > 1e-6)
        throw SingularFactorError("update_metric: second Woodbury factor numerically singular");
    Eigen::MatrixXd updated = gamma + lambda * gq * sol;

    updated = 0.5 * (updated + updated.transpose());
    try {
        return MetricMatrix(std::move(updated));
    } catch (const InvalidInputError& e) {
        throw NumericalError(std::string("update_metric: result rejected: ") + e.what());
    }
}

double logdet_divergence(const MetricMatrix& a, const MetricMatrix& b) {
    if (a.dim() != b.dim()) throw InvalidInputError("logdet_divergence: dimension mismatch");
    const Eigen::Index n = a.dim();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);

    const auto regularized = [&](const Eigen::MatrixXd& m) {
        return min_eigenvalue(m) < kEpsRegularize ? Eigen::MatrixXd(m + kEpsRegularize * eye)
                                                  : m;
    };
    const Eigen::MatrixXd ra = regularized(a.m());
    const Eigen::MatrixXd rb = regularized(b.m());

    const Eigen::LLT<Eigen::MatrixXd> llt_a(ra);
    const Eigen::LLT<Eigen::MatrixXd> llt_b(rb);
    if (llt_a.info() != Eigen::Success)
        throw NumericalError("logdet_divergence: first argument not PD after regularization");
    if (llt_b.info() != Eigen::Success)
        throw NumericalError("logdet_divergence: second argument not PD after regularization");

    const double trace_term = llt_b.solve(ra).trace();
    const double logdet_a =
        2.0 * llt_a.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double logdet_b =
        2.0 * llt_b.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return trace_term - (logdet_a - logdet_b) - static_cast<double>(n);
}

std::vector<Triplet> select_triplets(const Dataset& dataset, const MetricMatrix& metric,
                                     Rng& rng) {
    const std::size_t n = dataset.samples.size();
    if (n == 0) throw InvalidInputError("select_triplets: empty dataset");
    const Eigen::Index h = dataset.samples.front().series.rows();
    for (const auto& s : dataset.samples)
        if (s.series.rows() != h)
            throw LengthMismatchError("select_triplets: training series lengths differ");

    // Map M = L L^T so pairwise series distances become squared Frobenius
    // distances between embedded series; one embedding per sample instead of
    // one quadratic form per pair.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(metric.m());
    const Eigen::MatrixXd embed =
        eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

    std::vector<Eigen::MatrixXd> phi(n);
    parallel_for(n, [&](std::size_t i) { phi[i] = dataset.samples[i].series.values * embed; });

    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = (phi[i] - phi[j]).squaredNorm();
            dist(i, j) = d;
            dist(j, i) = d;
        }
    });

    std::vector<std::size_t> class_of(n);
    std::vector<std::size_t> class_count(dataset.class_set.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        class_of[i] = dataset.class_index(dataset.samples[i].label);
        ++class_count[class_of[i]];
    }

    std::vector<std::size_t> anchors;
    for (std::size_t i = 0; i < n; ++i)
        if (class_count[class_of[i]] >= 2 && class_count[class_of[i]] < n)
            anchors.push_back(i);
    rng.shuffle(anchors);

    std::vector<Triplet> triplets;
    triplets.reserve(anchors.size());
    for (std::size_t a : anchors) {
        std::size_t best_pos = n, best_neg = n;
        double pos_d = std::numeric_limits<double>::infinity();
        double neg_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == a) continue;
            if (class_of[j] == class_of[a]) {
                if (dist(a, j) < pos_d) {
                    pos_d = dist(a, j);
                    best_pos = j;
                }
            } else if (dist(a, j) < neg_d) {
                neg_d = dist(a, j);
                best_neg = j;
            }
        }
        if (best_pos < n && best_neg < n) triplets.push_back({a, best_pos, best_neg});
    }
    return triplets;
}

TrainedMetric train(const Dataset& dataset, const LearnConfig& config, std::ostream* log) {
    config.validate();
    dataset.validate();
    if (dataset.samples.empty()) throw InvalidInputError("train: empty dataset");

    const Eigen::Index p = dataset.channels();
    TrainedMetric out{MetricMatrix::identity(p), {}, 0, false, 0, 0, 0};
    Rng rng(config.rng_seed);
    std::optional<double> threshold = config.loss_threshold;

    for (int outer = 1; outer <= config.max_outer; ++outer) {
        out.iterations_run = outer;
        const std::vector<Triplet> triplets = select_triplets(dataset, out.metric, rng);
        if (triplets.empty() && log)
            (*log) << "train: no usable triplets (need >= 2 classes and a class with >= 2 samples)\n";

        std::size_t limit = triplets.size();
        if (config.max_inner > 0)
            limit = std::min(limit, static_cast<std::size_t>(config.max_inner));

        double total_loss = 0.0;
        std::size_t violated = 0, applied = 0, failed = 0;
        for (std::size_t j = 0; j < limit; ++j) {
            const Triplet& t = triplets[j];
            const double loss = triplet_loss(t, dataset, out.metric, config.margin_rho);
            if (loss <= 0.0) continue;
            ++violated;
            total_loss += loss;

            const Eigen::MatrixXd pd = row_differences(dataset.samples[t.anchor].series,
                                                       dataset.samples[t.positive].series,
                                                       config.row_stride);
            const Eigen::MatrixXd qd = row_differences(dataset.samples[t.anchor].series,
                                                       dataset.samples[t.negative].series,
                                                       config.row_stride);
            try {
                const double bound = max_feasible_lambda(out.metric, pd, qd);
                const double lambda = std::min(config.lambda_scale * bound, config.lambda_cap);
                MetricMatrix updated = update_metric(out.metric, pd, qd, lambda);
                const double after = triplet_loss(t, dataset, updated, config.margin_rho);
                if (after > loss + 1e-9) {
                    ++out.loss_increase_events;
                    if (log)
                        (*log) << "train: loss increased on triplet (" << t.anchor << ","
                               << t.positive << "," << t.negative << "): " << loss << " -> "
                               << after << " (lambda too large)\n";
                }
                out.metric = std::move(updated);
                ++applied;
            } catch (const SingularFactorError& e) {
                ++failed;
                if (log)
                    (*log) << "train: skipped triplet (" << t.anchor << "," << t.positive << ","
                           << t.negative << "): " << e.what() << "\n";
            }
        }
        out.loss_trace.push_back(total_loss);
        out.updates_applied += applied;
        out.updates_skipped += failed;

        if (violated > 0 && applied == 0 && failed > 0) {
            std::ostringstream msg;
            msg << "train: all " << failed << " updates failed numerically in outer iteration "
                << outer;
            throw NumericalError(msg.str());
        }
        if (!threshold) threshold = 1e-3 * total_loss;
        if (total_loss < *threshold || total_loss == 0.0) {
            out.converged = true;
            break;
        }
    }
    return out;
}

} // namespace oscloc
