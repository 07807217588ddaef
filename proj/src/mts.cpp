#include "oscloc/mts.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace oscloc {

void MTSeries::validate() const {
    if (values.rows() < 1 || values.cols() < 1)
        throw InvalidInputError("series must have at least one row and one channel");
    if (!values.allFinite())
        throw InvalidInputError("series contains non-finite values");
    if (static_cast<Eigen::Index>(channel_names.size()) != values.cols())
        throw InvalidInputError("channel_names size does not match channel count");
    std::set<std::string> unique(channel_names.begin(), channel_names.end());
    if (static_cast<Eigen::Index>(unique.size()) != values.cols())
        throw InvalidInputError("channel names are not unique");
}

bool Dataset::has_class(const std::string& label) const {
    return std::find(class_set.begin(), class_set.end(), label) != class_set.end();
}

std::size_t Dataset::class_index(const std::string& label) const {
    const auto it = std::find(class_set.begin(), class_set.end(), label);
    if (it == class_set.end())
        throw InvalidInputError("label '" + label + "' is not in the dataset class set");
    return static_cast<std::size_t>(it - class_set.begin());
}

void Dataset::validate() const {
    if (normalization) {
        const auto& s = *normalization;
        if (s.mean.size() != s.stddev.size() || s.mean.size() != s.zero_variance.size())
            throw InvalidInputError("normalization stats fields have mismatched sizes");
        for (double sd : s.stddev)
            if (!(sd > 0.0)) throw InvalidInputError("normalization std must be > 0");
    }
    if (samples.empty()) return;
    const auto& first = samples.front().series;
    for (const auto& sample : samples) {
        sample.series.validate();
        if (sample.series.channels() != first.channels())
            throw InvalidInputError("samples disagree on channel count");
        if (sample.series.channel_names != first.channel_names)
            throw InvalidInputError("samples disagree on channel names");
        if (!has_class(sample.label))
            throw InvalidInputError("sample label '" + sample.label + "' missing from class set");
    }
    if (normalization &&
        static_cast<Eigen::Index>(normalization->size()) != first.channels())
        throw InvalidInputError("normalization stats do not match channel count");
}

MetricMatrix::MetricMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1)
        throw InvalidInputError("metric matrix must be square and non-empty");
    if (!m_.allFinite())
        throw InvalidInputError("metric matrix contains non-finite values");
    const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
    if (asym > kMetricSymmetryTol) {
        std::ostringstream msg;
        msg << "metric matrix is not symmetric (max|M - M^T| = " << asym << ")";
        throw InvalidInputError(msg.str());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m_, Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig < -kMetricPsdTol) {
        std::ostringstream msg;
        msg << "metric matrix is not PSD (min eigenvalue = " << min_eig << ")";
        throw InvalidInputError(msg.str());
    }
}

MetricMatrix MetricMatrix::identity(Eigen::Index p) {
    return MetricMatrix(Eigen::MatrixXd::Identity(p, p));
}

double mahalanobis_dist(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                        const MetricMatrix& metric) {
    if (x.size() != y.size() || x.size() != metric.dim())
        throw InvalidInputError("mahalanobis_dist: dimension mismatch");
    const Eigen::VectorXd d = x - y;
    const double v = d.dot(metric.m() * d);
    return v < 0.0 ? 0.0 : v;
}

double sync_dist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                 const Eigen::MatrixXd& metric) {
    const Eigen::MatrixXd diff = a - b;
    const double v = (diff * metric).cwiseProduct(diff).sum();
    return v < 0.0 ? 0.0 : v;
}

double sync_series_dist(const MTSeries& a, const MTSeries& b, const MetricMatrix& metric) {
    if (a.channels() != b.channels() || a.channels() != metric.dim())
        throw InvalidInputError("sync_series_dist: channel count mismatch");
    if (a.rows() != b.rows())
        throw LengthMismatchError("sync_series_dist: series lengths differ; use DTW");
    return sync_dist(a.values, b.values, metric.m());
}

ChannelStats compute_channel_stats(const Dataset& dataset) {
    if (dataset.samples.empty())
        throw InvalidInputError("cannot compute channel stats of an empty dataset");
    const Eigen::Index p = dataset.channels();

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(p);
    double n = 0.0;
    for (const auto& sample : dataset.samples) {
        sum += sample.series.values.colwise().sum().transpose();
        sumsq += sample.series.values.cwiseAbs2().colwise().sum().transpose();
        n += static_cast<double>(sample.series.rows());
    }

    ChannelStats stats;
    stats.mean.resize(p);
    stats.stddev.resize(p);
    stats.zero_variance.resize(p);
    for (Eigen::Index c = 0; c < p; ++c) {
        const double mean = sum[c] / n;
        const double var = std::max(sumsq[c] / n - mean * mean, 0.0);
        const double sd = std::sqrt(var);
        stats.mean[c] = mean;
        stats.zero_variance[c] = sd == 0.0;
        stats.stddev[c] = sd == 0.0 ? 1.0 : sd;
    }
    return stats;
}

MTSeries apply_normalization(const MTSeries& series, const ChannelStats& stats) {
    if (static_cast<Eigen::Index>(stats.size()) != series.channels())
        throw InvalidInputError("normalization stats do not match series channel count");
    MTSeries out = series;
    for (Eigen::Index c = 0; c < series.channels(); ++c)
        out.values.col(c) = (series.values.col(c).array() - stats.mean[c]) / stats.stddev[c];
    return out;
}

Dataset znormalize(const Dataset& dataset) {
    const ChannelStats stats = compute_channel_stats(dataset);
    Dataset out = dataset;
    for (auto& sample : out.samples)
        sample.series = apply_normalization(sample.series, stats);
    out.normalization = stats;
    return out;
}

} // namespace oscloc
