#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oscloc/errors.hpp"

namespace oscloc {

// Symmetry and PSD tolerances for metric matrices.
inline constexpr double kMetricSymmetryTol = 1e-10;
inline constexpr double kMetricPsdTol = 1e-9;
// Quadratic forms this far below zero are treated as floating-point dust.
inline constexpr double kDistanceClampTol = 1e-12;

// One multivariate time series: h sampled rows by p channels.
struct MTSeries {
    Eigen::MatrixXd values;                  // h x p, rows are time samples
    double sample_rate = 0.0;                // Hz
    std::vector<std::string> channel_names;  // p unique labels
    double start_time = 0.0;                 // s relative to oscillation onset

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index channels() const { return values.cols(); }

    // Throws InvalidInputError on h < 1, p < 1, non-finite entries, or a
    // channel-name list that is missing, mismatched, or not unique.
    void validate() const;
};

struct LabeledSample {
    MTSeries series;
    std::string label;
    std::map<std::string, std::string> scenario_meta;
};

// Per-channel normalization statistics, computed from training rows only.
struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;              // > 0; zero-variance channels get 1
    std::vector<bool> zero_variance;         // flagged channels

    std::size_t size() const { return mean.size(); }
};

struct Dataset {
    std::vector<LabeledSample> samples;
    std::vector<std::string> class_set;      // ordered class labels
    std::optional<ChannelStats> normalization;

    Eigen::Index channels() const {
        return samples.empty() ? 0 : samples.front().series.channels();
    }
    bool has_class(const std::string& label) const;
    // Index of a label in class_set; throws InvalidInputError if absent.
    std::size_t class_index(const std::string& label) const;
    // Checks uniform p/channel names across samples, labels within class_set,
    // and stats consistency.
    void validate() const;
};

// Symmetric PSD matrix defining the Mahalanobis distance. Construction
// validates both properties within tolerance.
class MetricMatrix {
public:
    explicit MetricMatrix(Eigen::MatrixXd m);

    static MetricMatrix identity(Eigen::Index p);

    const Eigen::MatrixXd& m() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }

private:
    Eigen::MatrixXd m_;
};

// Squared Mahalanobis distance (x-y)^T M (x-y), clamped to 0 when
// floating-point dust drives it slightly negative.
double mahalanobis_dist(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                        const MetricMatrix& metric);

// Distance between two synchronized equal-length series: the row-wise
// Mahalanobis sum. Unequal h raises LengthMismatchError (use DTW instead);
// unequal p raises InvalidInputError.
double sync_series_dist(const MTSeries& a, const MTSeries& b, const MetricMatrix& metric);

// Raw-matrix fast path used by hot loops; same definition as above.
double sync_dist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                 const Eigen::MatrixXd& metric);

// Per-channel mean/std over all rows of all samples (population std).
ChannelStats compute_channel_stats(const Dataset& dataset);

// Returns a copy of the dataset with every channel shifted/scaled to mean 0,
// std 1, and the statistics stored for later application to test samples.
// Zero-variance channels are scaled by 1 and flagged.
Dataset znormalize(const Dataset& dataset);

// Applies previously computed training statistics to a new series.
MTSeries apply_normalization(const MTSeries& series, const ChannelStats& stats);

} // namespace oscloc
