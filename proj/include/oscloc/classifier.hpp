#pragma once

#include <string>
#include <vector>

#include "oscloc/dtw.hpp"
#include "oscloc/mts.hpp"

namespace oscloc {

struct Prediction {
    std::string label;
    std::vector<std::size_t> neighbor_ids;      // k training indices, ascending distance
    std::vector<double> neighbor_distances;     // matching distances
};

struct ClassReport {
    std::string label;
    std::size_t correct = 0;
    std::size_t error = 0;
    double accuracy_pct = 0.0;
    bool missing_in_training = false;
};

struct EvaluationReport {
    std::vector<ClassReport> per_class;          // training class order, then extras
    double overall_accuracy_pct = 0.0;
    std::size_t total = 0;
    std::size_t total_correct = 0;
    std::vector<std::string> class_order;
    Eigen::MatrixXi confusion;                   // rows = true class, cols = predicted
};

// k-NN under the DTW-with-Mahalanobis distance against every training
// sample. Distance ties prefer the lower training index; vote ties prefer
// the tied class holding the closest single neighbor, then class order.
// The caller is responsible for normalizing `test` with the training stats.
Prediction knn_classify(const MTSeries& test, const Dataset& training,
                        const MetricMatrix& metric, int k, const DTWOptions& options = {});

// Classifies every test sample and aggregates per-class counts, overall
// accuracy, and the confusion matrix. Test classes absent from the training
// set are counted and flagged.
EvaluationReport evaluate(const Dataset& test_set, const Dataset& training,
                          const MetricMatrix& metric, int k, const DTWOptions& options = {});

} // namespace oscloc
