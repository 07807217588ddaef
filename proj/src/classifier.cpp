#include "oscloc/classifier.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "oscloc/parallel.hpp"

namespace oscloc {

Prediction knn_classify(const MTSeries& test, const Dataset& training,
                        const MetricMatrix& metric, int k, const DTWOptions& options) {
    if (training.samples.empty()) throw InvalidInputError("knn_classify: empty training set");
    const std::size_t n = training.samples.size();
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw InvalidInputError("knn_classify: k must be in [1, training size]");
    if (test.channels() != training.channels())
        throw InvalidInputError("knn_classify: channel count mismatch");

    std::vector<double> distances(n);
    parallel_for(n, [&](std::size_t i) {
        distances[i] = dtw_cost(test.values, training.samples[i].series.values, metric.m(),
                                options.band);
    });

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (distances[a] != distances[b]) return distances[a] < distances[b];
        return a < b;  // distance ties: lower training index
    });

    Prediction pred;
    pred.neighbor_ids.assign(order.begin(), order.begin() + k);
    pred.neighbor_distances.reserve(k);
    for (std::size_t id : pred.neighbor_ids) pred.neighbor_distances.push_back(distances[id]);

    // Majority vote; ties go to the class with the closest single neighbor,
    // then to class-set order.
    std::map<std::string, int> votes;
    std::map<std::string, double> closest;
    for (std::size_t id : pred.neighbor_ids) {
        const std::string& label = training.samples[id].label;
        ++votes[label];
        const auto it = closest.find(label);
        if (it == closest.end() || distances[id] < it->second) closest[label] = distances[id];
    }
    int best_votes = 0;
    double best_closest = std::numeric_limits<double>::infinity();
    std::size_t best_order = std::numeric_limits<std::size_t>::max();
    for (const auto& [label, count] : votes) {
        const double near = closest[label];
        const std::size_t ord = training.class_index(label);
        const bool better = count > best_votes ||
                            (count == best_votes &&
                             (near < best_closest || (near == best_closest && ord < best_order)));
        if (better) {
            best_votes = count;
            best_closest = near;
            best_order = ord;
            pred.label = label;
        }
    }
    return pred;
}

EvaluationReport evaluate(const Dataset& test_set, const Dataset& training,
                          const MetricMatrix& metric, int k, const DTWOptions& options) {
    if (training.samples.empty()) throw InvalidInputError("evaluate: empty training set");
    if (!test_set.samples.empty() &&
        test_set.samples.front().series.channel_names !=
            training.samples.front().series.channel_names)
        throw InvalidInputError("evaluate: test/training channel names differ");

    EvaluationReport report;
    report.class_order = training.class_set;
    for (const auto& label : test_set.class_set)
        if (!training.has_class(label)) report.class_order.push_back(label);

    const std::size_t n_classes = report.class_order.size();
    const auto order_index = [&](const std::string& label) {
        return static_cast<Eigen::Index>(
            std::find(report.class_order.begin(), report.class_order.end(), label) -
            report.class_order.begin());
    };

    std::vector<std::string> predicted(test_set.samples.size());
    parallel_for(test_set.samples.size(), [&](std::size_t i) {
        predicted[i] = knn_classify(test_set.samples[i].series, training, metric, k, options).label;
    });

    report.confusion = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(n_classes),
                                             static_cast<Eigen::Index>(n_classes));
    std::vector<std::size_t> correct(n_classes, 0), wrong(n_classes, 0);
    for (std::size_t i = 0; i < test_set.samples.size(); ++i) {
        const auto truth = order_index(test_set.samples[i].label);
        const auto guess = order_index(predicted[i]);
        report.confusion(truth, guess) += 1;
        if (truth == guess)
            ++correct[truth];
        else
            ++wrong[truth];
    }

    report.total = test_set.samples.size();
    report.total_correct = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        ClassReport cr;
        cr.label = report.class_order[c];
        cr.correct = correct[c];
        cr.error = wrong[c];
        const std::size_t cnt = correct[c] + wrong[c];
        cr.accuracy_pct = cnt == 0 ? 0.0 : 100.0 * static_cast<double>(correct[c]) / cnt;
        cr.missing_in_training = !training.has_class(cr.label);
        report.per_class.push_back(cr);
        report.total_correct += correct[c];
    }
    report.overall_accuracy_pct =
        report.total == 0 ? 0.0
                          : 100.0 * static_cast<double>(report.total_correct) / report.total;
    return report;
}

} // namespace oscloc
