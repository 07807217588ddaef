#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oscloc/classifier.hpp"
#include "oscloc/mts.hpp"

namespace oscloc::io {

using KvPairs = std::vector<std::pair<std::string, std::string>>;

// Writes via a temp file in the same directory plus rename, so readers never
// observe a half-written file.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

// key = value lines, '#' comments, order preserved.
KvPairs read_kv_file(const std::filesystem::path& path);
void write_kv_file(const std::filesystem::path& path, const KvPairs& pairs);
std::map<std::string, std::string> kv_to_map(const KvPairs& pairs);

std::string format_full(double v);  // round-trip decimal formatting

// One series file: header row of channel names, then h rows of values (CSV).
void write_series_csv(const std::filesystem::path& path, const MTSeries& series);
MTSeries read_series_csv(const std::filesystem::path& path, double sample_rate,
                         double start_time);

struct DatasetWriteOptions {
    KvPairs manifest_extras;                         // config echo, seeds
    const std::vector<MTSeries>* full_traces = nullptr;  // per-sample full traces
};

// Dataset directory: `manifest` + `labels` + series/<id>.csv (+ full/<id>.csv).
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset,
                   const DatasetWriteOptions& options = {});

struct LoadedDataset {
    Dataset dataset;
    double sample_rate = 0.0;
    double start_time = 0.0;
    KvPairs manifest;
    std::vector<MTSeries> full_traces;  // empty unless requested and present
};

LoadedDataset read_dataset(const std::filesystem::path& dir, bool want_full_traces = false);

// Metric file: line 1 `p=<int>`, line 2 `normalization=<yes|no>`, p rows of p
// space-separated values, then (when normalization=yes) p `mean std` lines.
void write_metric_file(const std::filesystem::path& path, const MetricMatrix& metric,
                       const std::optional<ChannelStats>& stats);

struct LoadedMetric {
    MetricMatrix metric;
    std::optional<ChannelStats> stats;
};

LoadedMetric read_metric_file(const std::filesystem::path& path);

// Prediction records: `<id> <label> <neighbor>:<distance> ...`, one per input.
void write_predictions(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, Prediction>>& predictions);

// Aligned per-class table (correct / error / accuracy plus overall row).
std::string format_report_table(const EvaluationReport& report);
// Machine-readable record per class plus the overall record.
std::string format_report_records(const EvaluationReport& report);

} // namespace oscloc::io
