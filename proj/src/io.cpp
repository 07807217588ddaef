#include "oscloc/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace oscloc::io {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& tok, const std::string& context) {
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw InvalidInputError("bad number '" + tok + "' in " + context);
    }
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string sample_id(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%04zu", index);
    return buf;
}

std::string join(const std::vector<std::string>& items, char sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += sep;
        out += items[i];
    }
    return out;
}

} // namespace

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInputError("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw InvalidInputError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

KvPairs read_kv_file(const fs::path& path) {
    const std::string text = slurp(path);
    KvPairs pairs;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInputError("expected key = value at " + path.string() + ":" +
                                    std::to_string(line_no));
        pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return pairs;
}

void write_kv_file(const fs::path& path, const KvPairs& pairs) {
    std::ostringstream out;
    for (const auto& [key, value] : pairs) out << key << " = " << value << "\n";
    write_text_atomic(path, out.str());
}

std::map<std::string, std::string> kv_to_map(const KvPairs& pairs) {
    std::map<std::string, std::string> out;
    for (const auto& [key, value] : pairs) out[key] = value;
    return out;
}

void write_series_csv(const fs::path& path, const MTSeries& series) {
    std::ostringstream out;
    out << join(series.channel_names, ',') << "\n";
    for (Eigen::Index r = 0; r < series.rows(); ++r) {
        for (Eigen::Index c = 0; c < series.channels(); ++c) {
            if (c > 0) out << ',';
            out << format_full(series.values(r, c));
        }
        out << "\n";
    }
    write_text_atomic(path, out.str());
}

MTSeries read_series_csv(const fs::path& path, double sample_rate, double start_time) {
    const std::string text = slurp(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw InvalidInputError("series file '" + path.string() + "' is empty");

    MTSeries series;
    for (auto& name : split(trim(line), ',')) series.channel_names.push_back(trim(name));
    const auto p = static_cast<Eigen::Index>(series.channel_names.size());

    std::vector<double> data;
    Eigen::Index rows = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (static_cast<Eigen::Index>(cells.size()) != p)
            throw InvalidInputError("row with wrong column count at " + path.string() + ":" +
                                    std::to_string(line_no));
        for (const auto& cell : cells)
            data.push_back(parse_double(trim(cell), path.string() + ":" + std::to_string(line_no)));
        ++rows;
    }
    if (rows == 0) throw InvalidInputError("series file '" + path.string() + "' has no rows");

    series.values.resize(rows, p);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < p; ++c) series.values(r, c) = data[r * p + c];
    series.sample_rate = sample_rate;
    series.start_time = start_time;
    series.validate();
    return series;
}

void write_dataset(const fs::path& dir, const Dataset& dataset,
                   const DatasetWriteOptions& options) {
    dataset.validate();
    if (options.full_traces && options.full_traces->size() != dataset.samples.size())
        throw InvalidInputError("write_dataset: full trace count must match sample count");
    fs::create_directories(dir / "series");
    if (options.full_traces) fs::create_directories(dir / "full");

    const double sample_rate =
        dataset.samples.empty() ? 0.0 : dataset.samples.front().series.sample_rate;
    const double start_time =
        dataset.samples.empty() ? 0.0 : dataset.samples.front().series.start_time;

    KvPairs manifest;
    manifest.emplace_back("format", "oscloc-dataset-v1");
    std::vector<std::string> names =
        dataset.samples.empty() ? std::vector<std::string>{} :
                                  dataset.samples.front().series.channel_names;
    manifest.emplace_back("channels", join(names, ','));
    manifest.emplace_back("sample_rate", format_full(sample_rate));
    manifest.emplace_back("start_time", format_full(start_time));
    manifest.emplace_back("classes", join(dataset.class_set, ','));
    manifest.emplace_back("count", std::to_string(dataset.samples.size()));
    manifest.emplace_back("has_full_traces", options.full_traces ? "yes" : "no");
    for (const auto& extra : options.manifest_extras) manifest.push_back(extra);
    write_kv_file(dir / "manifest", manifest);

    std::ostringstream labels;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const auto& sample = dataset.samples[i];
        labels << sample_id(i) << ' ' << sample.label;
        for (const auto& [key, value] : sample.scenario_meta) labels << ' ' << key << '=' << value;
        labels << "\n";
        write_series_csv(dir / "series" / (sample_id(i) + ".csv"), sample.series);
        if (options.full_traces)
            write_series_csv(dir / "full" / (sample_id(i) + ".csv"), (*options.full_traces)[i]);
    }
    write_text_atomic(dir / "labels", labels.str());
}

LoadedDataset read_dataset(const fs::path& dir, bool want_full_traces) {
    LoadedDataset loaded;
    loaded.manifest = read_kv_file(dir / "manifest");
    const auto manifest = kv_to_map(loaded.manifest);

    const auto need = [&](const std::string& key) {
        const auto it = manifest.find(key);
        if (it == manifest.end())
            throw InvalidInputError("dataset manifest missing key '" + key + "' in " +
                                    dir.string());
        return it->second;
    };
    loaded.sample_rate = parse_double(need("sample_rate"), "manifest");
    loaded.start_time = parse_double(need("start_time"), "manifest");
    for (auto& cls : split(need("classes"), ','))
        loaded.dataset.class_set.push_back(trim(cls));
    const bool has_full = manifest.count("has_full_traces") && manifest.at("has_full_traces") == "yes";

    const std::string labels_text = slurp(dir / "labels");
    std::istringstream in(labels_text);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string id, label;
        if (!(fields >> id >> label))
            throw InvalidInputError("bad labels line '" + line + "' in " + dir.string());

        LabeledSample sample;
        sample.label = label;
        std::string meta;
        while (fields >> meta) {
            const std::size_t eq = meta.find('=');
            if (eq == std::string::npos)
                throw InvalidInputError("bad metadata token '" + meta + "' in labels file");
            sample.scenario_meta[meta.substr(0, eq)] = meta.substr(eq + 1);
        }
        sample.series = read_series_csv(dir / "series" / (id + ".csv"), loaded.sample_rate,
                                        loaded.start_time);
        if (want_full_traces && has_full)
            loaded.full_traces.push_back(
                read_series_csv(dir / "full" / (id + ".csv"), loaded.sample_rate, 0.0));
        loaded.dataset.samples.push_back(std::move(sample));
    }
    loaded.dataset.validate();
    return loaded;
}

void write_metric_file(const fs::path& path, const MetricMatrix& metric,
                       const std::optional<ChannelStats>& stats) {
    const Eigen::Index p = metric.dim();
    if (stats && static_cast<Eigen::Index>(stats->size()) != p)
        throw InvalidInputError("write_metric_file: stats size must equal p");
    std::ostringstream out;
    out << "p=" << p << "\n";
    out << "normalization=" << (stats ? "yes" : "no") << "\n";
    for (Eigen::Index r = 0; r < p; ++r) {
        for (Eigen::Index c = 0; c < p; ++c) {
            if (c > 0) out << ' ';
            out << format_full(metric.m()(r, c));
        }
        out << "\n";
    }
    if (stats)
        for (Eigen::Index c = 0; c < p; ++c)
            out << format_full(stats->mean[c]) << ' ' << format_full(stats->stddev[c]) << "\n";
    write_text_atomic(path, out.str());
}

LoadedMetric read_metric_file(const fs::path& path) {
    const std::string text = slurp(path);
    std::istringstream in(text);
    std::string line;

    if (!std::getline(in, line)) throw InvalidInputError("metric file is empty: " + path.string());
    line = trim(line);
    if (line.rfind("p=", 0) != 0)
        throw InvalidInputError("metric file must start with p=<int>: " + path.string());
    const int p = static_cast<int>(parse_double(trim(line.substr(2)), "metric header"));
    if (p < 1) throw InvalidInputError("metric file has invalid p");

    if (!std::getline(in, line))
        throw InvalidInputError("metric file truncated after header");
    line = trim(line);
    if (line.rfind("normalization=", 0) != 0)
        throw InvalidInputError("metric file line 2 must be normalization=<yes|no>");
    const std::string norm = trim(line.substr(std::string("normalization=").size()));
    if (norm != "yes" && norm != "no")
        throw InvalidInputError("metric file normalization must be yes or no");

    Eigen::MatrixXd m(p, p);
    for (int r = 0; r < p; ++r) {
        if (!std::getline(in, line))
            throw InvalidInputError("metric file truncated in matrix rows");
        std::istringstream row(line);
        for (int c = 0; c < p; ++c) {
            std::string tok;
            if (!(row >> tok)) throw InvalidInputError("metric file row has too few values");
            m(r, c) = parse_double(tok, "metric row " + std::to_string(r + 1));
        }
    }

    LoadedMetric loaded{MetricMatrix(std::move(m)), std::nullopt};
    if (norm == "yes") {
        ChannelStats stats;
        for (int c = 0; c < p; ++c) {
            if (!std::getline(in, line))
                throw InvalidInputError("metric file truncated in normalization rows");
            std::istringstream row(line);
            std::string mean_tok, std_tok;
            if (!(row >> mean_tok >> std_tok))
                throw InvalidInputError("metric file normalization row needs 'mean std'");
            stats.mean.push_back(parse_double(mean_tok, "normalization mean"));
            stats.stddev.push_back(parse_double(std_tok, "normalization std"));
            stats.zero_variance.push_back(false);
            if (!(stats.stddev.back() > 0.0))
                throw InvalidInputError("metric file normalization std must be > 0");
        }
        loaded.stats = std::move(stats);
    }
    return loaded;
}

void write_predictions(const fs::path& path,
                       const std::vector<std::pair<std::string, Prediction>>& predictions) {
    std::ostringstream out;
    out << "# id predicted_label neighbor:distance ...\n";
    for (const auto& [id, pred] : predictions) {
        out << id << ' ' << pred.label;
        for (std::size_t k = 0; k < pred.neighbor_ids.size(); ++k)
            out << ' ' << pred.neighbor_ids[k] << ':' << format_full(pred.neighbor_distances[k]);
        out << "\n";
    }
    write_text_atomic(path, out.str());
}

std::string format_report_table(const EvaluationReport& report) {
    std::size_t width = std::string("Generator with disturbance").size();
    for (const auto& cr : report.per_class) width = std::max(width, cr.label.size());

    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-*s  %8s  %8s  %10s\n", static_cast<int>(width),
                  "Generator with disturbance", "Correct", "Error", "Accuracy/%");
    out << buf;
    for (const auto& cr : report.per_class) {
        std::snprintf(buf, sizeof(buf), "%-*s  %8zu  %8zu  %10.1f%s\n", static_cast<int>(width),
                      cr.label.c_str(), cr.correct, cr.error, cr.accuracy_pct,
                      cr.missing_in_training ? "  [not in training]" : "");
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%-*s  %8zu  %8zu  %10.1f\n", static_cast<int>(width),
                  "Overall", report.total_correct, report.total - report.total_correct,
                  report.overall_accuracy_pct);
    out << buf;

    out << "\nConfusion matrix (rows = true class, columns = predicted):\n";
    for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
        std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(width),
                      report.class_order[static_cast<std::size_t>(r)].c_str());
        out << buf;
        for (Eigen::Index c = 0; c < report.confusion.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "  %6d", report.confusion(r, c));
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

std::string format_report_records(const EvaluationReport& report) {
    std::ostringstream out;
    for (const auto& cr : report.per_class)
        out << "class=" << cr.label << " correct=" << cr.correct << " error=" << cr.error
            << " accuracy_pct=" << format_full(cr.accuracy_pct)
            << " in_training=" << (cr.missing_in_training ? "no" : "yes") << "\n";
    out << "overall correct=" << report.total_correct << " total=" << report.total
        << " accuracy_pct=" << format_full(report.overall_accuracy_pct) << "\n";
    return out.str();
}

} // namespace oscloc::io
