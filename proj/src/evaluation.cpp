#include "mooids/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace mooids {

EvalReport classification_metrics(const std::vector<int>& labels,
                                  const std::vector<int>& predictions,
                                  std::size_t class_count) {
    if (labels.size() != predictions.size()) {
        throw DataError("classification_metrics: length mismatch");
    }
    if (labels.empty()) throw DataError("classification_metrics: empty input");

    EvalReport report;
    report.confusion.assign(class_count, std::vector<std::size_t>(class_count, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        int t = labels[i], p = predictions[i];
        if (t < 0 || std::size_t(t) >= class_count || p < 0 || std::size_t(p) >= class_count) {
            throw DataError("classification_metrics: label/prediction out of range");
        }
        report.confusion[std::size_t(t)][std::size_t(p)] += 1;
        if (t == p) ++correct;
    }
    double n = double(labels.size());
    report.accuracy = double(correct) / n;

    report.per_class.resize(class_count);
    for (std::size_t c = 0; c < class_count; ++c) {
        std::size_t tp = report.confusion[c][c];
        std::size_t support = 0, predicted = 0;
        for (std::size_t o = 0; o < class_count; ++o) {
            support += report.confusion[c][o];
            predicted += report.confusion[o][c];
        }
        PerClassMetrics& m = report.per_class[c];
        m.support = support;
        if (predicted == 0) {
            m.precision = 0.0;
            m.precision_undefined = true;
        } else {
            m.precision = double(tp) / double(predicted);
        }
        if (support == 0) {
            m.recall = 0.0;
            m.recall_undefined = true;
        } else {
            m.recall = double(tp) / double(support);
        }
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        report.precision_weighted += double(support) / n * m.precision;
        report.recall_weighted += double(support) / n * m.recall;
        report.f1_weighted += double(support) / n * m.f1;
    }
    return report;
}

std::pair<double, double> confidence_metrics(const Matrix& probabilities,
                                             const std::vector<int>& predictions,
                                             const std::vector<int>& labels) {
    std::size_t n = probabilities.rows();
    if (predictions.size() != n || labels.size() != n) {
        throw DataError("confidence_metrics: length mismatch");
    }
    double sum_pred = 0.0, sum_true = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        auto row = probabilities.row(r);
        double total = 0.0;
        for (double p : row) total += p;
        if (std::abs(total - 1.0) > 1e-6) {
            throw DataError("confidence_metrics: probability row does not sum to 1");
        }
        sum_pred += row[std::size_t(predictions[r])];
        sum_true += row[std::size_t(labels[r])];
    }
    return {sum_pred / double(n), sum_true / double(n)};
}

CalibrationBins calibration_bins(const Matrix& probabilities,
                                 const std::vector<int>& predictions,
                                 const std::vector<int>& labels, int bins) {
    if (bins < 2) throw ConfigError("calibration bins must be >= 2");
    std::size_t n = probabilities.rows();
    CalibrationBins cb;
    cb.count.assign(std::size_t(bins), 0);
    cb.mean_confidence.assign(std::size_t(bins), 0.0);
    cb.accuracy.assign(std::size_t(bins), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double conf = probabilities.at(r, std::size_t(predictions[r]));
        // right-inclusive edges: bin b covers (b/B, (b+1)/B], 0 goes to bin 0
        int b = int(std::ceil(conf * bins)) - 1;
        b = std::clamp(b, 0, bins - 1);
        cb.count[std::size_t(b)] += 1;
        cb.mean_confidence[std::size_t(b)] += conf;
        cb.accuracy[std::size_t(b)] += predictions[r] == labels[r] ? 1.0 : 0.0;
    }
    for (int b = 0; b < bins; ++b) {
        if (cb.count[std::size_t(b)] == 0) continue;
        cb.mean_confidence[std::size_t(b)] /= double(cb.count[std::size_t(b)]);
        cb.accuracy[std::size_t(b)] /= double(cb.count[std::size_t(b)]);
    }
    return cb;
}

double expected_calibration_error(const Matrix& probabilities,
                                  const std::vector<int>& predictions,
                                  const std::vector<int>& labels, int bins) {
    CalibrationBins cb = calibration_bins(probabilities, predictions, labels, bins);
    double n = double(probabilities.rows());
    double ece = 0.0;
    for (std::size_t b = 0; b < cb.count.size(); ++b) {
        if (cb.count[b] == 0) continue;
        ece += double(cb.count[b]) / n * std::abs(cb.accuracy[b] - cb.mean_confidence[b]);
    }
    return ece;
}

double measure_inference_ms_per_row(const GbdtModel& model, const Matrix& rows) {
    using clock = std::chrono::steady_clock;
    volatile double sink = 0.0;
    Matrix warm = model.predict_proba(rows);  // warm-up pass, not timed
    sink += warm.at(0, 0);
    std::vector<double> times;
    for (int pass = 0; pass < 3; ++pass) {
        auto t0 = clock::now();
        Matrix p = model.predict_proba(rows);
        auto t1 = clock::now();
        sink += p.at(0, 0);
        times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    return times[1] / double(rows.rows()) * 1000.0;
}

TimingResult measure_times(const std::function<void()>& train_fn, const GbdtModel& model,
                           const Matrix& test_rows) {
    using clock = std::chrono::steady_clock;
    TimingResult out;
    auto t0 = clock::now();
    train_fn();
    auto t1 = clock::now();
    out.train_time_s = std::chrono::duration<double>(t1 - t0).count();
    out.test_time_per_sample_ms = measure_inference_ms_per_row(model, test_rows);
    return out;
}

namespace {

using nlohmann::json;

json report_to_json(const EvalReport& r) {
    json per_class = json::array();
    for (const auto& m : r.per_class) {
        per_class.push_back({{"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1},
                             {"support", m.support},
                             {"precision_undefined", m.precision_undefined},
                             {"recall_undefined", m.recall_undefined}});
    }
    return json{{"format", "mooids-eval-report-v1"},
                {"accuracy", r.accuracy},
                {"precision_weighted", r.precision_weighted},
                {"recall_weighted", r.recall_weighted},
                {"f1_weighted", r.f1_weighted},
                {"per_class", per_class},
                {"confusion", r.confusion},
                {"confidence_predicted_class", r.confidence_predicted_class},
                {"confidence_true_class", r.confidence_true_class},
                {"ece", r.ece},
                {"calibration",
                 {{"count", r.calibration.count},
                  {"mean_confidence", r.calibration.mean_confidence},
                  {"accuracy", r.calibration.accuracy}}},
                {"timing",
                 {{"train_time_s", r.train_time_s},
                  {"test_time_per_sample_ms", r.test_time_per_sample_ms}}},
                {"model_size_mb", r.model_size_mb},
                {"model_size_bytes", r.model_size_bytes},
                {"seed", r.seed},
                {"config_digest", r.config_digest},
                {"label_names", r.label_names}};
}

}  // namespace

void emit_report(const EvalReport& report, const std::string& dir,
                 const std::string& upstream_digest) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    json doc = report_to_json(report);
    if (!upstream_digest.empty()) doc["upstream_digest"] = upstream_digest;
    std::ofstream jf(fs::path(dir) / "report.json");
    if (!jf) throw DataError("cannot write report to " + dir);
    jf << doc.dump(2) << "\n";

    std::ostringstream md;
    md << "| Method | Accuracy (%) | Precision (%) | Recall (%) | F1 (%) | Training Time (s) "
          "| Avg Test Time Per Sample (ms) | Model Size (MB) | Avg Confidence (%) | ECE (%) |\n";
    md << "|---|---|---|---|---|---|---|---|---|---|\n";
    md << std::fixed;
    md << "| this run | " << std::setprecision(3) << report.accuracy * 100.0 << " | "
       << report.precision_weighted * 100.0 << " | " << report.recall_weighted * 100.0 << " | "
       << report.f1_weighted * 100.0 << " | " << std::setprecision(2) << report.train_time_s
       << " | " << std::setprecision(4) << report.test_time_per_sample_ms << " | "
       << std::setprecision(2) << report.model_size_mb << " | " << std::setprecision(2)
       << report.confidence_true_class * 100.0 << " | " << std::setprecision(2)
       << report.ece * 100.0 << " |\n";
    std::ofstream mf(fs::path(dir) / "report.md");
    if (!mf) throw DataError("cannot write report to " + dir);
    mf << md.str();
}

EvalReport report_from_json(const std::string& bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed report document: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "mooids-eval-report-v1") {
            throw DataError("unsupported report format tag");
        }
        EvalReport r;
        r.accuracy = doc.at("accuracy").get<double>();
        r.precision_weighted = doc.at("precision_weighted").get<double>();
        r.recall_weighted = doc.at("recall_weighted").get<double>();
        r.f1_weighted = doc.at("f1_weighted").get<double>();
        for (const auto& mj : doc.at("per_class")) {
            PerClassMetrics m;
            m.precision = mj.at("precision").get<double>();
            m.recall = mj.at("recall").get<double>();
            m.f1 = mj.at("f1").get<double>();
            m.support = mj.at("support").get<std::size_t>();
            m.precision_undefined = mj.at("precision_undefined").get<bool>();
            m.recall_undefined = mj.at("recall_undefined").get<bool>();
            r.per_class.push_back(m);
        }
        r.confusion = doc.at("confusion").get<std::vector<std::vector<std::size_t>>>();
        r.confidence_predicted_class = doc.at("confidence_predicted_class").get<double>();
        r.confidence_true_class = doc.at("confidence_true_class").get<double>();
        r.ece = doc.at("ece").get<double>();
        r.calibration.count = doc.at("calibration").at("count").get<std::vector<std::size_t>>();
        r.calibration.mean_confidence =
            doc.at("calibration").at("mean_confidence").get<std::vector<double>>();
        r.calibration.accuracy = doc.at("calibration").at("accuracy").get<std::vector<double>>();
        r.train_time_s = doc.at("timing").at("train_time_s").get<double>();
        r.test_time_per_sample_ms = doc.at("timing").at("test_time_per_sample_ms").get<double>();
        r.model_size_mb = doc.at("model_size_mb").get<double>();
        r.model_size_bytes = doc.at("model_size_bytes").get<std::size_t>();
        r.seed = doc.at("seed").get<std::uint64_t>();
        r.config_digest = doc.at("config_digest").get<std::string>();
        r.label_names = doc.at("label_names").get<std::vector<std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed report document: ") + e.what());
    }
}

}  // namespace mooids
