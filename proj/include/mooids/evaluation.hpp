#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mooids/core.hpp"
#include "mooids/gbdt.hpp"

namespace mooids {

struct PerClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    bool precision_undefined = false;  // class never predicted
    bool recall_undefined = false;     // class without true samples
};

struct CalibrationBins {
    // equal-width bins over predicted-class confidence in [0, 1]
    std::vector<std::size_t> count;
    std::vector<double> mean_confidence;
    std::vector<double> accuracy;
};

struct EvalReport {
    double accuracy = 0.0;
    double precision_weighted = 0.0;
    double recall_weighted = 0.0;
    double f1_weighted = 0.0;
    std::vector<PerClassMetrics> per_class;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
    double confidence_predicted_class = 0.0;
    double confidence_true_class = 0.0;
    double ece = 0.0;
    CalibrationBins calibration;
    double train_time_s = 0.0;
    double test_time_per_sample_ms = 0.0;
    double model_size_mb = 0.0;
    std::size_t model_size_bytes = 0;
    std::uint64_t seed = 0;
    std::string config_digest;
    std::vector<std::string> label_names;
};

/// Confusion-matrix metrics; undefined precision/recall become 0 with a
/// flag instead of an error.
EvalReport classification_metrics(const std::vector<int>& labels,
                                  const std::vector<int>& predictions, std::size_t class_count);

/// Means of p[i, predicted_i] and p[i, true_i]. Rows must sum to 1.
std::pair<double, double> confidence_metrics(const Matrix& probabilities,
                                             const std::vector<int>& predictions,
                                             const std::vector<int>& labels);

/// Support-weighted gap between confidence and accuracy over equal-width
/// bins of predicted-class probability (right-inclusive edges).
double expected_calibration_error(const Matrix& probabilities,
                                  const std::vector<int>& predictions,
                                  const std::vector<int>& labels, int bins = 15);

CalibrationBins calibration_bins(const Matrix& probabilities,
                                 const std::vector<int>& predictions,
                                 const std::vector<int>& labels, int bins = 15);

struct TimingResult {
    double train_time_s = 0.0;
    double test_time_per_sample_ms = 0.0;
};

/// Times train_fn once end-to-end, then inference as the median of 3 full
/// passes over test_rows after one warm-up pass.
TimingResult measure_times(const std::function<void()>& train_fn, const GbdtModel& model,
                           const Matrix& test_rows);

double measure_inference_ms_per_row(const GbdtModel& model, const Matrix& rows);

/// Writes <dir>/report.json and <dir>/report.md (the markdown row mirrors
/// the usual nine metric columns).
void emit_report(const EvalReport& report, const std::string& dir,
                 const std::string& upstream_digest = "");

EvalReport report_from_json(const std::string& bytes);

}  // namespace mooids
