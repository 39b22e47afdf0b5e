#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deeppp {

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

struct ThresholdScore {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Confusion confusion;
};

/// Mann-Whitney AUC: fraction of (positive, negative) pairs ranked correctly,
/// ties counted as 1/2. Throws UndefinedMetricError without both classes.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Predicts positive iff score >= threshold. Zero denominators give 0.
ThresholdScore prf(std::span<const double> scores, std::span<const int> labels, double threshold);

struct F1Sweep {
    double f1_best = 0.0;
    /// Smallest threshold attaining f1_best. -inf only for empty input.
    double best_threshold = 0.0;
    /// Ascending thresholds: the -inf sentinel, then every distinct score.
    std::vector<ThresholdScore> grid;
};

F1Sweep f1_best_sweep(std::span<const double> scores, std::span<const int> labels);

/// Mean absolute percentage error, mean_i |predicted_i - actual_i| / actual_i.
/// Throws InputError on length mismatch or a non-positive actual value.
double apme(std::span<const double> predicted, std::span<const double> actual);

struct EvalReport {
    std::size_t count = 0;
    std::optional<double> auc;
    double threshold = 0.5;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Confusion confusion;
    double f1_best = 0.0;
    double best_threshold = 0.0;
    double best_precision = 0.0;
    double best_recall = 0.0;
    Confusion best_confusion;
    std::optional<double> loss;
    std::optional<double> apme;
    std::vector<ThresholdScore> grid;
};

/// AUC (left empty for single-class input), P/R/F1 at `threshold`, and the F1-best sweep.
EvalReport make_report(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// Flat JSON object (the threshold grid is not included).
std::string report_to_json(const EvalReport& r);
/// Column order of report_to_csv_row.
std::string report_csv_header();
std::string report_csv_row(const EvalReport& r);
/// threshold,precision,recall,f1,tp,fp,tn,fn
std::string report_grid_csv(const EvalReport& r);

}  // namespace deeppp
