#include "deeppp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "deeppp/error.hpp"
#include "deeppp/textio.hpp"

namespace deeppp {

namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw InputError("scores and labels differ in length (" + std::to_string(scores.size()) + " vs " +
                         std::to_string(labels.size()) + ")");
    }
}

double safe_div(double a, double b) { return b > 0.0 ? a / b : 0.0; }

ThresholdScore score_from(const Confusion& c, double threshold) {
    ThresholdScore s;
    s.threshold = threshold;
    s.confusion = c;
    s.precision = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
    s.recall = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
    s.f1 = safe_div(2.0 * s.precision * s.recall, s.precision + s.recall);
    return s;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
    check_lengths(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of midranks of positives.
    double pos = 0.0, neg = 0.0, rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) {
                pos += 1.0;
                rank_sum += midrank;
            } else {
                neg += 1.0;
            }
        }
        i = j;
    }
    if (pos == 0.0 || neg == 0.0) throw UndefinedMetricError("AUC needs at least one positive and one negative");
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

ThresholdScore prf(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_lengths(scores, labels);
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i]) {
            (predicted ? c.tp : c.fn)++;
        } else {
            (predicted ? c.fp : c.tn)++;
        }
    }
    return score_from(c, threshold);
}

F1Sweep f1_best_sweep(std::span<const double> scores, std::span<const int> labels) {
    check_lengths(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Start with everything predicted positive and raise the threshold one
    // distinct score at a time.
    Confusion c;
    for (auto l : labels) (l ? c.tp : c.fp)++;
    F1Sweep out;
    out.grid.push_back(score_from(c, -std::numeric_limits<double>::infinity()));
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = scores[order[i]];
        out.grid.push_back(score_from(c, t));
        while (i < order.size() && scores[order[i]] == t) {
            if (labels[order[i]]) {
                --c.tp;
                ++c.fn;
            } else {
                --c.fp;
                ++c.tn;
            }
            ++i;
        }
    }
    out.f1_best = -1.0;
    // Skip the sentinel when a finite threshold gives the same predictions.
    const std::size_t first = out.grid.size() > 1 ? 1 : 0;
    for (std::size_t k = first; k < out.grid.size(); ++k) {
        if (out.grid[k].f1 > out.f1_best) {
            out.f1_best = out.grid[k].f1;
            out.best_threshold = out.grid[k].threshold;
        }
    }
    return out;
}

double apme(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) throw InputError("apme: length mismatch");
    if (actual.empty()) throw InputError("apme: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (!(actual[i] > 0.0)) throw InputError("apme: actual values must be positive");
        total += std::abs(predicted[i] - actual[i]) / actual[i];
    }
    return total / static_cast<double>(actual.size());
}

EvalReport make_report(std::span<const double> scores, std::span<const int> labels, double threshold) {
    EvalReport r;
    r.count = scores.size();
    try {
        r.auc = auc(scores, labels);
    } catch (const UndefinedMetricError&) {
        r.auc.reset();
    }
    const auto fixed = prf(scores, labels, threshold);
    r.threshold = threshold;
    r.precision = fixed.precision;
    r.recall = fixed.recall;
    r.f1 = fixed.f1;
    r.confusion = fixed.confusion;
    auto sweep = f1_best_sweep(scores, labels);
    r.f1_best = sweep.f1_best;
    r.best_threshold = sweep.best_threshold;
    const auto best = prf(scores, labels, sweep.best_threshold);
    r.best_precision = best.precision;
    r.best_recall = best.recall;
    r.best_confusion = best.confusion;
    r.grid = std::move(sweep.grid);
    return r;
}

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
    if (v && std::isfinite(*v)) return *v;
    return nullptr;
}

nlohmann::ordered_json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["count"] = r.count;
    j["auc"] = optional_number(r.auc);
    j["threshold"] = r.threshold;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["tp"] = r.confusion.tp;
    j["fp"] = r.confusion.fp;
    j["tn"] = r.confusion.tn;
    j["fn"] = r.confusion.fn;
    j["f1_best"] = r.f1_best;
    j["best_threshold"] = finite_or_null(r.best_threshold);
    j["best_precision"] = r.best_precision;
    j["best_recall"] = r.best_recall;
    j["best_tp"] = r.best_confusion.tp;
    j["best_fp"] = r.best_confusion.fp;
    j["best_tn"] = r.best_confusion.tn;
    j["best_fn"] = r.best_confusion.fn;
    j["loss"] = optional_number(r.loss);
    j["apme"] = optional_number(r.apme);
    return j.dump(2) + "\n";
}

std::string report_csv_header() {
    return "count,auc,threshold,precision,recall,f1,tp,fp,tn,fn,f1_best,best_threshold,best_precision,"
           "best_recall,loss,apme";
}

std::string report_csv_row(const EvalReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    std::ostringstream os;
    os << r.count << ',' << opt(r.auc) << ',' << format_double(r.threshold) << ',' << format_double(r.precision)
       << ',' << format_double(r.recall) << ',' << format_double(r.f1) << ',' << r.confusion.tp << ','
       << r.confusion.fp << ',' << r.confusion.tn << ',' << r.confusion.fn << ',' << format_double(r.f1_best)
       << ',' << format_double(r.best_threshold) << ',' << format_double(r.best_precision) << ','
       << format_double(r.best_recall) << ',' << opt(r.loss) << ',' << opt(r.apme);
    return os.str();
}

std::string report_grid_csv(const EvalReport& r) {
    std::ostringstream os;
    os << "threshold,precision,recall,f1,tp,fp,tn,fn\n";
    for (const auto& g : r.grid) {
        os << format_double(g.threshold) << ',' << format_double(g.precision) << ',' << format_double(g.recall)
           << ',' << format_double(g.f1) << ',' << g.confusion.tp << ',' << g.confusion.fp << ','
           << g.confusion.tn << ',' << g.confusion.fn << '\n';
    }
    return os.str();
}

}  // namespace deeppp
