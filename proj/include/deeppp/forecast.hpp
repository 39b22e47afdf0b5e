#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deeppp/graph.hpp"
#include "deeppp/learner.hpp"

namespace deeppp {

// =============================================================================
// Region case-count forecasting
//
// Regions are graph nodes. A region is active on day d when its daily growth
// (C[d] - C[d-1]) / C[d-1] exceeds a threshold. For each cutoff day t a
// classifier is fit on (snapshot at d, activation at d + h) pairs with
// d + h <= t, and the predicted activation probability p of each region picks
// the growth rate used to extrapolate its count from C[t] to C[t + h]:
//
//   blend        g = p * growth on the latest active day + (1 - p) * growth on the latest inactive day
//   persistence  g = growth observed on day t (no classifier)
//
// This mapping from counts to node activations is this project's own choice.
// =============================================================================

struct RegionSeries {
    std::vector<std::string> dates;    // strictly increasing
    std::vector<std::string> regions;  // sorted
    /// counts[r][d]: cumulative cases of region r on day d.
    std::vector<std::vector<double>> counts;

    std::size_t days() const { return dates.size(); }
    /// Days [0, last] only.
    RegionSeries prefix(std::size_t last) const;
};

/// CSV with header date,region_id,cumulative_cases. Every region must report
/// every date; cumulative counts must be nonnegative and nondecreasing.
RegionSeries load_region_series(const std::filesystem::path& path);
void write_region_series(const RegionSeries& s, const std::filesystem::path& path);
void validate_series(const RegionSeries& s);

/// Daily growth of region r on day d >= 1 (0 when both counts are 0).
double daily_growth(const RegionSeries& s, std::size_t r, std::size_t d);

enum class GrowthModel : std::uint8_t { Blend, Persistence };
GrowthModel parse_growth_model(const std::string& s);

struct ForecastOptions {
    int max_horizon = 6;
    std::size_t min_window = 7;
    double growth_threshold = 0.025;
    GrowthModel model = GrowthModel::Blend;
    PropagationConfig pcfg;
    TrainConfig tcfg;
};

struct RegionForecast {
    std::string region;
    double probability = 0.0;  // predicted activation
    double growth = 0.0;
    double predicted = 0.0;
    double actual = 0.0;
};

struct CutoffResult {
    std::string cutoff_date;
    std::size_t cutoff = 0;  // day index
    int horizon = 0;
    std::size_t window = 0;  // days of history used (cutoff + 1)
    std::optional<double> apme;  // regions with zero actual are not scored
    std::vector<RegionForecast> regions;
};

struct ForecastRun {
    std::vector<CutoffResult> cutoffs;
    /// Mean of the per-cutoff APME, per horizon (index h - 1).
    std::vector<std::optional<double>> mean_apme;
};

/// Prediction for cutoff day t and horizon h. Only days <= t of `history`
/// are read, so later values cannot leak in.
CutoffResult forecast_cutoff(const RegionSeries& history, const Graph& regions, std::size_t t, int h,
                             const ForecastOptions& opts);

/// Rolling origin over every cutoff t with t + 1 >= min_window and t + h < days.
ForecastRun rolling_forecast(const RegionSeries& s, const Graph& regions, const ForecastOptions& opts);

/// Region graph from an edge list over region ids, or the complete graph when
/// `edges` is empty. Node order follows s.regions.
Graph region_graph(const RegionSeries& s, const std::filesystem::path& edges);

/// Synthetic series: each region grows at its own base rate drawn from
/// [growth_lo, growth_hi] plus N(0, noise) daily jitter (clipped at 0).
/// noise = 0 with growth_lo = growth_hi gives exact geometric growth.
RegionSeries synthetic_series(std::size_t regions, std::size_t days, double growth_lo, double growth_hi,
                              double noise, double start, std::uint64_t seed);

/// Discrete SIR epidemic per region with population N, contact rate drawn
/// from [beta_lo, beta_hi], recovery rate gamma and log-normal noise of
/// scale `noise` on daily new infections. Counts are cumulative (N - S), so
/// growth accelerates and then saturates.
RegionSeries sir_series(std::size_t regions, std::size_t days, double population, double beta_lo,
                        double beta_hi, double gamma, double noise, double initial, std::uint64_t seed);

}  // namespace deeppp
