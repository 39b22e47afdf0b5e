#include "deeppp/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "deeppp/error.hpp"
#include "deeppp/features.hpp"
#include "deeppp/metrics.hpp"
#include "deeppp/random.hpp"
#include "deeppp/sampler.hpp"
#include "deeppp/textio.hpp"

namespace deeppp {

RegionSeries RegionSeries::prefix(std::size_t last) const {
    RegionSeries out;
    const auto n = std::min(last + 1, days());
    out.dates.assign(dates.begin(), dates.begin() + static_cast<std::ptrdiff_t>(n));
    out.regions = regions;
    for (const auto& row : counts) out.counts.emplace_back(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

void validate_series(const RegionSeries& s) {
    if (s.regions.empty() || s.dates.empty()) throw InputError("region series is empty");
    for (std::size_t d = 1; d < s.dates.size(); ++d) {
        if (!(s.dates[d - 1] < s.dates[d])) {
            throw InputError("dates must be strictly increasing (" + s.dates[d - 1] + ", " + s.dates[d] + ")");
        }
    }
    for (std::size_t r = 0; r < s.regions.size(); ++r) {
        const auto& row = s.counts[r];
        if (row.size() != s.dates.size()) throw InputError("region " + s.regions[r] + " is missing dates");
        for (std::size_t d = 0; d < row.size(); ++d) {
            if (!(row[d] >= 0.0) || !std::isfinite(row[d])) {
                throw InputError("region " + s.regions[r] + " has a negative count on " + s.dates[d]);
            }
            if (d > 0 && row[d] < row[d - 1]) {
                throw InputError("cumulative counts of region " + s.regions[r] + " decrease on " + s.dates[d]);
            }
        }
    }
}

RegionSeries load_region_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open series file " + path.string());
    std::map<std::string, std::map<std::string, double>> table;  // region -> date -> count
    std::map<std::string, bool> dates;
    std::string line;
    std::size_t lineno = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank_or_comment(line)) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        const auto where = path.string() + ":" + std::to_string(lineno);
        if (header) {
            header = false;
            if (f.size() != 3 || f[0] != "date" || f[1] != "region_id" || f[2] != "cumulative_cases") {
                throw InputError(where + ": expected header date,region_id,cumulative_cases");
            }
            continue;
        }
        if (f.size() != 3) throw InputError(where + ": expected 3 fields");
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(f[2], &used);
            if (used != f[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw InputError(where + ": cumulative_cases is not a number");
        }
        auto& cell = table[f[1]];
        if (cell.count(f[0])) throw InputError(where + ": duplicate row for " + f[1] + " on " + f[0]);
        cell[f[0]] = v;
        dates[f[0]] = true;
    }
    if (table.empty()) throw InputError(path.string() + ": no data rows");
    RegionSeries s;
    for (const auto& [d, _] : dates) s.dates.push_back(d);
    for (const auto& [region, by_date] : table) {
        s.regions.push_back(region);
        std::vector<double> row;
        for (const auto& d : s.dates) {
            auto it = by_date.find(d);
            if (it == by_date.end()) throw InputError(path.string() + ": region " + region + " has no row for " + d);
            row.push_back(it->second);
        }
        s.counts.push_back(std::move(row));
    }
    validate_series(s);
    return s;
}

void write_region_series(const RegionSeries& s, const std::filesystem::path& path) {
    std::string out = "date,region_id,cumulative_cases\n";
    for (std::size_t d = 0; d < s.days(); ++d) {
        for (std::size_t r = 0; r < s.regions.size(); ++r) {
            out += csv_escape(s.dates[d]) + "," + csv_escape(s.regions[r]) + "," + format_double(s.counts[r][d]) + "\n";
        }
    }
    write_text_file(path.string(), out);
}

double daily_growth(const RegionSeries& s, std::size_t r, std::size_t d) {
    const double prev = s.counts[r][d - 1];
    const double cur = s.counts[r][d];
    if (prev == 0.0) return cur == 0.0 ? 0.0 : 1.0;  // first cases: count as 100% growth
    return (cur - prev) / prev;
}

GrowthModel parse_growth_model(const std::string& s) {
    if (s == "blend") return GrowthModel::Blend;
    if (s == "persistence") return GrowthModel::Persistence;
    throw InputError("unknown growth model '" + s + "'");
}

Graph region_graph(const RegionSeries& s, const std::filesystem::path& edges) {
    std::vector<Edge> list;
    if (edges.empty()) {
        for (NodeIndex u = 0; u < s.regions.size(); ++u) {
            for (NodeIndex v = u + 1; v < s.regions.size(); ++v) list.emplace_back(u, v);
        }
        return Graph::from_edges(s.regions, list);
    }
    const auto g = load_edge_list(edges);
    for (const auto& id : g.ids()) {
        if (!std::binary_search(s.regions.begin(), s.regions.end(), id)) {
            throw InputError(edges.string() + ": region '" + id + "' does not occur in the series");
        }
    }
    for (const auto& [u, v] : g.edges()) {
        const auto a = std::lower_bound(s.regions.begin(), s.regions.end(), g.id(u)) - s.regions.begin();
        const auto b = std::lower_bound(s.regions.begin(), s.regions.end(), g.id(v)) - s.regions.begin();
        list.emplace_back(static_cast<NodeIndex>(a), static_cast<NodeIndex>(b));
    }
    return Graph::from_edges(s.regions, list);
}

namespace {

struct GrowthStats {
    double active = 0.0;
    double inactive = 0.0;
};

// Per-region growth on the latest active / inactive day in 1..t. Whole-history
// means lag behind a curve that is speeding up or saturating, the latest day
// in each state does not. Regions that never visited a state borrow the
// average over regions that did.
std::vector<GrowthStats> growth_stats(const RegionSeries& s, std::size_t t, double threshold) {
    const auto regions = s.regions.size();
    std::vector<std::optional<double>> la(regions), li(regions);
    double pa = 0.0, pi = 0.0, pna = 0.0, pni = 0.0;
    for (std::size_t r = 0; r < regions; ++r) {
        for (std::size_t d = 1; d <= t; ++d) {
            const double g = daily_growth(s, r, d);
            (g > threshold ? la[r] : li[r]) = g;
        }
        if (la[r]) pa += *la[r], pna += 1.0;
        if (li[r]) pi += *li[r], pni += 1.0;
    }
    const double pooled_a = pna > 0 ? pa / pna : (pni > 0 ? pi / pni : 0.0);
    const double pooled_i = pni > 0 ? pi / pni : pooled_a;
    std::vector<GrowthStats> out(regions);
    for (std::size_t r = 0; r < regions; ++r) {
        out[r].active = la[r].value_or(pooled_a);
        out[r].inactive = li[r].value_or(pooled_i);
    }
    return out;
}

EgoInstance day_instance(const Graph& g, const NormalizedAdjacency& adj, const Eigen::MatrixXd& static_features,
                         const RegionSeries& s, std::size_t r, std::size_t d, double threshold) {
    const auto regions = s.regions.size();
    EgoInstance inst;
    inst.edges = g.edges();
    inst.sub_adjacency = adj;
    inst.ego_index = static_cast<std::uint32_t>(r);
    inst.ego_id = s.regions[r];
    inst.neighbor_activation.assign(regions, 0);
    inst.features.resize(static_cast<Eigen::Index>(regions), static_features.cols() + 2);
    inst.features.leftCols(static_features.cols()) = static_features;
    for (std::size_t v = 0; v < regions; ++v) {
        const double growth = d > 0 ? daily_growth(s, v, d) : 0.0;
        if (v != r && growth > threshold) inst.neighbor_activation[v] = 1;
        inst.features(static_cast<Eigen::Index>(v), static_features.cols()) = growth;
        inst.features(static_cast<Eigen::Index>(v), static_features.cols() + 1) = std::log1p(s.counts[v][d]);
    }
    return inst;
}

// P(active at t + h) per region from a classifier fit on days <= t.
std::vector<double> activation_probabilities(const RegionSeries& s, const Graph& g, std::size_t t, int h,
                                             const ForecastOptions& opts) {
    const auto regions = s.regions.size();
    const auto hs = static_cast<std::size_t>(h);
    std::vector<double> probs(regions, 0.0);
    if (t < hs + 1) {
        // No labelled pair inside the window yet: carry today's state forward.
        for (std::size_t r = 0; r < regions; ++r) {
            probs[r] = t > 0 && daily_growth(s, r, t) > opts.growth_threshold ? 1.0 : 0.0;
        }
        return probs;
    }
    const auto adj = normalize_adjacency(g);
    const auto statics = vertex_features(g).values;

    InstanceSet set;
    for (std::size_t d = 1; d + hs <= t; ++d) {
        for (std::size_t r = 0; r < regions; ++r) {
            auto inst = day_instance(g, adj, statics, s, r, d, opts.growth_threshold);
            inst.label = daily_growth(s, r, d + hs) > opts.growth_threshold ? 1 : 0;
            set.instances.push_back(std::move(inst));
            set.split_tags.push_back(Split::Train);
        }
    }
    const auto first_query = set.instances.size();
    for (std::size_t r = 0; r < regions; ++r) {
        set.instances.push_back(day_instance(g, adj, statics, s, r, t, opts.growth_threshold));
        set.split_tags.push_back(Split::Test);
    }
    standardize_instances(set);
    std::vector<EgoInstance> queries(std::make_move_iterator(set.instances.begin() + static_cast<std::ptrdiff_t>(first_query)),
                                     std::make_move_iterator(set.instances.end()));
    set.instances.resize(first_query);
    set.split_tags.resize(first_query);

    auto tcfg = opts.tcfg;
    tcfg.seed = derive_seed(opts.tcfg.seed, {t, hs});
    const auto model = train(set, tcfg, opts.pcfg);
    for (std::size_t r = 0; r < regions; ++r) {
        const auto prepared = prepare_instance(queries[r], opts.pcfg);
        probs[r] = forward_ego(model.params, prepared, opts.pcfg)(1);
    }
    return probs;
}

}  // namespace

CutoffResult forecast_cutoff(const RegionSeries& history, const Graph& regions, std::size_t t, int h,
                             const ForecastOptions& opts) {
    if (h < 1 || h > 6) throw InputError("horizon must lie in [1, 6]");
    if (t >= history.days()) throw InputError("cutoff lies outside the series");
    if (regions.node_count() != history.regions.size()) throw InputError("region graph does not match the series");
    const auto past = history.prefix(t);

    CutoffResult out;
    out.cutoff = t;
    out.cutoff_date = past.dates[t];
    out.horizon = h;
    out.window = t + 1;

    std::vector<double> probs(past.regions.size(), 0.0);
    std::vector<GrowthStats> stats;
    if (opts.model == GrowthModel::Blend) {
        probs = activation_probabilities(past, regions, t, h, opts);
        stats = growth_stats(past, t, opts.growth_threshold);
    }
    for (std::size_t r = 0; r < past.regions.size(); ++r) {
        RegionForecast f;
        f.region = past.regions[r];
        f.probability = probs[r];
        if (opts.model == GrowthModel::Blend) {
            f.growth = probs[r] * stats[r].active + (1.0 - probs[r]) * stats[r].inactive;
        } else {
            f.growth = t > 0 ? daily_growth(past, r, t) : 0.0;
        }
        f.predicted = past.counts[r][t] * std::pow(1.0 + f.growth, h);
        out.regions.push_back(f);
    }
    return out;
}

ForecastRun rolling_forecast(const RegionSeries& s, const Graph& regions, const ForecastOptions& opts) {
    validate_series(s);
    if (opts.max_horizon < 1 || opts.max_horizon > 6) throw InputError("horizon must lie in [1, 6]");
    const auto hmax = static_cast<std::size_t>(opts.max_horizon);
    if (s.days() < hmax + opts.min_window) {
        throw InputError("series has " + std::to_string(s.days()) + " days; need at least " +
                         std::to_string(hmax + opts.min_window) + " (horizon + minimum window)");
    }
    ForecastRun run;
    run.mean_apme.assign(hmax, std::nullopt);
    std::vector<double> sums(hmax, 0.0), counts(hmax, 0.0);
    for (std::size_t t = opts.min_window - 1; t < s.days(); ++t) {
        for (int h = 1; h <= opts.max_horizon; ++h) {
            const auto hs = static_cast<std::size_t>(h);
            if (t + hs >= s.days()) break;
            auto res = forecast_cutoff(s, regions, t, h, opts);
            std::vector<double> predicted, actual;
            for (std::size_t r = 0; r < res.regions.size(); ++r) {
                auto& f = res.regions[r];
                f.actual = s.counts[r][t + hs];
                if (f.actual > 0.0) {
                    predicted.push_back(f.predicted);
                    actual.push_back(f.actual);
                }
            }
            if (!actual.empty()) {
                res.apme = apme(predicted, actual);
                sums[hs - 1] += *res.apme;
                counts[hs - 1] += 1.0;
            }
            run.cutoffs.push_back(std::move(res));
        }
    }
    for (std::size_t h = 0; h < hmax; ++h) {
        if (counts[h] > 0) run.mean_apme[h] = sums[h] / counts[h];
    }
    return run;
}

namespace {

// Day labels sort lexicographically in day order.
RegionSeries labelled(std::size_t regions, std::size_t days) {
    RegionSeries s;
    for (std::size_t d = 0; d < days; ++d) {
        std::string label = std::to_string(d);
        s.dates.push_back("day" + std::string(6 - std::min<std::size_t>(6, label.size()), '0') + label);
    }
    for (std::size_t r = 0; r < regions; ++r) {
        std::string label = std::to_string(r);
        s.regions.push_back("r" + std::string(4 - std::min<std::size_t>(4, label.size()), '0') + label);
    }
    return s;
}

// Box-Muller, so the stream does not depend on the standard library.
double gaussian(Rng& rng) {
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace

RegionSeries synthetic_series(std::size_t regions, std::size_t days, double growth_lo, double growth_hi,
                              double noise, double start, std::uint64_t seed) {
    if (regions == 0 || days == 0) throw InputError("synthetic series needs regions and days");
    if (!(growth_lo <= growth_hi) || growth_lo < 0.0 || noise < 0.0 || !(start > 0.0)) {
        throw InputError("invalid synthetic series parameters");
    }
    RegionSeries s = labelled(regions, days);
    Rng rng(derive_seed(seed, {0x736572696573}));
    Rng jitter(derive_seed(seed, {0x6e6f697365}));
    for (std::size_t r = 0; r < regions; ++r) {
        const double base = growth_lo == growth_hi ? growth_lo : rng.uniform(growth_lo, growth_hi);
        std::vector<double> row{start};
        for (std::size_t d = 1; d < days; ++d) {
            const double g = noise > 0.0 ? std::max(0.0, base + noise * gaussian(jitter)) : base;
            row.push_back(row.back() * (1.0 + g));
        }
        s.counts.push_back(std::move(row));
    }
    return s;
}

RegionSeries sir_series(std::size_t regions, std::size_t days, double population, double beta_lo,
                        double beta_hi, double gamma, double noise, double initial, std::uint64_t seed) {
    if (regions == 0 || days == 0) throw InputError("sir series needs regions and days");
    if (!(population > 0.0) || !(initial > 0.0) || initial > population || !(beta_lo <= beta_hi) ||
        beta_lo < 0.0 || gamma < 0.0 || gamma > 1.0 || noise < 0.0) {
        throw InputError("invalid sir series parameters");
    }
    RegionSeries s = labelled(regions, days);
    Rng rng(derive_seed(seed, {0x736972, 0x62657461}));
    Rng jitter(derive_seed(seed, {0x736972, 0x6e6f697365}));
    for (std::size_t r = 0; r < regions; ++r) {
        const double beta = beta_lo == beta_hi ? beta_lo : rng.uniform(beta_lo, beta_hi);
        double sus = population - initial;
        double inf = initial;
        std::vector<double> row{initial};
        for (std::size_t d = 1; d < days; ++d) {
            // Multiplicative jitter on the day's new infections, capped by
            // the susceptible pool so the cumulative count stays below N.
            const double mean = beta * sus * inf / population;
            const double shock = noise > 0.0 ? std::exp(noise * gaussian(jitter)) : 1.0;
            const double fresh = std::min(sus, mean * shock);
            const double recovered = gamma * inf;
            sus -= fresh;
            inf += fresh - recovered;
            row.push_back(population - sus);
        }
        s.counts.push_back(std::move(row));
    }
    return s;
}

}  // namespace deeppp
