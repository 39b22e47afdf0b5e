#include "deeppp/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "deeppp/error.hpp"
#include "deeppp/features.hpp"
#include "deeppp/forecast.hpp"
#include "deeppp/graph.hpp"
#include "deeppp/learner.hpp"
#include "deeppp/metrics.hpp"
#include "deeppp/random.hpp"
#include "deeppp/sampler.hpp"
#include "deeppp/textio.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace deeppp {

namespace {

std::uint64_t require_seed(const ExperimentConfig& cfg, const char* verb) {
    if (!cfg.seed) throw InputError(std::string(verb) + " needs an explicit seed (--seed)");
    return *cfg.seed;
}

fs::path ensure_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw InputError("cannot create output directory " + p.string() + ": " + ec.message());
    return p;
}

void write_json(const fs::path& path, const ojson& j) { write_text_file(path.string(), j.dump(2) + "\n"); }

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// Timestamps and durations live here, apart from the reproducible outputs.
void write_metadata(const fs::path& dir, const std::string& verb, double seconds, ojson extra = ojson::object()) {
    ojson j;
    j["command"] = verb;
    j["finished_at"] = utc_now();
    j["seconds"] = seconds;
    for (auto& [k, v] : extra.items()) j[k] = v;
    write_json(dir / "metadata.json", j);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw InputError(std::string("no ") + what + " given");
    if (!fs::exists(path)) throw InputError(std::string(what) + " not found: " + path);
}

FeatureMatrix node_features(const ExperimentConfig& cfg, const Graph& g, std::vector<std::string>* warnings) {
    std::vector<FeatureMatrix> parts;
    if (cfg.features.vertex) parts.push_back(vertex_features(g));
    if (cfg.features.embedding == "deepwalk") {
        parts.push_back(deepwalk_embed(g, cfg.features.deepwalk));
    } else if (cfg.features.embedding == "file") {
        require_file(cfg.data.embeddings, "embedding file");
        auto loaded = load_embeddings(cfg.data.embeddings, g);
        if (warnings) warnings->insert(warnings->end(), loaded.warnings.begin(), loaded.warnings.end());
        parts.push_back(std::move(loaded.features));
    }
    if (parts.empty()) throw InputError("no features selected (features.vertex is false and features.embedding is none)");
    return assemble_features(parts, false);
}

ojson split_counts(const InstanceSet& set) {
    ojson j;
    for (auto s : {Split::Train, Split::Validation, Split::Test}) {
        const auto b = set.balance(s);
        j[to_string(s)] = {{"positives", b.positives}, {"negatives", b.negatives}};
    }
    return j;
}

std::string alpha_tag(double a) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << a;
    return os.str();
}

}  // namespace

// -----------------------------------------------------------------------------

void cmd_features(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    require_file(cfg.data.graph, "graph file");
    const auto g = load_edge_list(cfg.data.graph, cfg.data.directed);
    std::vector<std::string> warnings;
    const auto fm = node_features(cfg, g, &warnings);
    const auto dir = ensure_dir(cfg.output_dir);
    write_feature_csv(fm, g, dir / "features.csv");

    ojson schema;
    schema["id_column"] = "id";
    schema["rows"] = fm.rows();
    auto cols = ojson::array();
    for (const auto& name : fm.column_names) cols.push_back(name);
    schema["columns"] = cols;
    schema["standardized"] = false;
    schema["graph_fingerprint"] = g.fingerprint();
    schema["warnings"] = warnings;
    write_json(dir / "features.schema.json", schema);
    write_metadata(dir, "features", seconds_since(start));
}

void cmd_generate(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const auto seed = require_seed(cfg, "generate");
    cfg.validate();
    const auto& gc = cfg.generate;
    if (cfg.features.embedding == "file") throw InputError("generate cannot use an embedding file");

    const auto g = small_world_graph(gc.nodes, gc.ring_degree, gc.rewire_prob, derive_seed(seed, {0x6772617068}));
    const auto rounds = gc.observe_round + gc.label_delay;
    std::vector<Observation> observations;
    std::size_t candidates = 0, positives = 0;
    for (std::size_t c = 0; c < gc.cascades; ++c) {
        Rng rng(derive_seed(seed, {0x63617363, c}));
        std::vector<NodeIndex> order(g.node_count());
        for (NodeIndex i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order.begin(), order.end());
        order.resize(gc.seeds_per_cascade);
        std::sort(order.begin(), order.end());
        const auto traj = simulate_cascade(g, order, gc.edge_prob, rounds, derive_seed(seed, {0x6963, c}));
        Observation obs{g.with_activation(traj[gc.observe_round]), g.with_activation(traj[rounds])};
        // Raw label rate before balancing.
        for (NodeIndex v = 0; v < g.node_count(); ++v) {
            if (obs.at_t.is_active(v)) continue;
            const auto nb = g.neighbors(v);
            if (std::none_of(nb.begin(), nb.end(), [&](NodeIndex u) { return obs.at_t.is_active(u); })) continue;
            ++candidates;
            positives += obs.at_t_plus.is_active(v) ? 1 : 0;
        }
        observations.push_back(std::move(obs));
    }

    const auto fm = node_features(cfg, g, nullptr);
    auto sopts = cfg.sampler;
    sopts.seed = seed;
    auto set = generate_dataset(observations, fm, sopts);
    if (cfg.features.standardize) standardize_instances(set);

    const auto dir = ensure_dir(cfg.output_dir);
    write_edge_list(g, dir / "graph.tsv");
    write_instances(set, dir / "instances.jsonl");

    ojson summary;
    summary["nodes"] = g.node_count();
    summary["edges"] = g.edge_count();
    summary["cascades"] = gc.cascades;
    summary["candidates"] = candidates;
    summary["candidate_positive_rate"] =
        candidates ? ojson(static_cast<double>(positives) / static_cast<double>(candidates)) : ojson(nullptr);
    summary["instances"] = set.instances.size();
    summary["splits"] = split_counts(set);
    summary["feature_names"] = set.feature_names;
    write_json(dir / "generate_summary.json", summary);
    // The echo is relative to its own directory so relocated runs compare equal.
    auto echo = cfg;
    echo.output_dir = ".";
    write_text_file((dir / "config.yaml").string(), config_to_yaml(echo));
    write_metadata(dir, "generate", seconds_since(start));
}

void cmd_sample(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    cfg.validate();
    require_file(cfg.data.graph, "graph file");
    require_file(cfg.data.activation, "activation file");
    require_file(cfg.data.activation_next, "next activation file");
    const auto g = load_edge_list(cfg.data.graph, cfg.data.directed);
    const auto at_t = set_activation(g, load_activation_ids(cfg.data.activation));
    const auto at_next = set_activation(g, load_activation_ids(cfg.data.activation_next));
    std::vector<std::string> warnings;
    const auto fm = node_features(cfg, g, &warnings);
    auto sopts = cfg.sampler;
    sopts.seed = cfg.seed.value_or(0);
    auto set = generate_dataset(at_t, at_next, fm, sopts);
    if (cfg.features.standardize) standardize_instances(set);

    const auto dir = ensure_dir(cfg.output_dir);
    write_instances(set, dir / "instances.jsonl");
    ojson summary;
    summary["instances"] = set.instances.size();
    summary["splits"] = split_counts(set);
    summary["warnings"] = warnings;
    write_json(dir / "sample_summary.json", summary);
    write_metadata(dir, "sample", seconds_since(start));
}

void cmd_train(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const auto seed = require_seed(cfg, "train");
    cfg.validate();
    require_file(cfg.data.instances, "instance file");
    const auto data = read_instances(cfg.data.instances);
    auto tcfg = cfg.train;
    tcfg.seed = seed;
    const auto dir = ensure_dir(cfg.output_dir);

    ojson run;
    run["head"] = to_string(cfg.propagation.head);
    run["alpha"] = cfg.propagation.alpha;
    run["k_iters"] = cfg.propagation.k_iters;
    run["propagation"] = to_json(cfg.propagation);
    run["train"] = to_json(tcfg);
    run["instances"] = data.instances.size();
    run["input_width"] = instance_input_width(data.feature_width());
    write_json(dir / "run.json", run);

    TrainResult result;
    try {
        result = train(data, tcfg, cfg.propagation);
    } catch (const DivergenceError& e) {
        write_text_file((dir / "trace.json").string(), trace_to_json(e.trace()));
        throw;
    }
    save_checkpoint(result.params, cfg.propagation, tcfg, (dir / "model.ckpt").string());
    write_text_file((dir / "trace.json").string(), trace_to_json(result.trace));
    if (result.trace.test) {
        const auto& rep = *result.trace.test;
        write_text_file((dir / "eval.json").string(), report_to_json(rep));
        write_text_file((dir / "eval.csv").string(), report_csv_header() + "\n" + report_csv_row(rep) + "\n");
        write_text_file((dir / "eval_grid.csv").string(), report_grid_csv(rep));
    }
    ojson epoch_seconds = ojson::array();
    for (const auto& e : result.trace.epochs) epoch_seconds.push_back(e.seconds);
    write_metadata(dir, "train", seconds_since(start), {{"epoch_seconds", epoch_seconds}});
}

std::vector<SweepCell> cmd_sweep(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const auto seed = require_seed(cfg, "sweep");
    cfg.validate();
    require_file(cfg.data.instances, "instance file");
    const auto data = read_instances(cfg.data.instances);
    auto tcfg = cfg.train;
    tcfg.seed = seed;  // shared by every cell

    std::vector<SweepCell> cells;
    for (auto h : cfg.sweep.heads) {
        for (double a : cfg.sweep.alphas) {
            for (int k : cfg.sweep.k_values) cells.push_back({h, a, k, ""});
        }
    }
    const auto dir = ensure_dir(cfg.output_dir);
    std::vector<std::optional<EvalReport>> reports(cells.size());

    auto run_cell = [&](std::size_t i) {
        auto& cell = cells[i];
        auto pcfg = cfg.propagation;
        pcfg.head = cell.head;
        pcfg.alpha = cell.alpha;
        pcfg.k_iters = cell.k_iters;
        const auto cell_dir =
            dir / "cells" / (std::string(to_string(cell.head)) + "_a" + alpha_tag(cell.alpha) + "_k" + std::to_string(cell.k_iters));
        try {
            fs::create_directories(cell_dir);
            ojson run;
            run["head"] = to_string(pcfg.head);
            run["alpha"] = pcfg.alpha;
            run["k_iters"] = pcfg.k_iters;
            run["propagation"] = to_json(pcfg);
            run["train"] = to_json(tcfg);
            write_json(cell_dir / "run.json", run);
            const auto result = train(data, tcfg, pcfg);
            write_text_file((cell_dir / "trace.json").string(), trace_to_json(result.trace));
            if (result.trace.test) {
                write_text_file((cell_dir / "eval.json").string(), report_to_json(*result.trace.test));
                reports[i] = result.trace.test;
            }
            cell.status = "ok";
        } catch (const std::exception& e) {
            cell.status = std::string("failed: ") + e.what();
        }
    };

    const auto workers = std::min(cfg.workers, std::max<std::size_t>(cells.size(), 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (auto i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) run_cell(i);
            });
        }
        for (auto& t : pool) t.join();
    }

    const auto header = report_csv_header();
    const std::string empty_row(static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')), ',');
    std::string table = "head,alpha,k_iters,status," + header + "\n";
    std::string bars = "head,alpha,k_iters,f1_best\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        const auto prefix = std::string(to_string(c.head)) + "," + format_double(c.alpha) + "," +
                            std::to_string(c.k_iters) + ",";
        table += prefix + csv_escape(c.status) + "," + (reports[i] ? report_csv_row(*reports[i]) : empty_row) + "\n";
        bars += prefix + (reports[i] ? format_double(reports[i]->f1_best) : std::string()) + "\n";
    }
    write_text_file((dir / "sweep.csv").string(), table);
    write_text_file((dir / "sweep_f1best.csv").string(), bars);
    write_metadata(dir, "sweep", seconds_since(start), {{"workers", workers}});
    return cells;
}

void cmd_forecast(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    cfg.validate();
    require_file(cfg.forecast.series, "series file");
    if (!cfg.forecast.edges.empty()) require_file(cfg.forecast.edges, "region edge file");
    const auto series = load_region_series(cfg.forecast.series);
    const auto g = region_graph(series, cfg.forecast.edges);

    ForecastOptions opts;
    opts.max_horizon = cfg.forecast.horizon;
    opts.min_window = cfg.forecast.min_window;
    opts.growth_threshold = cfg.forecast.growth_threshold;
    opts.model = parse_growth_model(cfg.forecast.growth_model);
    opts.pcfg = cfg.propagation;
    opts.tcfg = cfg.train;
    opts.tcfg.seed = cfg.seed.value_or(0);
    opts.tcfg.epochs = cfg.forecast.epochs;
    const auto run = rolling_forecast(series, g, opts);

    const auto dir = ensure_dir(cfg.output_dir);
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    std::string table = "cutoff_date,cutoff_day,horizon,window_days,regions_scored,apme\n";
    std::string regions = "cutoff_date,horizon,region_id,probability,growth,predicted,actual\n";
    for (const auto& c : run.cutoffs) {
        const auto scored = std::count_if(c.regions.begin(), c.regions.end(), [](const auto& r) { return r.actual > 0; });
        table += csv_escape(c.cutoff_date) + "," + std::to_string(c.cutoff) + "," + std::to_string(c.horizon) + "," +
                 std::to_string(c.window) + "," + std::to_string(scored) + "," + opt(c.apme) + "\n";
        for (const auto& r : c.regions) {
            regions += csv_escape(c.cutoff_date) + "," + std::to_string(c.horizon) + "," + csv_escape(r.region) + "," +
                       format_double(r.probability) + "," + format_double(r.growth) + "," +
                       format_double(r.predicted) + "," + format_double(r.actual) + "\n";
        }
    }
    write_text_file((dir / "forecast.csv").string(), table);
    write_text_file((dir / "forecast_regions.csv").string(), regions);

    ojson summary;
    summary["mapping"] =
        "regions are nodes; a region is active on a day when its daily growth exceeds growth_threshold; "
        "this region-to-graph mapping is this project's own construction";
    summary["growth_model"] = cfg.forecast.growth_model;
    summary["growth_threshold"] = cfg.forecast.growth_threshold;
    summary["regions"] = series.regions.size();
    summary["days"] = series.days();
    auto per_h = ojson::array();
    for (std::size_t h = 0; h < run.mean_apme.size(); ++h) {
        per_h.push_back({{"horizon", h + 1},
                         {"mean_apme", run.mean_apme[h] ? ojson(*run.mean_apme[h]) : ojson(nullptr)}});
    }
    summary["mean_apme"] = per_h;
    write_json(dir / "forecast_summary.json", summary);
    write_metadata(dir, "forecast", seconds_since(start));
}

std::vector<std::string> cmd_report(const fs::path& run_dir, const fs::path& out_dir) {
    std::vector<std::string> warnings;
    if (!fs::is_directory(run_dir)) throw InputError("run directory not found: " + run_dir.string());

    std::vector<fs::path> run_dirs, sweeps;
    for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (name == "eval.json" || name == "run.json") run_dirs.push_back(entry.path().parent_path());
        if (name == "sweep.csv") sweeps.push_back(entry.path());
    }
    std::sort(run_dirs.begin(), run_dirs.end());
    run_dirs.erase(std::unique(run_dirs.begin(), run_dirs.end()), run_dirs.end());
    std::sort(sweeps.begin(), sweeps.end());

    auto rel = [&](const fs::path& p) {
        auto r = p.lexically_relative(run_dir).generic_string();
        return r.empty() ? std::string(".") : r;
    };
    auto read_json = [&](const fs::path& p) -> std::optional<ojson> {
        std::ifstream in(p);
        if (!in) {
            warnings.push_back(rel(p) + ": missing");
            return std::nullopt;
        }
        try {
            return ojson::parse(in);
        } catch (const ojson::exception&) {
            warnings.push_back(rel(p) + ": not valid JSON");
            return std::nullopt;
        }
    };

    struct Row {
        std::optional<double> alpha;
        std::string path;
        ojson body;
    };
    std::vector<Row> rows;
    for (const auto& d : run_dirs) {
        Row row;
        row.path = rel(d);
        row.body["path"] = row.path;
        const auto run = read_json(d / "run.json");
        const auto eval = read_json(d / "eval.json");
        if (run) {
            row.body["head"] = run->value("head", "");
            if (run->contains("alpha") && (*run)["alpha"].is_number()) row.alpha = (*run)["alpha"].get<double>();
            row.body["alpha"] = row.alpha ? ojson(*row.alpha) : ojson(nullptr);
            row.body["k_iters"] = run->value("k_iters", 0);
        } else {
            row.body["head"] = nullptr;
            row.body["alpha"] = nullptr;
            row.body["k_iters"] = nullptr;
        }
        if (auto trace = fs::exists(d / "trace.json") ? read_json(d / "trace.json") : std::nullopt) {
            row.body["best_epoch"] = trace->value("best_epoch", 0);
            row.body["epochs_run"] = trace->contains("epochs") ? (*trace)["epochs"].size() : 0;
        }
        row.body["report"] = eval ? *eval : ojson(nullptr);
        rows.push_back(std::move(row));
    }
    // Sorted by alpha; runs without one go last, ties keep path order.
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.alpha.has_value() != b.alpha.has_value()) return a.alpha.has_value();
        return a.alpha && *a.alpha < *b.alpha;
    });

    ojson report;
    auto runs = ojson::array();
    for (auto& r : rows) runs.push_back(std::move(r.body));
    report["runs"] = runs;
    auto sweep_list = ojson::array();
    for (const auto& s : sweeps) sweep_list.push_back(rel(s));
    report["sweeps"] = sweep_list;
    if (run_dirs.empty() && sweeps.empty()) warnings.push_back("no run artifacts found");
    report["warnings"] = warnings;

    std::string csv = "path,head,alpha,k_iters," + report_csv_header() + "\n";
    for (const auto& r : report["runs"]) {
        auto cell = [](const ojson& v) {
            if (v.is_null()) return std::string();
            if (v.is_number_float()) return format_double(v.get<double>());
            if (v.is_string()) return csv_escape(v.get<std::string>());
            return v.dump();
        };
        csv += csv_escape(r["path"].get<std::string>()) + "," + cell(r["head"]) + "," + cell(r["alpha"]) + "," +
               cell(r["k_iters"]);
        const auto& rep = r["report"];
        for (const char* key : {"count", "auc", "threshold", "precision", "recall", "f1", "tp", "fp", "tn", "fn",
                                "f1_best", "best_threshold", "best_precision", "best_recall", "loss", "apme"}) {
            csv += "," + (rep.is_object() && rep.contains(key) ? cell(rep[key]) : std::string());
        }
        csv += "\n";
    }

    const auto dir = ensure_dir(out_dir.string());
    write_json(dir / "report.json", report);
    write_text_file((dir / "report_runs.csv").string(), csv);
    return warnings;
}

}  // namespace deeppp
