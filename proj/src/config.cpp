#include "deeppp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "deeppp/error.hpp"
#include "deeppp/textio.hpp"

namespace deeppp {

namespace {

using Keys = std::set<std::string>;

// Shortest round-trip text, so 0.1 is echoed as 0.1.
YAML::Node num(double v) { return YAML::Node(format_double(v)); }

void reject_unknown(const YAML::Node& node, const std::string& section, const Keys& known) {
    if (!node.IsMap()) throw InputError("config section '" + section + "' must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!known.count(key)) {
            throw InputError("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
        }
    }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& section) {
    const auto v = node[key];
    if (!v) return;
    try {
        out = v.as<T>();
    } catch (const YAML::Exception&) {
        throw InputError("config key '" + section + "." + key + "' has an invalid value");
    }
}

YAML::Node propagation_node(const PropagationConfig& p) {
    YAML::Node n;
    n["head"] = to_string(p.head);
    n["alpha"] = num(p.alpha);
    n["k_iters"] = p.k_iters;
    n["exact"] = p.exact;
    n["gat_heads"] = p.gat_heads;
    n["leaky_slope"] = num(p.leaky_slope);
    return n;
}

YAML::Node train_node(const TrainConfig& t) {
    YAML::Node n;
    n["learning_rate"] = num(t.learning_rate);
    n["epochs"] = t.epochs;
    n["batch_size"] = t.batch_size;
    n["dropout"] = num(t.dropout_rate);
    n["loss"] = to_string(t.loss);
    n["hidden"] = t.hidden;
    return n;
}

YAML::Node to_node(const ExperimentConfig& c) {
    YAML::Node root;
    if (c.seed) {
        root["seed"] = *c.seed;
    } else {
        root["seed"] = YAML::Node(YAML::NodeType::Null);
    }
    root["output_dir"] = c.output_dir;
    root["workers"] = c.workers;

    auto& d = c.data;
    YAML::Node data;
    data["graph"] = d.graph;
    data["activation"] = d.activation;
    data["activation_next"] = d.activation_next;
    data["embeddings"] = d.embeddings;
    data["instances"] = d.instances;
    data["directed"] = d.directed;
    root["data"] = data;

    YAML::Node feat;
    feat["vertex"] = c.features.vertex;
    feat["embedding"] = c.features.embedding;
    feat["standardize"] = c.features.standardize;
    YAML::Node dw;
    const auto& w = c.features.deepwalk;
    dw["dim"] = w.dim;
    dw["walks_per_node"] = w.walks_per_node;
    dw["walk_length"] = w.walk_length;
    dw["window"] = w.window;
    dw["negatives"] = w.negatives;
    dw["epochs"] = w.epochs;
    dw["learning_rate"] = num(w.learning_rate);
    feat["deepwalk"] = dw;
    root["features"] = feat;

    YAML::Node s;
    s["sample_size"] = c.sampler.sample_size;
    s["restart_prob"] = num(c.sampler.restart_prob);
    s["balance"] = c.sampler.balance;
    root["sampler"] = s;

    root["propagation"] = propagation_node(c.propagation);
    root["train"] = train_node(c.train);

    YAML::Node sw;
    YAML::Node heads(YAML::NodeType::Sequence);
    for (auto h : c.sweep.heads) heads.push_back(std::string(to_string(h)));
    sw["heads"] = heads;
    YAML::Node alphas(YAML::NodeType::Sequence);
    for (auto a : c.sweep.alphas) alphas.push_back(num(a));
    sw["alphas"] = alphas;
    YAML::Node ks(YAML::NodeType::Sequence);
    for (auto k : c.sweep.k_values) ks.push_back(k);
    sw["k_values"] = ks;
    root["sweep"] = sw;

    const auto& g = c.generate;
    YAML::Node gen;
    gen["nodes"] = g.nodes;
    gen["ring_degree"] = g.ring_degree;
    gen["rewire_prob"] = num(g.rewire_prob);
    gen["edge_prob"] = num(g.edge_prob);
    gen["seeds_per_cascade"] = g.seeds_per_cascade;
    gen["cascades"] = g.cascades;
    gen["observe_round"] = g.observe_round;
    gen["label_delay"] = g.label_delay;
    root["generate"] = gen;

    const auto& f = c.forecast;
    YAML::Node fc;
    fc["series"] = f.series;
    fc["edges"] = f.edges;
    fc["horizon"] = f.horizon;
    fc["min_window"] = f.min_window;
    fc["growth_threshold"] = num(f.growth_threshold);
    fc["growth_model"] = f.growth_model;
    fc["epochs"] = f.epochs;
    root["forecast"] = fc;
    return root;
}

ExperimentConfig from_node(const YAML::Node& root) {
    ExperimentConfig c;
    if (!root || root.IsNull()) return c;
    reject_unknown(root, "",
                   {"seed", "output_dir", "workers", "data", "features", "sampler", "propagation", "train", "sweep",
                    "generate", "forecast"});
    if (root["seed"] && !root["seed"].IsNull()) {
        std::uint64_t seed = 0;
        read(root, "seed", seed, "");
        c.seed = seed;
    }
    read(root, "output_dir", c.output_dir, "");
    read(root, "workers", c.workers, "");

    if (auto n = root["data"]) {
        reject_unknown(n, "data", {"graph", "activation", "activation_next", "embeddings", "instances", "directed"});
        read(n, "graph", c.data.graph, "data");
        read(n, "activation", c.data.activation, "data");
        read(n, "activation_next", c.data.activation_next, "data");
        read(n, "embeddings", c.data.embeddings, "data");
        read(n, "instances", c.data.instances, "data");
        read(n, "directed", c.data.directed, "data");
    }
    if (auto n = root["features"]) {
        reject_unknown(n, "features", {"vertex", "embedding", "standardize", "deepwalk"});
        read(n, "vertex", c.features.vertex, "features");
        read(n, "embedding", c.features.embedding, "features");
        read(n, "standardize", c.features.standardize, "features");
        if (auto d = n["deepwalk"]) {
            const std::string sec = "features.deepwalk";
            reject_unknown(d, sec,
                           {"dim", "walks_per_node", "walk_length", "window", "negatives", "epochs", "learning_rate"});
            auto& w = c.features.deepwalk;
            read(d, "dim", w.dim, sec);
            read(d, "walks_per_node", w.walks_per_node, sec);
            read(d, "walk_length", w.walk_length, sec);
            read(d, "window", w.window, sec);
            read(d, "negatives", w.negatives, sec);
            read(d, "epochs", w.epochs, sec);
            read(d, "learning_rate", w.learning_rate, sec);
        }
    }
    if (auto n = root["sampler"]) {
        reject_unknown(n, "sampler", {"sample_size", "restart_prob", "balance"});
        read(n, "sample_size", c.sampler.sample_size, "sampler");
        read(n, "restart_prob", c.sampler.restart_prob, "sampler");
        read(n, "balance", c.sampler.balance, "sampler");
    }
    if (auto n = root["propagation"]) {
        reject_unknown(n, "propagation", {"head", "alpha", "k_iters", "exact", "gat_heads", "leaky_slope"});
        std::string head = to_string(c.propagation.head);
        read(n, "head", head, "propagation");
        c.propagation.head = parse_head(head);
        read(n, "alpha", c.propagation.alpha, "propagation");
        read(n, "k_iters", c.propagation.k_iters, "propagation");
        read(n, "exact", c.propagation.exact, "propagation");
        read(n, "gat_heads", c.propagation.gat_heads, "propagation");
        read(n, "leaky_slope", c.propagation.leaky_slope, "propagation");
    }
    if (auto n = root["train"]) {
        reject_unknown(n, "train", {"learning_rate", "epochs", "batch_size", "dropout", "loss", "hidden"});
        read(n, "learning_rate", c.train.learning_rate, "train");
        read(n, "epochs", c.train.epochs, "train");
        read(n, "batch_size", c.train.batch_size, "train");
        read(n, "dropout", c.train.dropout_rate, "train");
        std::string loss = to_string(c.train.loss);
        read(n, "loss", loss, "train");
        c.train.loss = parse_loss(loss);
        read(n, "hidden", c.train.hidden, "train");
    }
    if (auto n = root["sweep"]) {
        reject_unknown(n, "sweep", {"heads", "alphas", "k_values"});
        if (n["heads"]) {
            std::vector<std::string> names;
            read(n, "heads", names, "sweep");
            c.sweep.heads.clear();
            for (const auto& s : names) c.sweep.heads.push_back(parse_head(s));
        }
        read(n, "alphas", c.sweep.alphas, "sweep");
        read(n, "k_values", c.sweep.k_values, "sweep");
    }
    if (auto n = root["generate"]) {
        reject_unknown(n, "generate",
                       {"nodes", "ring_degree", "rewire_prob", "edge_prob", "seeds_per_cascade", "cascades",
                        "observe_round", "label_delay"});
        auto& g = c.generate;
        read(n, "nodes", g.nodes, "generate");
        read(n, "ring_degree", g.ring_degree, "generate");
        read(n, "rewire_prob", g.rewire_prob, "generate");
        read(n, "edge_prob", g.edge_prob, "generate");
        read(n, "seeds_per_cascade", g.seeds_per_cascade, "generate");
        read(n, "cascades", g.cascades, "generate");
        read(n, "observe_round", g.observe_round, "generate");
        read(n, "label_delay", g.label_delay, "generate");
    }
    if (auto n = root["forecast"]) {
        reject_unknown(n, "forecast",
                       {"series", "edges", "horizon", "min_window", "growth_threshold", "growth_model", "epochs"});
        auto& f = c.forecast;
        read(n, "series", f.series, "forecast");
        read(n, "edges", f.edges, "forecast");
        read(n, "horizon", f.horizon, "forecast");
        read(n, "min_window", f.min_window, "forecast");
        read(n, "growth_threshold", f.growth_threshold, "forecast");
        read(n, "growth_model", f.growth_model, "forecast");
        read(n, "epochs", f.epochs, "forecast");
    }
    return c;
}

}  // namespace

void ExperimentConfig::validate() const {
    propagation.validate();
    train.validate();
    if (workers < 1) throw InputError("workers must be >= 1");
    if (sampler.sample_size < 1) throw InputError("sampler.sample_size must be >= 1");
    if (!(sampler.restart_prob >= 0.0 && sampler.restart_prob < 1.0)) {
        throw InputError("sampler.restart_prob must lie in [0, 1)");
    }
    if (features.embedding != "none" && features.embedding != "deepwalk" && features.embedding != "file") {
        throw InputError("features.embedding must be none, deepwalk or file");
    }
    if (!(generate.edge_prob >= 0.0 && generate.edge_prob <= 1.0)) {
        throw InputError("generate.edge_prob must lie in [0, 1]");
    }
    if (generate.ring_degree % 2 != 0 || generate.ring_degree >= generate.nodes) {
        throw InputError("generate.ring_degree must be even and smaller than generate.nodes");
    }
    if (generate.seeds_per_cascade < 1 || generate.seeds_per_cascade > generate.nodes) {
        throw InputError("generate.seeds_per_cascade must lie in [1, nodes]");
    }
    if (generate.label_delay < 1) throw InputError("generate.label_delay must be >= 1");
    if (sweep.heads.empty() || sweep.alphas.empty() || sweep.k_values.empty()) {
        throw InputError("sweep.heads, sweep.alphas and sweep.k_values must not be empty");
    }
    for (double a : sweep.alphas) {
        if (!(a > 0.0 && a <= 1.0)) throw InputError("sweep.alphas entries must lie in (0, 1]");
    }
    for (int k : sweep.k_values) {
        if (k < 0) throw InputError("sweep.k_values entries must be >= 0");
    }
    if (forecast.horizon < 1 || forecast.horizon > 6) throw InputError("forecast.horizon must lie in [1, 6]");
    if (forecast.min_window < 1) throw InputError("forecast.min_window must be >= 1");
    if (forecast.growth_model != "blend" && forecast.growth_model != "persistence") {
        throw InputError("forecast.growth_model must be blend or persistence");
    }
    if (forecast.epochs < 0) throw InputError("forecast.epochs must be >= 0");
}

ExperimentConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw InputError(std::string("config is not valid YAML: ") + e.what());
    }
    return from_node(root);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("override '" + assignment + "' is not key=value");
    const auto key = assignment.substr(0, eq);
    const auto value = assignment.substr(eq + 1);

    auto root = to_node(cfg);
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);

    YAML::Node parsed;
    try {
        parsed = YAML::Load(value);
    } catch (const YAML::Exception&) {
        throw InputError("override '" + assignment + "' has an unparsable value");
    }
    // Walk down, creating nothing: an unknown path is rejected by from_node.
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        auto next = chain.back()[parts[i]];
        if (!next.IsMap()) throw InputError("unknown config key '" + key + "'");
        chain.push_back(next);
    }
    chain.back()[parts.back()] = parsed;
    cfg = from_node(root);
}

std::string config_to_yaml(const ExperimentConfig& cfg) {
    YAML::Emitter out;
    out << to_node(cfg);
    return std::string(out.c_str()) + "\n";
}

void set_seed(ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.sampler.seed = seed;
    cfg.train.seed = seed;
    cfg.features.deepwalk.seed = seed;
}

nlohmann::ordered_json to_json(const PropagationConfig& p) {
    return {{"head", to_string(p.head)}, {"alpha", p.alpha},         {"k_iters", p.k_iters},
            {"exact", p.exact},          {"gat_heads", p.gat_heads}, {"leaky_slope", p.leaky_slope}};
}

nlohmann::ordered_json to_json(const TrainConfig& t) {
    return {{"learning_rate", t.learning_rate}, {"epochs", t.epochs}, {"batch_size", t.batch_size},
            {"dropout", t.dropout_rate},        {"loss", to_string(t.loss)}, {"seed", t.seed},
            {"hidden", t.hidden}};
}

PropagationConfig propagation_from_json(const nlohmann::json& j) {
    PropagationConfig p;
    p.head = parse_head(j.at("head").get<std::string>());
    p.alpha = j.at("alpha").get<double>();
    p.k_iters = j.at("k_iters").get<int>();
    p.exact = j.at("exact").get<bool>();
    p.gat_heads = j.at("gat_heads").get<int>();
    p.leaky_slope = j.at("leaky_slope").get<double>();
    return p;
}

TrainConfig train_from_json(const nlohmann::json& j) {
    TrainConfig t;
    t.learning_rate = j.at("learning_rate").get<double>();
    t.epochs = j.at("epochs").get<int>();
    t.batch_size = j.at("batch_size").get<std::size_t>();
    t.dropout_rate = j.at("dropout").get<double>();
    t.loss = parse_loss(j.at("loss").get<std::string>());
    t.seed = j.at("seed").get<std::uint64_t>();
    t.hidden = j.at("hidden").get<std::size_t>();
    return t;
}

}  // namespace deeppp
