#include <fstream>

#include <json.hpp>

#include "deeppp/error.hpp"
#include "deeppp/sampler.hpp"

namespace deeppp {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kFormat = "deeppp-instances";
constexpr int kVersion = 1;

}  // namespace

void write_instances(const InstanceSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");

    Json header;
    header["format"] = kFormat;
    header["version"] = kVersion;
    header["provenance"] = {{"graph_hash", set.provenance.graph_hash},
                            {"seed", set.provenance.seed},
                            {"sample_size", set.provenance.sample_size}};
    header["feature_names"] = set.feature_names;
    Json stats = Json::array();
    for (const auto& s : set.standardization) stats.push_back({s.mean, s.std});
    header["standardization"] = stats;
    out << header.dump() << '\n';

    for (std::size_t i = 0; i < set.instances.size(); ++i) {
        const auto& inst = set.instances[i];
        Json rec;
        rec["ego_id"] = inst.ego_id;
        rec["ego_index"] = inst.ego_index;
        Json edges = Json::array();
        for (auto [u, v] : inst.edges) edges.push_back({u, v});
        rec["edges"] = std::move(edges);
        rec["activation"] = inst.neighbor_activation;
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < inst.features.rows(); ++r) {
            Json row = Json::array();
            for (Eigen::Index c = 0; c < inst.features.cols(); ++c) row.push_back(inst.features(r, c));
            rows.push_back(std::move(row));
        }
        rec["features"] = std::move(rows);
        rec["label"] = inst.label;
        rec["split"] = to_string(set.split_tags[i]);
        out << rec.dump() << '\n';
    }
}

InstanceSet read_instances(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open instance file '" + path.string() + "'");
    InstanceSet set;
    std::string line;
    std::size_t lineno = 0;
    try {
        if (!std::getline(in, line)) throw InputError("instance file '" + path.string() + "' is empty");
        ++lineno;
        auto header = Json::parse(line);
        if (header.value("format", "") != kFormat) throw FormatError("not an instance file: " + path.string());
        if (header.at("version").get<int>() != kVersion) {
            throw FormatError("unsupported instance file version " + header.at("version").dump());
        }
        const auto& prov = header.at("provenance");
        set.provenance.graph_hash = prov.at("graph_hash").get<std::uint64_t>();
        set.provenance.seed = prov.at("seed").get<std::uint64_t>();
        set.provenance.sample_size = prov.at("sample_size").get<std::uint32_t>();
        set.feature_names = header.at("feature_names").get<std::vector<std::string>>();
        for (const auto& s : header.at("standardization")) {
            set.standardization.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
        }

        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            auto rec = Json::parse(line);
            EgoInstance inst;
            inst.ego_id = rec.at("ego_id").get<std::string>();
            inst.ego_index = rec.at("ego_index").get<std::uint32_t>();
            inst.neighbor_activation = rec.at("activation").get<std::vector<std::uint8_t>>();
            const auto m = inst.neighbor_activation.size();
            for (const auto& e : rec.at("edges")) {
                const auto u = e.at(0).get<NodeIndex>();
                const auto v = e.at(1).get<NodeIndex>();
                if (u >= m || v >= m || u == v) throw InputError("edge index out of range");
                inst.edges.emplace_back(std::min(u, v), std::max(u, v));
            }
            std::sort(inst.edges.begin(), inst.edges.end());
            const auto& rows = rec.at("features");
            if (rows.size() != m) throw InputError("feature row count differs from activation length");
            const auto width = m == 0 ? 0 : rows.at(0).size();
            inst.features.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(width));
            for (std::size_t r = 0; r < m; ++r) {
                if (rows[r].size() != width) throw InputError("ragged feature rows");
                for (std::size_t c = 0; c < width; ++c) {
                    inst.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
                }
            }
            if (inst.ego_index >= m) throw InputError("ego_index out of range");
            inst.label = rec.at("label").get<std::uint8_t>();
            if (inst.label > 1) throw InputError("label must be 0 or 1");
            inst.sub_adjacency = normalize_edges(m, inst.edges);
            set.split_tags.push_back(parse_split(rec.at("split").get<std::string>()));
            set.instances.push_back(std::move(inst));
        }
    } catch (const Json::exception& e) {
        throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const InputError& e) {
        throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    return set;
}

}  // namespace deeppp
