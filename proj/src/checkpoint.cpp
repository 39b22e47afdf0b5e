#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>
#include <zlib.h>

#include "deeppp/config.hpp"
#include "deeppp/error.hpp"
#include "deeppp/learner.hpp"

namespace deeppp {

namespace {

constexpr char kMagic[8] = {'D', 'E', 'E', 'P', 'P', 'P', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& buf, T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf.append(raw, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& pos, const std::string& path) {
    if (pos + sizeof(T) > buf.size()) throw FormatError(path + ": checkpoint is truncated");
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

std::uint32_t checksum(const char* data, std::size_t n) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n));
    return static_cast<std::uint32_t>(crc);
}

nlohmann::ordered_json shape_json(const ModelShape& s) {
    return {{"input_width", s.input_width}, {"hidden", s.hidden}, {"classes", s.classes}, {"gat_heads", s.gat_heads}};
}

}  // namespace

void save_checkpoint(const ModelParams& params, const PropagationConfig& pcfg, const TrainConfig& tcfg,
                     const std::string& path) {
    nlohmann::ordered_json echo;
    echo["shape"] = shape_json(params.shape());
    echo["propagation"] = to_json(pcfg);
    echo["train"] = to_json(tcfg);
    const auto config = echo.dump();

    std::string buf(kMagic, sizeof(kMagic));
    put<std::uint32_t>(buf, kVersion);
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(config.size()));
    buf += config;
    put<std::uint64_t>(buf, params.size());
    for (double v : params.flat_view()) put<double>(buf, v);
    put<std::uint32_t>(buf, checksum(buf.data(), buf.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write checkpoint " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw InputError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint " + path);
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < sizeof(kMagic) + 4 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
        throw FormatError(path + ": not a checkpoint (bad magic)");
    }
    std::size_t pos = sizeof(kMagic);
    const auto version = take<std::uint32_t>(buf, pos, path);
    if (version != kVersion) {
        throw FormatError(path + ": unknown checkpoint version " + std::to_string(version));
    }
    if (buf.size() < 4) throw FormatError(path + ": checkpoint is truncated");
    std::size_t tail = buf.size() - 4;
    std::uint32_t stored = 0;
    std::memcpy(&stored, buf.data() + tail, 4);
    if (checksum(buf.data(), tail) != stored) throw FormatError(path + ": checksum mismatch");

    const auto config_len = take<std::uint32_t>(buf, pos, path);
    if (pos + config_len > tail) throw FormatError(path + ": checkpoint is truncated");
    nlohmann::json echo;
    try {
        echo = nlohmann::json::parse(buf.substr(pos, config_len));
    } catch (const nlohmann::json::exception&) {
        throw FormatError(path + ": config block is not JSON");
    }
    pos += config_len;

    ModelShape shape;
    try {
        const auto& s = echo.at("shape");
        shape.input_width = s.at("input_width").get<std::size_t>();
        shape.hidden = s.at("hidden").get<std::size_t>();
        shape.classes = s.at("classes").get<std::size_t>();
        shape.gat_heads = s.at("gat_heads").get<std::size_t>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(path + ": config block lacks a model shape");
    }
    Checkpoint ck{ModelParams(shape), propagation_from_json(echo.at("propagation")),
                  train_from_json(echo.at("train"))};

    const auto count = take<std::uint64_t>(buf, pos, path);
    if (count != ck.params.size()) {
        throw FormatError(path + ": parameter count " + std::to_string(count) + " does not match shape (" +
                          std::to_string(ck.params.size()) + ")");
    }
    if (pos + count * sizeof(double) != tail) throw FormatError(path + ": payload length mismatch");
    std::memcpy(ck.params.flat_view().data(), buf.data() + pos, count * sizeof(double));
    return ck;
}

}  // namespace deeppp
