#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "paat/kvfile.hpp"
#include "paat/model.hpp"

namespace paat {

static_assert(std::endian::native == std::endian::little,
              "checkpoint i/o assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'P', 'A', 'A', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void writeRaw(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T readRaw(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
        throw FormatError("checkpoint: truncated file");
    }
    return v;
}

}  // namespace

void saveCheckpoint(const PaatModel& model, const std::string& path,
                    const std::map<std::string, std::string>& extras) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("checkpoint: cannot write " + path);

    const auto refs = model.tensors();
    out.write(kMagic, sizeof(kMagic));
    writeRaw<std::uint32_t>(out, kVersion);
    writeRaw<std::uint32_t>(out, static_cast<std::uint32_t>(refs.size()));
    for (const TensorRef& ref : refs) {
        writeRaw<std::uint16_t>(out, static_cast<std::uint16_t>(ref.name.size()));
        out.write(ref.name.data(), static_cast<std::streamsize>(ref.name.size()));
        writeRaw<std::uint8_t>(out, 2);
        writeRaw<std::uint64_t>(out, ref.tensor->rows());
        writeRaw<std::uint64_t>(out, ref.tensor->cols());
        out.write(reinterpret_cast<const char*>(ref.tensor->data()),
                  static_cast<std::streamsize>(ref.tensor->size() * sizeof(double)));
    }

    std::map<std::string, std::string> kv = model.config().toKeyValues();
    for (const auto& [k, v] : extras) {
        if (kv.count(k)) throw ContractError("checkpoint: extra key collides with config: " + k);
        kv[k] = v;
    }
    const std::string block = formatKeyValues(kv);
    writeRaw<std::uint32_t>(out, static_cast<std::uint32_t>(block.size()));
    out.write(block.data(), static_cast<std::streamsize>(block.size()));
    if (!out) throw InputError("checkpoint: write failed for " + path);
}

LoadedCheckpoint loadCheckpoint(const std::string& path, const PaatConfig* expect) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("checkpoint: cannot read " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("checkpoint: bad magic bytes in " + path);
    }
    const auto version = readRaw<std::uint32_t>(in);
    if (version != kVersion) {
        throw FormatError("checkpoint: unsupported format version " + std::to_string(version));
    }
    const auto count = readRaw<std::uint32_t>(in);

    std::unordered_map<std::string, Matrix> loaded;
    for (std::uint32_t t = 0; t < count; ++t) {
        const auto nameLen = readRaw<std::uint16_t>(in);
        std::string name(nameLen, '\0');
        in.read(name.data(), nameLen);
        if (in.gcount() != nameLen) throw FormatError("checkpoint: truncated file");
        const auto rank = readRaw<std::uint8_t>(in);
        if (rank != 2) throw FormatError("checkpoint: tensor " + name + " has rank " +
                                         std::to_string(rank) + ", expected 2");
        const auto rows = readRaw<std::uint64_t>(in);
        const auto cols = readRaw<std::uint64_t>(in);
        Matrix m(rows, cols);
        const auto bytes = static_cast<std::streamsize>(m.size() * sizeof(double));
        in.read(reinterpret_cast<char*>(m.data()), bytes);
        if (in.gcount() != bytes) throw FormatError("checkpoint: truncated tensor " + name);
        if (!loaded.emplace(name, std::move(m)).second) {
            throw FormatError("checkpoint: duplicate tensor " + name);
        }
    }

    const auto configLen = readRaw<std::uint32_t>(in);
    std::string block(configLen, '\0');
    in.read(block.data(), configLen);
    if (in.gcount() != configLen) throw FormatError("checkpoint: truncated config block");

    const auto kv = parseKeyValues(block);
    const PaatConfig embedded = PaatConfig::fromKeyValues(kv);
    const PaatConfig& target = expect ? *expect : embedded;

    LoadedCheckpoint result;
    result.model = PaatModel::allocate(target);
    std::size_t consumed = 0;
    for (TensorRef& ref : result.model.tensors()) {
        auto it = loaded.find(ref.name);
        if (it == loaded.end()) {
            throw FormatError("checkpoint: missing tensor " + ref.name +
                              " required by the configured model");
        }
        if (!it->second.sameShape(*ref.tensor)) {
            throw FormatError("checkpoint: shape disagreement for " + ref.name +
                              ": file has " + it->second.shapeStr() + ", config needs " +
                              ref.tensor->shapeStr());
        }
        *ref.tensor = std::move(it->second);
        ++consumed;
    }
    if (consumed != loaded.size()) {
        for (const auto& [name, m] : loaded) {
            bool known = false;
            for (const TensorRef& ref : result.model.tensors())
                if (ref.name == name) known = true;
            if (!known) throw FormatError("checkpoint: unexpected tensor " + name);
        }
    }

    const auto knownKeys = PaatConfig().toKeyValues();
    for (const auto& [k, v] : kv) {
        if (!knownKeys.count(k)) result.extras[k] = v;
    }
    return result;
}

}  // namespace paat
