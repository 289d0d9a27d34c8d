#include "fusedet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace fusedet {

namespace {

constexpr char kMagic[4] = {'F', 'D', 'E', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("checkpoint: truncated u32");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw DataError("checkpoint: truncated f64");
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_block(std::ostream& out, const std::string& name, const std::vector<int>& shape,
                 const std::vector<double>& data) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<uint32_t>(shape.size()));
    size_t expect = 1;
    for (int d : shape) {
        put_u32(out, static_cast<uint32_t>(d));
        expect *= static_cast<size_t>(d);
    }
    if (expect != data.size()) throw DataError("checkpoint: shape/data mismatch for " + name);
    for (double v : data) put_f64(out, v);
}

void write_scalar(std::ostream& out, const std::string& name, double v) {
    write_block(out, name, {1}, {v});
}

struct Block {
    std::vector<int> shape;
    std::vector<double> data;
};

std::map<std::string, Block> read_blocks(std::istream& in) {
    std::map<std::string, Block> blocks;
    while (true) {
        in.peek();
        if (in.eof()) break;
        const uint32_t nameLen = get_u32(in);
        if (nameLen == 0 || nameLen > 4096) throw DataError("checkpoint: bad name length");
        std::string name(nameLen, '\0');
        in.read(name.data(), nameLen);
        if (!in) throw DataError("checkpoint: truncated name");
        const uint32_t rank = get_u32(in);
        if (rank > 8) throw DataError("checkpoint: bad rank");
        Block b;
        size_t count = 1;
        for (uint32_t i = 0; i < rank; ++i) {
            const uint32_t d = get_u32(in);
            b.shape.push_back(static_cast<int>(d));
            count *= d;
        }
        if (count > (1u << 28)) throw DataError("checkpoint: block too large");
        b.data.resize(count);
        for (size_t i = 0; i < count; ++i) b.data[i] = get_f64(in);
        blocks.emplace(std::move(name), std::move(b));
    }
    return blocks;
}

}  // namespace

void save_checkpoint(const std::string& path, const DetectorModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot write " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);

    write_scalar(out, "meta/num_classes", model.cfg.numClasses);
    write_scalar(out, "meta/stem_channels", model.cfg.stemChannels);
    write_scalar(out, "meta/backbone_channels", model.cfg.backboneChannels);
    write_scalar(out, "meta/mlp_reduction", model.cfg.mlpReduction);
    write_scalar(out, "meta/enable_cbam", model.cfg.enableCbam ? 1.0 : 0.0);
    write_scalar(out, "meta/enable_fusion", model.cfg.enableFusion ? 1.0 : 0.0);
    write_scalar(out, "meta/modality", static_cast<double>(model.cfg.modality));

    for (const auto& p : model.parameters()) write_block(out, p.name, p.shape, *p.data);
    if (!out) throw DataError("checkpoint: write failed for " + path);
}

DetectorModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("checkpoint: bad magic in " + path);
    const uint32_t version = get_u32(in);
    if (version != kVersion) throw DataError("checkpoint: unsupported format version");

    auto blocks = read_blocks(in);
    auto scalar = [&blocks, &path](const std::string& name) {
        auto it = blocks.find(name);
        if (it == blocks.end()) throw DataError("checkpoint: missing " + name + " in " + path);
        return it->second.data.at(0);
    };

    ModelConfig cfg;
    cfg.numClasses = static_cast<int>(scalar("meta/num_classes"));
    cfg.stemChannels = static_cast<int>(scalar("meta/stem_channels"));
    cfg.backboneChannels = static_cast<int>(scalar("meta/backbone_channels"));
    cfg.mlpReduction = static_cast<int>(scalar("meta/mlp_reduction"));
    cfg.enableCbam = scalar("meta/enable_cbam") != 0.0;
    cfg.enableFusion = scalar("meta/enable_fusion") != 0.0;
    cfg.modality = static_cast<Modality>(static_cast<int>(scalar("meta/modality")));

    Rng rng(0);
    DetectorModel model = DetectorModel::init(cfg, rng);
    for (auto& p : model.parameters()) {
        auto it = blocks.find(p.name);
        if (it == blocks.end()) throw DataError("checkpoint: missing block " + p.name);
        if (it->second.shape != p.shape) throw DataError("checkpoint: shape mismatch " + p.name);
        *p.data = it->second.data;
    }
    return model;
}

}  // namespace fusedet
