#include "corn/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "corn/binio.hpp"
#include "corn/error.hpp"

namespace corn {

namespace {

constexpr char kCheckpointMagic[4] = {'C', 'K', 'P', 'T'};
constexpr const char* kConfigName = "config.encoder";

}  // namespace

void write_tensors(const NamedTensors& tensors, std::ostream& out) {
    using namespace binio;
    out.write(kCheckpointMagic, 4);
    put_u32(out, kCheckpointVersion);
    for (const auto& [name, t] : tensors) {
        if (name.size() > UINT16_MAX || t.shape.size() > UINT8_MAX) {
            throw Error(ErrorCode::ShapeMismatch, "tensor name or rank too large: " + name);
        }
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u8(out, static_cast<std::uint8_t>(t.shape.size()));
        for (auto d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : t.value) put_f64(out, v);
    }
    if (!out) throw Error(ErrorCode::Io, "checkpoint write failed");
}

void write_tensors(const NamedTensors& tensors, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    write_tensors(tensors, out);
}

NamedTensors read_tensors(std::istream& in) {
    binio::Reader header(in, ErrorCode::BadMagic);
    char magic[4];
    header.bytes(magic, 4, "magic");
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw Error(ErrorCode::BadMagic, "not a checkpoint");
    binio::Reader rd(in, ErrorCode::TruncatedRecord);
    const std::uint32_t version = rd.u32("version");
    if (version != kCheckpointVersion) {
        throw Error(ErrorCode::UnsupportedVersion, "checkpoint version " + std::to_string(version));
    }
    NamedTensors out;
    while (!rd.at_eof()) {
        const std::uint16_t len = rd.u16("name length");
        std::string name(len, '\0');
        rd.bytes(name.data(), len, "name");
        const std::uint8_t rank = rd.u8("rank");
        std::vector<std::size_t> dims(rank);
        for (auto& d : dims) d = rd.u32("dims");
        nn::Tensor t(dims);
        for (auto& v : t.value) v = rd.f64("values");
        out.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

NamedTensors read_tensors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return read_tensors(in);
}

NamedTensors encoder_tensors(const EncoderParams& params) {
    const auto& c = params.cfg;
    nn::Tensor cfg({10});
    cfg.value = {double(c.d_model),        double(c.n_layers),         double(c.n_heads),
                 double(c.ffn_dim),        double(c.hand_dim),         double(c.decoder_hidden),
                 double(c.patch.n_points), double(c.patch.n_patches),  double(c.patch.patch_size),
                 c.input_scale};
    NamedTensors out;
    out.emplace_back(kConfigName, std::move(cfg));
    params.for_each([&](const std::string& name, const nn::Tensor& t) {
        nn::Tensor copy(t.shape);
        copy.value = t.value;
        out.emplace_back(name, std::move(copy));
    });
    return out;
}

EncoderParams encoder_from_tensors(const NamedTensors& tensors) {
    std::map<std::string, const nn::Tensor*> by_name;
    for (const auto& [name, t] : tensors) by_name[name] = &t;
    auto it = by_name.find(kConfigName);
    if (it == by_name.end() || it->second->size() != 10) {
        throw Error(ErrorCode::ShapeMismatch, "checkpoint lacks a valid encoder config");
    }
    const auto& v = it->second->value;
    auto count = [](double x) {
        if (!(x >= 0.0) || x != std::floor(x)) throw Error(ErrorCode::ShapeMismatch, "bad config entry");
        return static_cast<std::size_t>(x);
    };
    EncoderConfig cfg;
    cfg.d_model = count(v[0]);
    cfg.n_layers = count(v[1]);
    cfg.n_heads = count(v[2]);
    cfg.ffn_dim = count(v[3]);
    cfg.hand_dim = count(v[4]);
    cfg.decoder_hidden = count(v[5]);
    cfg.patch.n_points = count(v[6]);
    cfg.patch.n_patches = count(v[7]);
    cfg.patch.patch_size = count(v[8]);
    cfg.input_scale = v[9];
    EncoderParams params(cfg);
    params.for_each([&](const std::string& name, nn::Tensor& t) {
        auto found = by_name.find(name);
        if (found == by_name.end()) throw Error(ErrorCode::ShapeMismatch, "checkpoint missing tensor " + name);
        if (found->second->shape != t.shape) throw Error(ErrorCode::ShapeMismatch, "shape mismatch for " + name);
        t.value = found->second->value;
    });
    return params;
}

void save_encoder(const EncoderParams& params, const std::filesystem::path& path) {
    write_tensors(encoder_tensors(params), path);
}

EncoderParams load_encoder(const std::filesystem::path& path) { return encoder_from_tensors(read_tensors(path)); }

}  // namespace corn
