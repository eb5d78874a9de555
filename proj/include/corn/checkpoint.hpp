#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "corn/encoder.hpp"
#include "corn/nn.hpp"

namespace corn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, nn::Tensor>>;

// "CKPT", u32 version, then tensors until end of file:
// u16 name length, name, u8 rank, rank x u32 dims, f64 values.
void write_tensors(const NamedTensors& tensors, std::ostream& out);
void write_tensors(const NamedTensors& tensors, const std::filesystem::path& path);
NamedTensors read_tensors(std::istream& in);
NamedTensors read_tensors(const std::filesystem::path& path);

// Encoder tensors plus a "config.encoder" record of the architecture.
NamedTensors encoder_tensors(const EncoderParams& params);
EncoderParams encoder_from_tensors(const NamedTensors& tensors);

void save_encoder(const EncoderParams& params, const std::filesystem::path& path);
EncoderParams load_encoder(const std::filesystem::path& path);

}  // namespace corn
