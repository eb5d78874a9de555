#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "corn/contactgen.hpp"
#include "corn/encoder.hpp"
#include "corn/percept.hpp"
#include "corn/reward.hpp"
#include "corn/train.hpp"

namespace corn {

// Every tunable in one place. Files use flat dotted keys such as
// "train.epochs" or "track.mode"; unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed = 0;

    DataGenConfig data;
    std::size_t data_count = 1000;
    unsigned data_jobs = 0;  // 0 = logical cores

    EncoderConfig encoder;
    TrainConfig train;

    TrackerConfig track;
    bool track_segment = false;
    SegmentationConfig segment;

    RewardParams reward;
    double poses_margin_min = 0.002;

    // Propagates the seed and shared sizes into the module configs, then
    // validates each of them.
    void finalize();

    static std::vector<std::string> keys();
};

// Applies the keys of one JSON object on top of cfg. Throws InvalidConfig on
// unknown keys or wrongly typed values, Parse on malformed JSON.
void apply_config_json(RunConfig& cfg, std::string_view json_text);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

}  // namespace corn
