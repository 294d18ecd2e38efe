#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "hysnet/model.hpp"

namespace hysnet {

// Checkpoint container, little-endian:
//   magic "HCKP" | version u32 = 1 | count u32
//   per array, name-sorted: name_len u32 | name | rank u32 | dims u32 x rank | f32 payload
//   json_len u32 | UTF-8 JSON (model/train configs, epoch, mode)
struct CheckpointArray {
    std::vector<std::size_t> dims;
    std::vector<float> values;
};

struct Checkpoint {
    std::map<std::string, CheckpointArray> arrays;  // map keeps name order canonical
    nlohmann::json meta;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ModelConfig <-> JSON (field names mirror the config struct).
void to_json(nlohmann::json& j, const ModelConfig& cfg);
void from_json(const nlohmann::json& j, ModelConfig& cfg);

// Snapshot of the current parameter values.
std::map<std::string, CheckpointArray> params_to_arrays(ModelParams<float>& params);

// Result of reconstructing a model from a checkpoint.
struct LoadedModel {
    ModelConfig config;
    Mode mode = Mode::hyper;
    ModelParams<float> params;
};

// Rebuilds parameters from a checkpoint, validating every array name and
// shape against the stored ModelConfig. Shape or name mismatches raise a
// FormatError listing all offenders.
LoadedModel model_from_checkpoint(const Checkpoint& ckpt);

// Patch size recorded in the checkpoint's train config, or 0 when absent.
std::size_t checkpoint_patch_size(const Checkpoint& ckpt);

Mode mode_from(const std::string& name);

}  // namespace hysnet
