#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "hysnet/checkpoint.hpp"
#include "hysnet/manifest.hpp"
#include "hysnet/model.hpp"
#include "hysnet/optim.hpp"
#include "hysnet/volume.hpp"

namespace hysnet {

struct TrainConfig {
    std::size_t epochs = 50;
    double base_lr = 1e-4;
    std::size_t lr_halve_period = 10;  // epochs between halvings
    std::size_t batch_size = 4;
    std::uint64_t seed = 1;
    Mode mode = Mode::hyper;
    std::size_t patch_size = 16;
    std::size_t patches_per_volume = 4;
    double val_fraction = 0.5;  // held out when no explicit split is given

    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

struct EpochLog {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_l1 = 0.0;
    double val_srocc = 0.0;  // NaN when validation is unavailable
    double val_plcc = 0.0;
};

struct TrainResult {
    Checkpoint final_checkpoint;
    Checkpoint best_checkpoint;  // highest validation SROCC (final when no validation)
    std::size_t best_epoch = 0;
    std::vector<EpochLog> log;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> val_indices;
};

// L1 training of the selected mode per the recipe: per epoch, shuffle the
// training volumes, sample patches_per_volume random patches from each,
// batch, forward, L1, backward, Adam with lr_at(epoch). Validation scores
// each held-out volume on its centered patch. Explicit index sets override
// the internal seeded split.
TrainResult train(const Manifest& manifest, const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const std::vector<std::size_t>* train_idx = nullptr,
                  const std::vector<std::size_t>* val_idx = nullptr,
                  std::ostream* progress = nullptr);

void write_epoch_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log);

}  // namespace hysnet
