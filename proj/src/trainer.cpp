#include "hysnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "hysnet/metrics.hpp"
#include "hysnet/patches.hpp"

namespace hysnet {

void TrainConfig::validate() const {
    if (epochs == 0 || batch_size == 0 || patch_size == 0 || patches_per_volume == 0 ||
        lr_halve_period == 0)
        throw ConfigError("train config: counts and periods must be positive");
    if (!(base_lr >= 0.0)) throw ConfigError("train config: base_lr must be non-negative");
    if (!(val_fraction > 0.0) || !(val_fraction < 1.0))
        throw ConfigError("train config: val_fraction must be in (0, 1)");
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
    j = nlohmann::json{{"epochs", cfg.epochs},
                       {"base_lr", cfg.base_lr},
                       {"lr_halve_period", cfg.lr_halve_period},
                       {"batch_size", cfg.batch_size},
                       {"seed", cfg.seed},
                       {"mode", mode_name(cfg.mode)},
                       {"patch_size", cfg.patch_size},
                       {"patches_per_volume", cfg.patches_per_volume},
                       {"val_fraction", cfg.val_fraction}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
    const TrainConfig defaults;
    try {
        cfg.epochs = j.value("epochs", defaults.epochs);
        cfg.base_lr = j.value("base_lr", defaults.base_lr);
        cfg.lr_halve_period = j.value("lr_halve_period", defaults.lr_halve_period);
        cfg.batch_size = j.value("batch_size", defaults.batch_size);
        cfg.seed = j.value("seed", defaults.seed);
        cfg.mode = mode_from(j.value("mode", std::string("hyper")));
        cfg.patch_size = j.value("patch_size", defaults.patch_size);
        cfg.patches_per_volume = j.value("patches_per_volume", defaults.patches_per_volume);
        cfg.val_fraction = j.value("val_fraction", defaults.val_fraction);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: malformed train config JSON: ") + e.what());
    }
}

namespace {

Checkpoint snapshot(ModelParams<float>& params, const ModelConfig& model_cfg,
                    const TrainConfig& cfg, std::size_t epoch) {
    Checkpoint ckpt;
    ckpt.arrays = params_to_arrays(params);
    ckpt.meta = nlohmann::json{{"model", model_cfg},
                               {"train", cfg},
                               {"epoch", epoch},
                               {"mode", mode_name(cfg.mode)}};
    return ckpt;
}

std::array<std::size_t, 3> center_position(const std::array<std::size_t, 3>& dims, std::size_t p) {
    return {(dims[0] - p) / 2, (dims[1] - p) / 2, (dims[2] - p) / 2};
}

}  // namespace

TrainResult train(const Manifest& manifest, const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const std::vector<std::size_t>* train_idx, const std::vector<std::size_t>* val_idx,
                  std::ostream* progress) {
    cfg.validate();
    if (manifest.records.empty()) throw ContractError("train: manifest is empty");
    const std::size_t p = cfg.patch_size;

    TrainResult result;
    if (train_idx) {
        result.train_indices = *train_idx;
        if (val_idx) result.val_indices = *val_idx;
    } else {
        const auto split = split_manifest(manifest.records.size(), 1.0 - cfg.val_fraction, cfg.seed);
        result.train_indices = split.train;
        result.val_indices = split.held_out;
    }
    if (result.train_indices.empty()) throw ContractError("train: no training volumes");

    // Preload every referenced volume; each must admit the patch size.
    std::vector<Volume> volumes(manifest.records.size());
    std::vector<bool> used(manifest.records.size(), false);
    for (std::size_t i : result.train_indices) used[i] = true;
    for (std::size_t i : result.val_indices) used[i] = true;
    for (std::size_t i = 0; i < volumes.size(); ++i) {
        if (!used[i]) continue;
        volumes[i] = normalize(read_volume(manifest.resolved(i)));
        for (int a = 0; a < 3; ++a)
            if (volumes[i].dims[a] < p)
                throw ConfigError("train: volume " + manifest.records[i].path + " extent " +
                                  std::to_string(volumes[i].dims[a]) + " is smaller than patch " +
                                  std::to_string(p));
    }

    ModelParams<float> params = init_model_params<float>(model_cfg, cfg.mode);
    auto plist = param_list(params);
    auto state = OptimState<float>::init(plist);

    double best_srocc = -std::numeric_limits<double>::infinity();
    result.best_epoch = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(epoch, cfg.base_lr, cfg.lr_halve_period);

        // Epoch sample plan: shuffled volume order, then per-volume patches.
        std::vector<std::size_t> order = result.train_indices;
        Rng shuffle_rng = Rng::substream(cfg.seed, "shuffle", epoch);
        shuffle_rng.shuffle(order);
        Rng patch_rng = Rng::substream(cfg.seed, "patches", epoch);
        std::vector<std::pair<std::size_t, std::array<std::size_t, 3>>> plan;
        plan.reserve(order.size() * cfg.patches_per_volume);
        for (std::size_t vi : order) {
            const auto positions = sample_random_patch_positions(volumes[vi].dims, p,
                                                                 cfg.patches_per_volume, patch_rng);
            for (const auto& pos : positions) plan.emplace_back(vi, pos);
        }
        // mix patches across volumes so batches carry more than one target
        Rng mix_rng = Rng::substream(cfg.seed, "mix", epoch);
        mix_rng.shuffle(plan);

        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t start = 0; start < plan.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(plan.size(), start + cfg.batch_size);
            const std::size_t bn = end - start;
            std::vector<float> batch_data(bn * p * p * p);
            std::vector<float> batch_target(bn);
            for (std::size_t b = 0; b < bn; ++b) {
                const auto& [vi, pos] = plan[start + b];
                const Volume& vol = volumes[vi];
                float* dst = batch_data.data() + b * p * p * p;
                for (std::size_t z = 0; z < p; ++z)
                    for (std::size_t y = 0; y < p; ++y) {
                        const float* src = vol.voxels.data() + vol.index(pos[0], pos[1] + y, pos[2] + z);
                        std::copy(src, src + p, dst + (z * p + y) * p);
                    }
                batch_target[b] = static_cast<float>(manifest.records[vi].score);
            }
            try {
                TensorF patch = TensorF::from_data({bn, 1, p, p, p}, std::move(batch_data));
                TensorF target = TensorF::from_data({bn}, std::move(batch_target));
                TensorF pred = hysnet_forward(patch, model_cfg, params);
                TensorF loss = l1_loss(pred, target);
                backward(loss);
                adam_step(plist, state, lr);
                zero_grads(plist);
                loss_sum += static_cast<double>(loss.item()) * static_cast<double>(bn);
                loss_count += bn;
            } catch (const NumericError& e) {
                throw NumericError("train: epoch " + std::to_string(epoch) + " step " +
                                   std::to_string(start / cfg.batch_size) + ": " + e.what());
            }
        }

        EpochLog log;
        log.epoch = epoch;
        log.lr = lr;
        log.train_l1 = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
        log.val_srocc = std::numeric_limits<double>::quiet_NaN();
        log.val_plcc = std::numeric_limits<double>::quiet_NaN();

        if (!result.val_indices.empty()) {
            // Centered patch per held-out volume; the full grid is reserved
            // for final evaluation.
            std::vector<double> pred, target;
            pred.reserve(result.val_indices.size());
            for (std::size_t vi : result.val_indices) {
                const Volume& vol = volumes[vi];
                auto patch = patches_to_tensor<float>(vol, {center_position(vol.dims, p)}, p);
                for (auto& t : plist) t.set_requires_grad(false);
                TensorF score = hysnet_forward(patch, model_cfg, params);
                for (auto& t : plist) t.set_requires_grad(true);
                pred.push_back(static_cast<double>(score.data()[0]));
                target.push_back(manifest.records[vi].score);
            }
            try {
                const auto report = metric_report(pred, target);
                log.val_srocc = report.srocc;
                log.val_plcc = report.plcc;
            } catch (const Error&) {
                // degenerate validation set; metrics stay NaN
            }
            if (log.val_srocc > best_srocc) {
                best_srocc = log.val_srocc;
                result.best_epoch = epoch;
                result.best_checkpoint = snapshot(params, model_cfg, cfg, epoch);
            }
        }
        result.log.push_back(log);
        if (progress) {
            char line[160];
            std::snprintf(line, sizeof line, "epoch %3zu  lr %.3e  train_l1 %.5f  val_srocc %.4f  val_plcc %.4f\n",
                          epoch, lr, log.train_l1, log.val_srocc, log.val_plcc);
            (*progress) << line << std::flush;
        }
    }

    result.final_checkpoint = snapshot(params, model_cfg, cfg, cfg.epochs);
    if (result.best_checkpoint.arrays.empty()) {
        result.best_checkpoint = result.final_checkpoint;
        result.best_epoch = cfg.epochs;
    }
    return result;
}

void write_epoch_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("train log: cannot open " + path.string() + " for writing");
    os << "epoch,lr,train_l1,val_srocc,val_plcc\n";
    char buf[200];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g\n", e.epoch, e.lr, e.train_l1,
                      e.val_srocc, e.val_plcc);
        os << buf;
    }
    if (!os) throw FormatError("train log: write failed for " + path.string());
}

}  // namespace hysnet
