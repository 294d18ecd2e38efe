// hysnet command-line interface: synthetic datasets, training, evaluation,
// ablations, gradient checking, and generated-weight analysis.
//
// Exit codes: 0 success, 1 assertion/check failure, 2 usage/config error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hysnet/evaluator.hpp"
#include "hysnet/gradcheck_suite.hpp"
#include "hysnet/manifest.hpp"
#include "hysnet/parallel.hpp"
#include "hysnet/patches.hpp"
#include "hysnet/pca.hpp"
#include "hysnet/phantom.hpp"
#include "hysnet/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hysnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

struct GlobalFlags {
    std::size_t threads = 0;  // 0 = keep pool default
    bool strict_deterministic = false;

    void apply() const {
        if (strict_deterministic)
            set_threads(1);
        else if (threads > 0)
            set_threads(threads);
    }
};

void write_run_config(const fs::path& where, const std::string& command, const json& flags) {
    json j{{"command", command}, {"flags", flags}};
    std::ofstream os(where);
    if (!os) throw ConfigError("cannot write run config to " + where.string());
    os << j.dump(2) << "\n";
}

std::pair<double, double> parse_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ConfigError("range \"" + text + "\" must look like LO:HI");
    try {
        const double lo = std::stod(text.substr(0, colon));
        const double hi = std::stod(text.substr(colon + 1));
        return {lo, hi};
    } catch (const std::exception&) {
        throw ConfigError("range \"" + text + "\" must hold two numbers");
    }
}

struct LoadedConfigs {
    ModelConfig model;
    TrainConfig train;
};

LoadedConfigs load_configs(const std::string& config_path) {
    LoadedConfigs out;
    out.model = desk_model_config();
    if (config_path.empty()) return out;
    std::ifstream is(config_path);
    if (!is) throw ConfigError("config file not found: " + config_path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + config_path + ": " + e.what());
    }
    if (j.contains("model")) out.model = j.at("model").get<ModelConfig>();
    if (j.contains("train")) out.train = j.at("train").get<TrainConfig>();
    return out;
}

std::string fmt(double v, const char* spec = "%.10g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    std::size_t count = 200;
    std::string classes = "blobs,lattice";
    std::string sigma_range = "0.05:0.4";
    std::uint64_t seed = 1;
    std::size_t dim = 32;
    double amplitude = 1.0;
    std::size_t blob_count = 8;
    double blob_radius = 4.0;
    std::size_t lattice_period = 8;
};

int run_synth(const SynthArgs& args) {
    const auto [lo, hi] = parse_range(args.sigma_range);
    if (lo > hi) throw ConfigError("sigma-range: LO must not exceed HI");
    if (!(lo > 0.0)) throw ConfigError("sigma-range: sigma must be positive");
    if (args.count == 0) throw ConfigError("count must be positive");

    std::vector<ContentClass> classes;
    std::string token;
    for (std::size_t i = 0; i <= args.classes.size(); ++i) {
        if (i == args.classes.size() || args.classes[i] == ',') {
            if (!token.empty()) classes.push_back(content_class_from(token));
            token.clear();
        } else {
            token += args.classes[i];
        }
    }
    if (classes.empty()) throw ConfigError("classes: need at least one of blobs,lattice");

    const fs::path dir(args.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string());

    Rng sigma_rng = Rng::substream(args.seed, "sigma");
    std::vector<ManifestRecord> records;
    json provenance = json::array();
    for (std::size_t i = 0; i < args.count; ++i) {
        PhantomSpec spec;
        spec.content = classes[i % classes.size()];
        spec.dims = {args.dim, args.dim, args.dim};
        spec.blob_count = args.blob_count;
        spec.blob_radius = args.blob_radius;
        spec.lattice_period = args.lattice_period;
        spec.amplitude = args.amplitude;
        spec.noise_sigma = sigma_rng.uniform(lo, hi);
        spec.seed = Rng::substream(args.seed, "volume", i).next_u64();

        auto result = generate_phantom(spec);
        char name[32];
        std::snprintf(name, sizeof name, "vol_%04zu.hvol", i);
        write_volume(dir / name, result.volume);
        records.push_back({name, result.score});
        provenance.push_back({{"path", name},
                              {"class", content_class_name(spec.content)},
                              {"sigma", spec.noise_sigma},
                              {"seed", spec.seed},
                              {"amplitude", spec.amplitude},
                              {"dim", args.dim},
                              {"blob_count", spec.blob_count},
                              {"blob_radius", spec.blob_radius},
                              {"lattice_period", spec.lattice_period},
                              {"score", result.score}});
    }
    write_manifest(dir / "manifest.csv", records);
    {
        std::ofstream os(dir / "provenance.json");
        os << provenance.dump(2) << "\n";
    }
    write_run_config(dir / "run_config.json", "synth",
                     json{{"out", args.out},
                          {"count", args.count},
                          {"classes", args.classes},
                          {"sigma_range", args.sigma_range},
                          {"seed", args.seed},
                          {"dim", args.dim},
                          {"amplitude", args.amplitude},
                          {"blob_count", args.blob_count},
                          {"blob_radius", args.blob_radius},
                          {"lattice_period", args.lattice_period}});
    std::cout << "wrote " << args.count << " volumes to " << dir.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string manifest;
    std::string val_manifest;
    std::string config;
    std::string mode = "hyper";
    std::string out;
    std::uint64_t seed = 0;  // 0 = keep config value
    std::size_t epochs = 0;  // 0 = keep config value
    bool quiet = false;
};

int run_train(const TrainArgs& args) {
    auto configs = load_configs(args.config);
    configs.train.mode = mode_from(args.mode);
    if (args.seed != 0) configs.train.seed = args.seed;
    if (args.epochs != 0) configs.train.epochs = args.epochs;

    const fs::path out_dir(args.out);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out_dir.string());

    const Manifest manifest = load_manifest(args.manifest);
    TrainResult result;
    if (!args.val_manifest.empty()) {
        // external validation manifest: merge records, train on the first set
        Manifest val = load_manifest(args.val_manifest);
        Manifest merged = manifest;
        std::vector<std::size_t> train_idx(manifest.records.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) train_idx[i] = i;
        std::vector<std::size_t> val_idx;
        for (std::size_t i = 0; i < val.records.size(); ++i) {
            val_idx.push_back(merged.records.size());
            merged.records.push_back({fs::absolute(val.resolved(i)).string(), val.records[i].score});
        }
        result = train(merged, configs.model, configs.train, &train_idx, &val_idx,
                       args.quiet ? nullptr : &std::cout);
    } else {
        result = train(manifest, configs.model, configs.train, nullptr, nullptr,
                       args.quiet ? nullptr : &std::cout);
        std::vector<ManifestRecord> train_records, val_records;
        for (std::size_t i : result.train_indices)
            train_records.push_back({fs::absolute(manifest.resolved(i)).string(),
                                     manifest.records[i].score});
        for (std::size_t i : result.val_indices)
            val_records.push_back({fs::absolute(manifest.resolved(i)).string(),
                                   manifest.records[i].score});
        write_manifest(out_dir / "train_split.csv", train_records);
        write_manifest(out_dir / "val_split.csv", val_records);
    }

    save_checkpoint(out_dir / "checkpoint_final.hckp", result.final_checkpoint);
    save_checkpoint(out_dir / "checkpoint_best.hckp", result.best_checkpoint);
    write_epoch_log_csv(out_dir / "train_log.csv", result.log);
    write_run_config(out_dir / "run_config.json", "train",
                     json{{"manifest", args.manifest},
                          {"val_manifest", args.val_manifest},
                          {"config", args.config},
                          {"mode", args.mode},
                          {"out", args.out},
                          {"model", configs.model},
                          {"train", configs.train}});
    if (!args.quiet)
        std::cout << "training done; best epoch " << result.best_epoch << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string manifest;
    std::string checkpoint;
    std::size_t patch = 0;   // 0 = from checkpoint train config
    std::size_t stride = 0;  // 0 = patch / 2
    std::string out;
};

int run_eval(const EvalArgs& args) {
    const Manifest manifest = load_manifest(args.manifest);
    const auto ckpt = load_checkpoint(args.checkpoint);
    auto model = model_from_checkpoint(ckpt);
    std::size_t patch = args.patch ? args.patch : checkpoint_patch_size(ckpt);
    if (patch == 0) throw ConfigError("eval: --patch required (checkpoint carries no patch size)");
    const std::size_t stride = args.stride ? args.stride : std::max<std::size_t>(1, patch / 2);

    auto eval = evaluate_manifest(manifest, model.config, model.params, patch, stride);

    const fs::path out(args.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    {
        std::ofstream os(out, std::ios::trunc);
        if (!os) throw ConfigError("cannot write " + out.string());
        os << "path,predicted,target\n";
        for (std::size_t i = 0; i < manifest.records.size(); ++i)
            os << manifest.records[i].path << ',' << fmt(eval.predicted[i]) << ','
               << fmt(eval.target[i]) << "\n";
    }
    {
        std::ofstream os(out.string() + ".metrics.csv", std::ios::trunc);
        os << "n,srocc,plcc\n"
           << eval.report.n << ',' << fmt(eval.report.srocc) << ',' << fmt(eval.report.plcc) << "\n";
    }
    write_run_config(out.string() + ".run.json", "eval",
                     json{{"manifest", args.manifest},
                          {"checkpoint", args.checkpoint},
                          {"patch", patch},
                          {"stride", stride},
                          {"out", args.out}});
    std::cout << "n=" << eval.report.n << " srocc=" << fmt(eval.report.srocc, "%.4f")
              << " plcc=" << fmt(eval.report.plcc, "%.4f") << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateArgs {
    std::string manifest;
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    bool quiet = false;
};

int run_ablate(const AblateArgs& args) {
    auto configs = load_configs(args.config);
    if (args.seed != 0) configs.train.seed = args.seed;
    if (args.epochs != 0) configs.train.epochs = args.epochs;

    const fs::path out_dir(args.out);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out_dir.string());

    const Manifest manifest = load_manifest(args.manifest);
    // shared data split: only the mode differs between the two runs
    const auto split =
        split_manifest(manifest.records.size(), 1.0 - configs.train.val_fraction, configs.train.seed);

    std::ofstream csv(out_dir / "ablation.csv", std::ios::trunc);
    csv << "mode,srocc,plcc\n";
    for (Mode mode : {Mode::hyper, Mode::fixed}) {
        TrainConfig tc = configs.train;
        tc.mode = mode;
        if (!args.quiet) std::cout << "=== mode " << mode_name(mode) << " ===\n";
        auto result = train(manifest, configs.model, tc, &split.train, &split.held_out,
                            args.quiet ? nullptr : &std::cout);
        const fs::path mode_dir = out_dir / mode_name(mode);
        fs::create_directories(mode_dir);
        save_checkpoint(mode_dir / "checkpoint_final.hckp", result.final_checkpoint);
        save_checkpoint(mode_dir / "checkpoint_best.hckp", result.best_checkpoint);
        write_epoch_log_csv(mode_dir / "train_log.csv", result.log);

        auto model = model_from_checkpoint(result.best_checkpoint);
        Manifest held;
        held.dir = manifest.dir;
        for (std::size_t i : split.held_out) held.records.push_back(manifest.records[i]);
        const std::size_t stride = std::max<std::size_t>(1, tc.patch_size / 2);
        auto eval = evaluate_manifest(held, model.config, model.params, tc.patch_size, stride);
        csv << mode_name(mode) << ',' << fmt(eval.report.srocc) << ',' << fmt(eval.report.plcc)
            << "\n";
        if (!args.quiet)
            std::cout << mode_name(mode) << ": held-out srocc=" << fmt(eval.report.srocc, "%.4f")
                      << " plcc=" << fmt(eval.report.plcc, "%.4f") << "\n";
    }
    write_run_config(out_dir / "run_config.json", "ablate",
                     json{{"manifest", args.manifest},
                          {"config", args.config},
                          {"out", args.out},
                          {"model", configs.model},
                          {"train", configs.train}});
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

int run_gradcheck(std::uint64_t seed, double h, double tol) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto reports = run_gradcheck_suite(seed, h, tol);
    bool all_pass = true;
    for (const auto& r : reports) {
        all_pass = all_pass && r.pass;
        std::printf("[%s] %-28s max_rel_err %.3e (%zu coords)\n", r.pass ? "PASS" : "FAIL",
                    r.name.c_str(), r.max_rel_err, r.coords);
        if (!r.pass)
            std::printf("       worst coord %zu: tape %.9g vs central-diff %.9g\n", r.worst_coord,
                        r.worst_ad, r.worst_fd);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%zu checks in %.2f s: %s\n", reports.size(), secs, all_pass ? "all passed" : "FAILURES");
    return all_pass ? kExitOk : kExitCheckFailure;
}

// ---------------------------------------------------------------------------
// weights-pca
// ---------------------------------------------------------------------------

struct PcaArgs {
    std::string manifest;
    std::string checkpoint;
    std::string provenance;
    std::string out;
    std::size_t patch = 0;
    std::size_t stride = 0;
    int layer = -1;  // -1 = full theta_x concatenation, 0..2 = one layer
};

int run_weights_pca(const PcaArgs& args) {
    const Manifest manifest = load_manifest(args.manifest);
    const auto ckpt = load_checkpoint(args.checkpoint);
    auto model = model_from_checkpoint(ckpt);
    if (model.mode != Mode::hyper)
        throw ConfigError("weights-pca: checkpoint is in fixed mode; no generated weights exist");

    const fs::path prov_path = args.provenance.empty()
                                   ? manifest.dir / "provenance.json"
                                   : fs::path(args.provenance);
    std::ifstream prov_is(prov_path);
    if (!prov_is) throw ConfigError("weights-pca: provenance file not found: " + prov_path.string());
    json provenance;
    try {
        provenance = json::parse(prov_is);
    } catch (const json::exception& e) {
        throw FormatError("weights-pca: bad provenance JSON: " + std::string(e.what()));
    }
    std::map<std::string, std::string> label_of;
    for (const auto& entry : provenance)
        label_of[entry.at("path").get<std::string>()] = entry.at("class").get<std::string>();

    std::size_t patch = args.patch ? args.patch : checkpoint_patch_size(ckpt);
    if (patch == 0) throw ConfigError("weights-pca: --patch required");
    const std::size_t stride = args.stride ? args.stride : std::max<std::size_t>(1, patch / 2);
    model.config.feature_extent(patch);

    auto plist = param_list(model.params);
    for (auto& t : plist) t.set_requires_grad(false);

    WeightCloud cloud;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        auto it = label_of.find(manifest.records[i].path);
        if (it == label_of.end())
            throw ConfigError("weights-pca: no content class for \"" + manifest.records[i].path +
                              "\" in " + prov_path.string());
        const Volume v = normalize(read_volume(manifest.resolved(i)));
        const auto grid = make_patch_grid(v.dims, patch, stride);
        auto tensor = patches_to_tensor<float>(v, {grid_center_position(grid)}, patch);
        auto feature = backbone_forward(tensor, model.config, model.params.backbone);
        auto gen = hyper_generate(feature, model.config, *model.params.hyper);
        const std::size_t layer = args.layer < 0 ? ModelConfig::kPredictorLayers
                                                 : static_cast<std::size_t>(args.layer);
        cloud.rows.push_back(gen.flat_row(0, layer));
        cloud.labels.push_back(it->second);
    }

    auto pca = pca_project(cloud.rows, 2);
    const fs::path out(args.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    {
        std::ofstream os(out, std::ios::trunc);
        if (!os) throw ConfigError("cannot write " + out.string());
        os << "label,pc1,pc2\n";
        for (std::size_t i = 0; i < cloud.rows.size(); ++i)
            os << cloud.labels[i] << ',' << fmt(pca.projection[i][0]) << ','
               << fmt(pca.projection[i][1]) << "\n";
    }
    write_run_config(out.string() + ".run.json", "weights-pca",
                     json{{"manifest", args.manifest},
                          {"checkpoint", args.checkpoint},
                          {"provenance", prov_path.string()},
                          {"patch", patch},
                          {"stride", stride},
                          {"out", args.out}});
    std::cout << "wrote " << cloud.rows.size() << " projected rows to " << out.string() << "\n";

    // stats line (refused for degenerate label sets, after the CSV is written)
    const auto stats = cluster_separation(cloud.rows, cloud.labels);
    std::printf("separation: within=%.6f between=%.6f (%s)\n", stats.within, stats.between,
                stats.between > stats.within ? "between > within" : "between <= within");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hysnet: content-adaptive 3D blind image quality assessment"};
    app.require_subcommand(1);

    GlobalFlags global;
    app.add_option("--threads", global.threads, "worker threads (default: min(4, hardware))");
    app.add_flag("--strict-deterministic", global.strict_deterministic,
                 "single-threaded, bit-reproducible execution");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic phantom dataset");
    synth_cmd->add_option("--out", synth.out, "output directory")->required();
    synth_cmd->add_option("--count", synth.count, "number of volumes");
    synth_cmd->add_option("--classes", synth.classes, "comma list: blobs,lattice");
    synth_cmd->add_option("--sigma-range", synth.sigma_range, "noise sigma LO:HI");
    synth_cmd->add_option("--seed", synth.seed, "master seed");
    synth_cmd->add_option("--dim", synth.dim, "cubic volume extent");
    synth_cmd->add_option("--amplitude", synth.amplitude, "signal amplitude");
    synth_cmd->add_option("--blob-count", synth.blob_count, "blobs per volume");
    synth_cmd->add_option("--blob-radius", synth.blob_radius, "blob Gaussian sigma");
    synth_cmd->add_option("--lattice-period", synth.lattice_period, "stripe cycle length");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train a model from a manifest");
    train_cmd->add_option("--manifest", train_args.manifest, "dataset manifest CSV")->required();
    train_cmd->add_option("--val-manifest", train_args.val_manifest,
                          "explicit validation manifest (otherwise a seeded split)");
    train_cmd->add_option("--config", train_args.config, "JSON config: {\"model\":..., \"train\":...}");
    train_cmd->add_option("--mode", train_args.mode, "hyper | fixed")
        ->check(CLI::IsMember({"hyper", "fixed"}));
    train_cmd->add_option("--out", train_args.out, "output directory")->required();
    train_cmd->add_option("--seed", train_args.seed, "override config seed");
    train_cmd->add_option("--epochs", train_args.epochs, "override config epochs");
    train_cmd->add_flag("--quiet", train_args.quiet, "suppress progress lines");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "grid-evaluate a checkpoint on a manifest");
    eval_cmd->add_option("--manifest", eval_args.manifest, "dataset manifest CSV")->required();
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "HCKP checkpoint")->required();
    eval_cmd->add_option("--patch", eval_args.patch, "patch extent (default: training value)");
    eval_cmd->add_option("--stride", eval_args.stride, "grid stride (default: patch/2)");
    eval_cmd->add_option("--out", eval_args.out, "per-volume CSV path")->required();

    AblateArgs ablate_args;
    auto* ablate_cmd = app.add_subcommand("ablate", "train hyper and fixed modes with shared seeds");
    ablate_cmd->add_option("--manifest", ablate_args.manifest, "dataset manifest CSV")->required();
    ablate_cmd->add_option("--config", ablate_args.config, "JSON config");
    ablate_cmd->add_option("--out", ablate_args.out, "output directory")->required();
    ablate_cmd->add_option("--seed", ablate_args.seed, "override config seed");
    ablate_cmd->add_option("--epochs", ablate_args.epochs, "override config epochs");
    ablate_cmd->add_flag("--quiet", ablate_args.quiet, "suppress progress lines");

    std::uint64_t gradcheck_seed = 1;
    double gradcheck_h = 1e-3, gradcheck_tol = 1e-4;
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference check of every op");
    gradcheck_cmd->add_option("--seed", gradcheck_seed, "input seed");
    gradcheck_cmd->add_option("--step", gradcheck_h, "central-difference step");
    gradcheck_cmd->add_option("--tol", gradcheck_tol, "max relative error");

    PcaArgs pca_args;
    auto* pca_cmd = app.add_subcommand("weights-pca", "PCA of generated predictor parameters");
    pca_cmd->add_option("--manifest", pca_args.manifest, "dataset manifest CSV")->required();
    pca_cmd->add_option("--checkpoint", pca_args.checkpoint, "HCKP checkpoint (hyper mode)")->required();
    pca_cmd->add_option("--provenance", pca_args.provenance,
                        "provenance JSON (default: provenance.json beside the manifest)");
    pca_cmd->add_option("--patch", pca_args.patch, "patch extent (default: training value)");
    pca_cmd->add_option("--stride", pca_args.stride, "grid stride (default: patch/2)");
    pca_cmd->add_option("--layer", pca_args.layer, "restrict to one predictor layer 0..2 (default: all)")
        ->check(CLI::Range(0, 2));
    pca_cmd->add_option("--out", pca_args.out, "label,pc1,pc2 CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        global.apply();
        if (synth_cmd->parsed()) return run_synth(synth);
        if (train_cmd->parsed()) return run_train(train_args);
        if (eval_cmd->parsed()) return run_eval(eval_args);
        if (ablate_cmd->parsed()) return run_ablate(ablate_args);
        if (gradcheck_cmd->parsed()) return run_gradcheck(gradcheck_seed, gradcheck_h, gradcheck_tol);
        if (pca_cmd->parsed()) return run_weights_pca(pca_args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailure;
    }
    return kExitUsage;
}
