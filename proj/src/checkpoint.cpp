#include "hysnet/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "hysnet/errors.hpp"

namespace hysnet {

namespace {

constexpr char kMagic[4] = {'H', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is, const char* what) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw FormatError(std::string("checkpoint: truncated while reading ") + what);
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("checkpoint: cannot open " + path.string() + " for writing");
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(ckpt.arrays.size()));
    for (const auto& [name, arr] : ckpt.arrays) {
        if (numel_of(Dims(arr.dims.begin(), arr.dims.end())) != arr.values.size())
            throw ContractError("checkpoint: dims/values mismatch for array \"" + name + "\"");
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(os, static_cast<std::uint32_t>(arr.dims.size()));
        for (std::size_t d : arr.dims) write_u32(os, static_cast<std::uint32_t>(d));
        os.write(reinterpret_cast<const char*>(arr.values.data()),
                 static_cast<std::streamsize>(arr.values.size() * sizeof(float)));
    }
    const std::string json = ckpt.meta.dump();
    write_u32(os, static_cast<std::uint32_t>(json.size()));
    os.write(json.data(), static_cast<std::streamsize>(json.size()));
    if (!os) throw FormatError("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("checkpoint: cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("checkpoint: bad magic in " + path.string());
    const std::uint32_t version = read_u32(is, "version");
    if (version != kVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    const std::uint32_t count = read_u32(is, "array count");

    Checkpoint ckpt;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(is, "name length");
        if (name_len == 0 || name_len > (1u << 20))
            throw FormatError("checkpoint: corrupt name length " + std::to_string(name_len));
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw FormatError("checkpoint: truncated name");
        const std::uint32_t rank = read_u32(is, "rank");
        if (rank > 8) throw FormatError("checkpoint: corrupt rank " + std::to_string(rank));
        CheckpointArray arr;
        std::size_t numel = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            const std::uint32_t d = read_u32(is, "extent");
            if (d == 0) throw FormatError("checkpoint: zero extent in array \"" + name + "\"");
            arr.dims.push_back(d);
            numel *= d;
        }
        if (numel > (std::size_t(1) << 31))
            throw FormatError("checkpoint: corrupt extents in array \"" + name + "\"");
        arr.values.resize(numel);
        is.read(reinterpret_cast<char*>(arr.values.data()),
                static_cast<std::streamsize>(numel * sizeof(float)));
        if (static_cast<std::size_t>(is.gcount()) != numel * sizeof(float))
            throw FormatError("checkpoint: truncated payload in array \"" + name + "\"");
        if (!ckpt.arrays.emplace(std::move(name), std::move(arr)).second)
            throw FormatError("checkpoint: duplicate array name");
    }
    const std::uint32_t json_len = read_u32(is, "json length");
    std::string json(json_len, '\0');
    is.read(json.data(), json_len);
    if (static_cast<std::size_t>(is.gcount()) != json_len)
        throw FormatError("checkpoint: truncated config block (length field says " +
                          std::to_string(json_len) + " bytes)");
    is.peek();
    if (!is.eof()) throw FormatError("checkpoint: trailing bytes in " + path.string());
    try {
        ckpt.meta = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: invalid config JSON: ") + e.what());
    }
    return ckpt;
}

// ---------------------------------------------------------------------------
// config JSON
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const ModelConfig& cfg) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : cfg.backbone.stages)
        stages.push_back({{"channels", s.channels}, {"blocks", s.blocks}, {"stride", s.stride}});
    j = nlohmann::json{
        {"backbone",
         {{"stem_channels", cfg.backbone.stem_channels},
          {"stem_kernel", cfg.backbone.stem_kernel},
          {"stem_stride", cfg.backbone.stem_stride},
          {"stages", stages}}},
        {"norm_mode", cfg.norm_mode == NormMode::group ? "group" : "none"},
        {"norm_group_cap", cfg.norm_group_cap},
        {"norm_eps", cfg.norm_eps},
        {"predictor_dims", cfg.predictor_dims},
        {"hyper_branch", {{"reduction", cfg.hyper_branch.reduction}, {"hidden", cfg.hyper_branch.hidden}}},
        {"dtype", dtype_name(cfg.dtype)},
        {"init_seed", cfg.init_seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& cfg) {
    const ModelConfig defaults = desk_model_config();
    cfg = defaults;
    try {
        if (j.contains("backbone")) {
            const auto& b = j.at("backbone");
            cfg.backbone.stem_channels = b.value("stem_channels", defaults.backbone.stem_channels);
            cfg.backbone.stem_kernel = b.value("stem_kernel", defaults.backbone.stem_kernel);
            cfg.backbone.stem_stride = b.value("stem_stride", defaults.backbone.stem_stride);
            if (b.contains("stages")) {
                cfg.backbone.stages.clear();
                for (const auto& s : b.at("stages"))
                    cfg.backbone.stages.push_back({s.value("channels", std::size_t(8)),
                                                   s.value("blocks", std::size_t(1)),
                                                   s.value("stride", std::size_t(1))});
            }
        }
        const std::string norm = j.value("norm_mode", std::string("group"));
        if (norm == "group")
            cfg.norm_mode = NormMode::group;
        else if (norm == "none")
            cfg.norm_mode = NormMode::none;
        else
            throw ConfigError("config: unknown norm_mode \"" + norm + "\"");
        cfg.norm_group_cap = j.value("norm_group_cap", defaults.norm_group_cap);
        cfg.norm_eps = j.value("norm_eps", defaults.norm_eps);
        cfg.predictor_dims = j.value("predictor_dims", defaults.predictor_dims);
        if (j.contains("hyper_branch")) {
            const auto& h = j.at("hyper_branch");
            cfg.hyper_branch.reduction = h.value("reduction", defaults.hyper_branch.reduction);
            cfg.hyper_branch.hidden = h.value("hidden", defaults.hyper_branch.hidden);
        }
        const std::string dt = j.value("dtype", std::string("f32"));
        if (dt == "f32")
            cfg.dtype = Dtype::f32;
        else if (dt == "f64")
            cfg.dtype = Dtype::f64;
        else
            throw ConfigError("config: unknown dtype \"" + dt + "\"");
        cfg.init_seed = j.value("init_seed", defaults.init_seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: malformed model config JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// parameters <-> arrays
// ---------------------------------------------------------------------------

std::map<std::string, CheckpointArray> params_to_arrays(ModelParams<float>& params) {
    std::map<std::string, CheckpointArray> arrays;
    visit_params(params, [&](const std::string& name, Tensor<float>& t) {
        CheckpointArray arr;
        arr.dims.assign(t.dims().begin(), t.dims().end());
        arr.values.assign(t.data().begin(), t.data().end());
        if (!arrays.emplace(name, std::move(arr)).second)
            throw ContractError("checkpoint: duplicate parameter name \"" + name + "\"");
    });
    return arrays;
}

Mode mode_from(const std::string& name) {
    if (name == "hyper") return Mode::hyper;
    if (name == "fixed") return Mode::fixed;
    throw ConfigError("unknown mode \"" + name + "\" (expected hyper or fixed)");
}

std::size_t checkpoint_patch_size(const Checkpoint& ckpt) {
    if (ckpt.meta.contains("train") && ckpt.meta.at("train").contains("patch_size"))
        return ckpt.meta.at("train").at("patch_size").get<std::size_t>();
    return 0;
}

LoadedModel model_from_checkpoint(const Checkpoint& ckpt) {
    if (!ckpt.meta.contains("model") || !ckpt.meta.contains("mode"))
        throw FormatError("checkpoint: config block is missing model or mode");
    LoadedModel out;
    out.config = ckpt.meta.at("model").get<ModelConfig>();
    out.mode = mode_from(ckpt.meta.at("mode").get<std::string>());
    out.params = init_model_params<float>(out.config, out.mode);

    std::vector<std::string> offenders;
    std::size_t expected = 0;
    visit_params(out.params, [&](const std::string& name, Tensor<float>& t) {
        ++expected;
        auto it = ckpt.arrays.find(name);
        if (it == ckpt.arrays.end()) {
            offenders.push_back("missing array \"" + name + "\"");
            return;
        }
        const Dims want(t.dims().begin(), t.dims().end());
        const Dims got(it->second.dims.begin(), it->second.dims.end());
        if (want != got) {
            offenders.push_back("array \"" + name + "\" has dims " + dims_str(got) +
                                ", expected " + dims_str(want));
            return;
        }
        auto dst = t.mutable_data();
        std::copy(it->second.values.begin(), it->second.values.end(), dst.begin());
    });
    if (ckpt.arrays.size() != expected)
        for (const auto& [name, arr] : ckpt.arrays) {
            bool known = false;
            visit_params(out.params, [&](const std::string& n, Tensor<float>&) {
                known = known || n == name;
            });
            if (!known) offenders.push_back("unexpected array \"" + name + "\"");
        }
    if (!offenders.empty()) {
        std::string msg = "checkpoint: parameter set does not match config:";
        for (const auto& o : offenders) msg += "\n  " + o;
        throw FormatError(msg);
    }
    return out;
}

}  // namespace hysnet
