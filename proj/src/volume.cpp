#include "hysnet/volume.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "hysnet/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "HVOL/HCKP writers assume a little-endian host");

namespace hysnet {

namespace {

constexpr char kMagic[4] = {'H', 'V', 'O', 'L'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

}  // namespace

Volume read_volume(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("read_volume: cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("read_volume: bad magic in " + path.string());
    const std::uint32_t version = read_u32(is);
    if (!is || version != kVersion)
        throw FormatError("read_volume: unsupported version " + std::to_string(version) + " in " +
                          path.string());
    Volume v;
    for (int i = 0; i < 3; ++i) {
        const std::uint32_t d = read_u32(is);
        if (!is || d == 0)
            throw FormatError("read_volume: invalid extent in " + path.string());
        v.dims[i] = d;
    }
    const std::size_t n = v.count();
    v.voxels.resize(n);
    is.read(reinterpret_cast<char*>(v.voxels.data()), static_cast<std::streamsize>(n * sizeof(float)));
    const auto got = static_cast<std::size_t>(is.gcount());
    if (got != n * sizeof(float))
        throw FormatError("read_volume: truncated payload in " + path.string() + ": expected " +
                          std::to_string(n * sizeof(float)) + " bytes, got " + std::to_string(got));
    is.peek();
    if (!is.eof())
        throw FormatError("read_volume: trailing bytes after payload in " + path.string());
    for (float x : v.voxels)
        if (!std::isfinite(x)) throw DataError("read_volume: non-finite voxel in " + path.string());
    v.meta = path.string();
    return v;
}

void write_volume(const std::filesystem::path& path, const Volume& v) {
    if (v.count() != v.voxels.size())
        throw ContractError("write_volume: dims/buffer mismatch");
    for (float x : v.voxels)
        if (!std::isfinite(x)) throw DataError("write_volume: non-finite voxel");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("write_volume: cannot open " + path.string());
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    for (int i = 0; i < 3; ++i) write_u32(os, static_cast<std::uint32_t>(v.dims[i]));
    os.write(reinterpret_cast<const char*>(v.voxels.data()),
             static_cast<std::streamsize>(v.voxels.size() * sizeof(float)));
    if (!os) throw FormatError("write_volume: write failed for " + path.string());
}

Volume normalize(const Volume& v) {
    if (v.voxels.empty()) throw ContractError("normalize: empty volume");
    float maxv = v.voxels[0];
    for (float x : v.voxels) maxv = std::max(maxv, x);
    if (!(maxv > 0.0f))
        throw DataError("normalize: volume maximum " + std::to_string(maxv) + " is not positive");
    Volume out = v;
    for (float& x : out.voxels) x /= maxv;
    return out;
}

}  // namespace hysnet
