#include "hysnet/patches.hpp"

#include "hysnet/errors.hpp"

namespace hysnet {

PatchGrid make_patch_grid(const std::array<std::size_t, 3>& dims, std::size_t patch,
                          std::size_t stride) {
    if (patch == 0 || stride == 0)
        throw ConfigError("patch grid: patch and stride must be positive");
    PatchGrid grid;
    grid.patch = patch;
    grid.stride = stride;
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < patch)
            throw ConfigError("patch grid: extent " + std::to_string(dims[a]) +
                              " is smaller than patch " + std::to_string(patch));
        const std::size_t last = dims[a] - patch;
        auto& offs = grid.offsets[a];
        for (std::size_t o = 0; o <= last; o += stride) offs.push_back(o);
        if (offs.back() != last) offs.push_back(last);  // tail offset: full coverage
    }
    return grid;
}

std::vector<std::array<std::size_t, 3>> grid_positions(const PatchGrid& grid) {
    std::vector<std::array<std::size_t, 3>> out;
    out.reserve(grid.count());
    for (std::size_t z : grid.offsets[2])
        for (std::size_t y : grid.offsets[1])
            for (std::size_t x : grid.offsets[0]) out.push_back({x, y, z});
    return out;
}

std::array<std::size_t, 3> grid_center_position(const PatchGrid& grid) {
    return {grid.offsets[0][grid.offsets[0].size() / 2],
            grid.offsets[1][grid.offsets[1].size() / 2],
            grid.offsets[2][grid.offsets[2].size() / 2]};
}

std::vector<std::array<std::size_t, 3>> sample_random_patch_positions(
    const std::array<std::size_t, 3>& dims, std::size_t patch, std::size_t n, Rng& rng) {
    for (int a = 0; a < 3; ++a)
        if (dims[a] < patch)
            throw ConfigError("random patches: extent " + std::to_string(dims[a]) +
                              " is smaller than patch " + std::to_string(patch));
    std::vector<std::array<std::size_t, 3>> out(n);
    for (std::size_t i = 0; i < n; ++i)
        for (int a = 0; a < 3; ++a)
            out[i][a] = static_cast<std::size_t>(rng.uniform_index(dims[a] - patch + 1));
    return out;
}

}  // namespace hysnet
