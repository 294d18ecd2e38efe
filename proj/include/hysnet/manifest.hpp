#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hysnet/rng.hpp"

namespace hysnet {

struct ManifestRecord {
    std::string path;  // as written in the file
    double score = 0.0;
};

struct Manifest {
    std::vector<ManifestRecord> records;
    std::filesystem::path dir;  // manifest location; relative paths resolve against it

    std::filesystem::path resolved(std::size_t i) const {
        std::filesystem::path p(records[i].path);
        return p.is_absolute() ? p : dir / p;
    }
};

// CSV with the exact header "path,score"; LF or CRLF line endings.
Manifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

// Seeded 50/50-style split: first ceil(fraction*n) of a shuffled order train,
// the rest held out.
struct ManifestSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> held_out;
};
ManifestSplit split_manifest(std::size_t n, double train_fraction, std::uint64_t seed);

}  // namespace hysnet
