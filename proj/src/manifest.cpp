#include "hysnet/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "hysnet/errors.hpp"

namespace hysnet {

namespace {

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("manifest: cannot open " + path.string());
    Manifest m;
    m.dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

    std::string line;
    if (!std::getline(is, line) || strip_cr(line) != "path,score")
        throw FormatError("manifest " + path.string() + ": line 1: header must be exactly \"path,score\"");

    std::unordered_set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw FormatError("manifest " + path.string() + ": line " + std::to_string(lineno) +
                              ": expected exactly two fields");
        std::string p = line.substr(0, comma);
        const std::string score_str = line.substr(comma + 1);
        if (p.empty())
            throw FormatError("manifest " + path.string() + ": line " + std::to_string(lineno) +
                              ": empty path");
        double score = 0.0;
        const auto* begin = score_str.data();
        const auto* end = begin + score_str.size();
        const auto [ptr, ec] = std::from_chars(begin, end, score);
        if (ec != std::errc() || ptr != end || !std::isfinite(score))
            throw FormatError("manifest " + path.string() + ": line " + std::to_string(lineno) +
                              ": invalid score \"" + score_str + "\"");
        if (!seen.insert(p).second)
            throw FormatError("manifest " + path.string() + ": line " + std::to_string(lineno) +
                              ": duplicate path \"" + p + "\"");
        m.records.push_back({std::move(p), score});
    }
    return m;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("manifest: cannot open " + path.string() + " for writing");
    os << "path,score\n";
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%.17g", r.score);
        os << r.path << ',' << buf << '\n';
    }
    if (!os) throw FormatError("manifest: write failed for " + path.string());
}

ManifestSplit split_manifest(std::size_t n, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw ConfigError("split: train fraction must be in (0, 1)");
    if (n < 2) throw ConfigError("split: need at least 2 records");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::substream(seed, "split");
    rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n)));
    ManifestSplit split;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.held_out.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.held_out.begin(), split.held_out.end());
    return split;
}

}  // namespace hysnet
