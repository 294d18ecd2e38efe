#include "hysnet/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hysnet/errors.hpp"
#include "hysnet/rng.hpp"

namespace hysnet {

const char* content_class_name(ContentClass c) {
    return c == ContentClass::blobs ? "blobs" : "lattice";
}

ContentClass content_class_from(const std::string& name) {
    if (name == "blobs") return ContentClass::blobs;
    if (name == "lattice") return ContentClass::lattice;
    throw ConfigError("unknown content class '" + name + "' (expected blobs or lattice)");
}

namespace {

// Noiseless signal in f64; support = voxels that received any contribution.
std::vector<double> build_signal(const PhantomSpec& spec, Rng& rng) {
    const auto [X, Y, Z] = spec.dims;
    std::vector<double> signal(X * Y * Z, 0.0);
    if (spec.content == ContentClass::blobs) {
        const double r = spec.blob_radius;
        const double reach = 3.0 * r;
        for (std::size_t b = 0; b < spec.blob_count; ++b) {
            const double cx = rng.uniform(0.0, static_cast<double>(X));
            const double cy = rng.uniform(0.0, static_cast<double>(Y));
            const double cz = rng.uniform(0.0, static_cast<double>(Z));
            const auto lo = [&](double c) { return static_cast<std::size_t>(std::max(0.0, std::ceil(c - reach))); };
            const auto hi = [&](double c, std::size_t ext) {
                return std::min(ext, static_cast<std::size_t>(std::max(0.0, std::floor(c + reach) + 1.0)));
            };
            for (std::size_t z = lo(cz); z < hi(cz, Z); ++z)
                for (std::size_t y = lo(cy); y < hi(cy, Y); ++y)
                    for (std::size_t x = lo(cx); x < hi(cx, X); ++x) {
                        const double dx = static_cast<double>(x) - cx;
                        const double dy = static_cast<double>(y) - cy;
                        const double dz = static_cast<double>(z) - cz;
                        signal[x + X * (y + Y * z)] +=
                            spec.amplitude * std::exp(-(dx * dx + dy * dy + dz * dz) / (2.0 * r * r));
                    }
        }
    } else {
        // Axis-aligned stripes: random axis and phase, half-period duty cycle.
        const std::size_t axis = static_cast<std::size_t>(rng.uniform_index(3));
        const std::size_t period = std::max<std::size_t>(2, spec.lattice_period);
        const std::size_t half = period / 2;
        const std::size_t phase = static_cast<std::size_t>(rng.uniform_index(period));
        for (std::size_t z = 0; z < Z; ++z)
            for (std::size_t y = 0; y < Y; ++y)
                for (std::size_t x = 0; x < X; ++x) {
                    const std::size_t coord = axis == 0 ? x : axis == 1 ? y : z;
                    if ((coord + phase) % period < half)
                        signal[x + X * (y + Y * z)] = spec.amplitude;
                }
    }
    return signal;
}

double support_mean(const std::vector<double>& signal) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : signal)
        if (v > 0.0) {
            sum += v;
            ++n;
        }
    if (n == 0) throw DataError("phantom: signal has empty support");
    return sum / static_cast<double>(n);
}

}  // namespace

double phantom_score(const PhantomSpec& spec) {
    if (!(spec.noise_sigma > 0.0)) throw ConfigError("phantom: noise sigma must be positive");
    // The signal is rescaled to support mean == amplitude, so the score is
    // exactly amplitude / sigma regardless of content class.
    return spec.amplitude / spec.noise_sigma;
}

PhantomResult generate_phantom(const PhantomSpec& spec) {
    if (!(spec.noise_sigma > 0.0)) throw ConfigError("phantom: noise sigma must be positive");
    if (!(spec.amplitude > 0.0)) throw ConfigError("phantom: amplitude must be positive");
    for (std::size_t d : spec.dims)
        if (d == 0) throw ConfigError("phantom: extents must be positive");

    Rng signal_rng = Rng::substream(spec.seed, "phantom-signal");
    Rng noise_rng = Rng::substream(spec.seed, "phantom-noise");

    std::vector<double> signal = build_signal(spec, signal_rng);
    const double mean = support_mean(signal);
    const double rescale = spec.amplitude / mean;
    for (double& v : signal) v *= rescale;

    Volume v;
    v.dims = spec.dims;
    v.voxels.resize(signal.size());
    for (std::size_t i = 0; i < signal.size(); ++i) {
        // Clamp at zero: magnitude images carry no negative intensities.
        const double raw = signal[i] + noise_rng.normal(0.0, spec.noise_sigma);
        v.voxels[i] = static_cast<float>(std::max(0.0, raw));
    }
    return PhantomResult{normalize(v), phantom_score(spec)};
}

}  // namespace hysnet
