#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "hysnet/volume.hpp"

namespace hysnet {

enum class ContentClass { blobs, lattice };

const char* content_class_name(ContentClass c);
ContentClass content_class_from(const std::string& name);

// Synthetic volume: a deterministic signal field (from the seed) plus white
// Gaussian noise. The signal is rescaled so that its mean over the support is
// exactly `amplitude`; the quality score is therefore amplitude / noise_sigma
// for every content class.
struct PhantomSpec {
    ContentClass content = ContentClass::blobs;
    std::array<std::size_t, 3> dims{32, 32, 32};
    std::size_t blob_count = 8;
    double blob_radius = 4.0;       // Gaussian sigma of each blob
    std::size_t lattice_period = 8; // full stripe cycle (half on, half off)
    double amplitude = 1.0;
    double noise_sigma = 0.1;
    std::uint64_t seed = 1;
};

struct PhantomResult {
    Volume volume;  // normalized per the ingestion rule (max exactly 1)
    double score;   // pre-normalization mean-signal / sigma
};

PhantomResult generate_phantom(const PhantomSpec& spec);

// The score implied by a spec without materializing the volume.
double phantom_score(const PhantomSpec& spec);

}  // namespace hysnet
