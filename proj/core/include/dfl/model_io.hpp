#pragma once

#include <cstdint>
#include <filesystem>

#include "dfl/autoencoder.hpp"
#include "dfl/cdbn.hpp"
#include "dfl/dataset.hpp"

namespace dfl {

/// Everything needed to localize: normalization stats, the CRBM stack, the
/// fine-tuned autoencoder, and the softmax head, plus a fingerprint of the
/// config that produced it.
struct ModelBundle {
    FeatureStats normalization;          // raw input standardization
    FeatureStats feature_normalization;  // CDBN feature standardization (may be empty)
    CdbnStack stack;
    AutoencoderNet net;
    SoftmaxHead head;
    std::uint64_t config_fingerprint = 0;
};

/// Binary bundle file: magic "CDBN-DFL\x01", little-endian fields, f64
/// parameters, trailing CRC-32 of everything before it.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);

/// Throws IoError with distinct messages for bad magic, version mismatch,
/// truncation, and checksum failure.
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace dfl
