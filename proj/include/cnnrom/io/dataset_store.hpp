#pragma once

#include <filesystem>
#include <stdexcept>

#include "cnnrom/io/serialize.hpp"

namespace cnnrom::io {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Writes manifest.json plus one ROMT file per array (K, u_h, F_h and A_h as
/// CSR offsets/columns/values) under `dir`. Returns the manifest.
Json write_dataset(const std::filesystem::path& dir, const galerkin::GenCfg& cfg, const galerkin::GeneratedData& data);

/// generate_data followed by write_dataset.
Json gen_data(const galerkin::GenCfg& cfg, const std::filesystem::path& dir);

struct LoadedDataset {
    galerkin::GenCfg cfg;
    galerkin::GeneratedData data;
    Json manifest;
};

/// Validates the whole manifest (every file present, parseable, shaped for the
/// grid) before returning. With label_noise > 0, N(0, label_noise^2) is added
/// to the training labels only; the files on disk stay clean.
/// Throws DatasetError on any inconsistency.
LoadedDataset read_dataset(const std::filesystem::path& dir, double label_noise = 0.0, std::uint64_t noise_seed = 0);

}  // namespace cnnrom::io
