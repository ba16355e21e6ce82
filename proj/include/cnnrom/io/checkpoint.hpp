#pragma once

#include <filesystem>

#include "cnnrom/io/serialize.hpp"
#include "cnnrom/nn/tape.hpp"

namespace cnnrom::io {

/// "ROMK" container: u16 version, a JSON metadata block (configs, grid) and
/// every ParamStore entry as name, trainable flag and an embedded ROMT tensor.
/// Entries are written in name order, so equal stores give equal bytes.
struct Checkpoint {
    Json meta;
    nn::ParamStore params;
};

void save_checkpoint(const std::filesystem::path& path, const nn::ParamStore& params, const Json& meta);
/// Throws FormatError on a malformed file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Surrogate = Basis checkpoint + Coef checkpoint; the metadata carries the
/// network configs and the grid.
void save_basis(const std::filesystem::path& path, const nn::ParamStore& params, const galerkin::BasisNetCfg& cfg,
                int nodes, fem::ElementKind element, const Json& extra = Json::object());
void save_coef(const std::filesystem::path& path, const nn::ParamStore& params, const coef::CoefNetCfg& cfg,
               int nodes, fem::ElementKind element, const Json& extra = Json::object());
/// Loads both checkpoints and checks that they agree on grid and N.
coef::SurrogateModel load_surrogate(const std::filesystem::path& basis, const std::filesystem::path& coef);

struct BasisCheckpoint {
    galerkin::BasisNetCfg cfg;
    nn::ParamStore params;
    int nodes = 0;
    fem::ElementKind element = fem::ElementKind::QuadBilinear;
};
BasisCheckpoint load_basis(const std::filesystem::path& path);

}  // namespace cnnrom::io
