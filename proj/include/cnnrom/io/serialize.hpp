#pragma once

#include "json.hpp"

#include "cnnrom/coef/surrogate.hpp"
#include "cnnrom/galerkin/gradient_gate.hpp"
#include "cnnrom/galerkin/trainer.hpp"
#include "cnnrom/msfem/msfem.hpp"
#include "cnnrom/vae/vae.hpp"

namespace cnnrom::io {

using Json = nlohmann::json;

/// JSON views of the configuration structs. Readers fill only the keys that
/// are present and throw std::invalid_argument on unknown keys or wrong types.
Json to_json(const galerkin::BasisNetCfg& c);
void from_json(const Json& j, galerkin::BasisNetCfg& c);
Json to_json(const coef::CoefNetCfg& c);
void from_json(const Json& j, coef::CoefNetCfg& c);
Json to_json(const galerkin::GenCfg& c);
void from_json(const Json& j, galerkin::GenCfg& c);
Json to_json(const galerkin::TrainCfg& c);
void from_json(const Json& j, galerkin::TrainCfg& c);
Json to_json(const galerkin::GateCfg& c);
void from_json(const Json& j, galerkin::GateCfg& c);
Json to_json(const vae::RecogCfg& c);
void from_json(const Json& j, vae::RecogCfg& c);

}  // namespace cnnrom::io
