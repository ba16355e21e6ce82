#pragma once

#include <span>
#include <vector>

#include "cnnrom/coef/coef_net.hpp"
#include "cnnrom/galerkin/trainer.hpp"

namespace cnnrom::coef {

/// Trained Basis and Coef networks plus the grid they were trained on.
struct SurrogateModel {
    galerkin::BasisNetCfg basis_cfg;
    nn::ParamStore basis;
    CoefNetCfg coef_cfg;
    nn::ParamStore coef;
    int nodes = 17;
    fem::ElementKind element = fem::ElementKind::QuadBilinear;

    /// Throws std::invalid_argument if the nets disagree on resolution or N.
    void validate() const;
    fem::Grid2D grid() const;
};

/// P_N(K) c(K) at the free nodes: two eval-mode forward passes, no assembly,
/// no solve. K is the full nodal field on the model grid.
Eigen::VectorXd surrogate_predict(const fem::FieldNodal& K, const SurrogateModel& model);
std::vector<Eigen::VectorXd> surrogate_predict(std::span<const fem::FieldNodal> K, const SurrogateModel& model);

/// Differentiable in K: [B, 1, ny, nx] free-node fields -> [B, N_free]. Both
/// networks run in eval mode and record no parameter gradients.
nn::Var surrogate_forward(nn::Tape& tape, const SurrogateModel& model, nn::Var K);

/// Coefficient training against u_h with the Basis net frozen: `basis` is only
/// read, through eval-mode forward passes.
galerkin::TrainResult train_coef(nn::ParamStore init, const CoefNetCfg& cfg, const nn::ParamStore& basis,
                                 const galerkin::BasisNetCfg& basis_cfg, const galerkin::TrainCfg& train_cfg,
                                 std::span<const galerkin::Sample> train, std::span<const galerkin::Sample> test,
                                 const galerkin::EpochHook& hook = {});

/// h^2 mean ||u - P c||^2 for one batch with precomputed bases [B, N, ny, nx].
nn::Var coef_loss(nn::Forward& f, const CoefNetCfg& cfg, const nn::Tensor& bases,
                  std::span<const galerkin::Sample* const> batch);

/// eps_test of the surrogate on labelled samples.
double evaluate_surrogate(const SurrogateModel& model, std::span<const galerkin::Sample> samples);

}  // namespace cnnrom::coef
