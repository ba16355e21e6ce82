#pragma once

#include <span>
#include <vector>

#include "cnnrom/galerkin/dataset.hpp"
#include "cnnrom/galerkin/galerkin_layer.hpp"
#include "cnnrom/nn/layers.hpp"

namespace cnnrom::galerkin {

struct BasisNetCfg {
    int free_nx = 15;
    int free_ny = 15;
    std::vector<int> channels{8, 8, 16, 16, 32, 32};
    int kernel = 7;
    int N = 5;
    nn::Activation activation = nn::Activation::Relu;
    double lambda_G = 1e-6;
    /// Feed log K to the first layer (K spans three decades for inclusion fields).
    bool log_input = true;

    void validate() const;
};

/// Creates every parameter under the prefix "basis.".
void init_basis_net(nn::ParamStore& store, const BasisNetCfg& cfg, std::uint64_t seed);

/// K at the free nodes [B, 1, ny, nx] -> basis tensor [B, N, ny, nx].
nn::Var basis_forward(nn::Forward& f, const BasisNetCfg& cfg, nn::Var K);

struct BasisLoss {
    nn::Var total;
    nn::Var misfit;
    nn::Var penalty;
    GalerkinBatch galerkin;
};

/// h^2 mean ||u - u_hat||^2 + lambda_G mean cond_F(A_N)^2 over the samples
/// whose reduced matrix passed the condition check. With no valid sample the
/// loss is a constant zero.
BasisLoss basis_loss(nn::Forward& f, const BasisNetCfg& cfg, std::span<const Sample* const> batch);

struct BasisEval {
    double eps_test = 0.0;
    std::vector<Eigen::VectorXd> predictions;
    int skipped = 0;
    double mean_cond = 0.0;
};

/// Eval-mode Galerkin predictions; rejected samples predict zero.
BasisEval evaluate_basis(nn::ParamStore& store, const BasisNetCfg& cfg, std::span<const Sample> samples,
                         int batch_size = 64);

/// Eval-mode basis matrices (N_free x N), one per sample.
std::vector<Eigen::MatrixXd> predict_bases(nn::ParamStore& store, const BasisNetCfg& cfg,
                                           std::span<const Sample> samples, int batch_size = 64);

}  // namespace cnnrom::galerkin
