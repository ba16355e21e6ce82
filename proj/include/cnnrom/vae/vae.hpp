#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cnnrom/coef/surrogate.hpp"
#include "cnnrom/fields/kle.hpp"

namespace cnnrom::vae {

/// Sensor positions as free-node indices.
struct SensorLayout {
    std::vector<int> free_indices;
    std::size_t size() const { return free_indices.size(); }
};

/// s x s sensors spread uniformly over the free-node lattice.
/// Throws std::invalid_argument if s exceeds the free nodes per axis.
SensorLayout uniform_layout(const fem::Grid2D& grid, int s);

/// u at the sensors plus i.i.d. N(0, sigma^2) noise.
Eigen::VectorXd observe(const Eigen::VectorXd& u_free, const SensorLayout& layout, double sigma, std::uint64_t seed);

struct PosteriorGaussian {
    Eigen::VectorXd mu;
    Eigen::VectorXd log_var;
};

struct RecogCfg {
    int n_obs = 225;
    std::vector<int> hidden{256, 256};
    int Q = 20;
    nn::Activation activation = nn::Activation::Relu;
    double log_var_min = -12.0;
    double log_var_max = 4.0;

    void validate() const;
};

struct ElboCfg {
    double sigma_obs = 0.01;
    int mc_samples = 8;

    void validate() const;
};

/// Creates every parameter under the prefix "recog.".
void init_recognition(nn::ParamStore& store, const RecogCfg& cfg, std::uint64_t seed);

struct PosteriorVars {
    nn::Var mu;
    nn::Var log_var;
};

/// Y [B, n_obs] -> mu, log sigma^2 [B, Q], the latter clamped to the configured range.
PosteriorVars recognition_forward(nn::Forward& f, const RecogCfg& cfg, nn::Var Y);

/// Eval-mode posterior for one observation vector.
PosteriorGaussian infer_posterior(nn::ParamStore& store, const RecogCfg& cfg, const Eigen::VectorXd& Y);

/// Differentiable map from latent draws z [S, Q] to sensor predictions [S, n_obs].
using ForwardMap = std::function<nn::Var(nn::Tape& tape, nn::Var z)>;

/// y = G z.
ForwardMap linear_forward(Eigen::MatrixXd G);

/// Sensor values of the frozen surrogate at K(z) = exp(m + sum sqrt(lambda_j) z_j g_j).
ForwardMap surrogate_forward_map(const coef::SurrogateModel& model, const fields::KleModel& kle,
                                 const SensorLayout& layout);

/// sum_j (sigma_j^2 + mu_j^2 - 1 - log sigma_j^2) / 2.
double kl_standard_normal(const PosteriorGaussian& q);

/// log N(y | pred, sigma^2 I).
double gaussian_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& pred, double sigma);

struct ElboTerms {
    /// Mean ELBO over the batch (to maximize).
    nn::Var elbo;
    nn::Var loglik;
    nn::Var kl;
};

/// Reparameterized Monte-Carlo ELBO over a batch of observations; the noise
/// eps is drawn from `seed`, so the value is deterministic in (params, seed).
ElboTerms elbo(nn::Forward& f, const RecogCfg& rcfg, const ElboCfg& ecfg, const ForwardMap& forward,
               std::span<const Eigen::VectorXd> Y, std::uint64_t seed);

struct VaeTrainCfg {
    int batch = 32;
    int epochs = 50;
    double lr0 = 1e-3;
    std::uint64_t seed = 0;
};

struct VaeHistory {
    int epoch = 0;
    double elbo = 0.0;
    double kl = 0.0;
};

struct VaeTrainResult {
    nn::ParamStore params;
    std::vector<VaeHistory> history;
};

/// Adam on -ELBO with a cosine schedule. Throws std::runtime_error when the
/// ELBO stops being finite.
VaeTrainResult train_vae(nn::ParamStore init, const RecogCfg& rcfg, const ElboCfg& ecfg, const ForwardMap& forward,
                         std::span<const Eigen::VectorXd> Y, const VaeTrainCfg& cfg,
                         const std::function<void(const VaeHistory&)>& hook = {});

struct FieldStats {
    fem::FieldNodal mean;
    fem::FieldNodal var;
};

/// Monte-Carlo mean and variance (1/M normalization) of K(z) for z ~ q.
FieldStats posterior_field_stats(const fields::KleModel& kle, const PosteriorGaussian& q, int M, std::uint64_t seed);

}  // namespace cnnrom::vae
