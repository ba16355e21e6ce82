#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cnnrom/fem/assembly.hpp"
#include "cnnrom/nn/tape.hpp"

namespace cnnrom::galerkin {

/// Reduced matrices above this 1-norm condition estimate are rejected.
inline constexpr double kConditionLimit = 1e12;

class IllConditionedError : public std::runtime_error {
public:
    IllConditionedError(const std::string& what, double estimate) : std::runtime_error(what), estimate_(estimate) {}
    double estimate() const { return estimate_; }

private:
    double estimate_;
};

/// Everything the reverse pass needs from one projection.
struct GalerkinCache {
    Eigen::MatrixXd P;
    Eigen::MatrixXd AP;
    Eigen::MatrixXd A_N;
    Eigen::VectorXd F_N;
    Eigen::VectorXd u_N;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    double condition_estimate = 0.0;
};

struct GalerkinResult {
    Eigen::VectorXd u_hat;
    GalerkinCache cache;
};

/// u_hat = P (P^T A P)^{-1} P^T F. Throws IllConditionedError when the reduced
/// matrix is singular or its condition estimate exceeds kConditionLimit.
GalerkinResult galerkin_activation(const Eigen::MatrixXd& P, const fem::CsrMatrix& A, const Eigen::VectorXd& F);

/// Gradient of upstream^T u_hat with respect to P. Throws std::logic_error if
/// the cache was built from a different P.
Eigen::MatrixXd galerkin_vjp(const GalerkinCache& cache, const Eigen::MatrixXd& P, const fem::CsrMatrix& A,
                             const Eigen::VectorXd& F, const Eigen::VectorXd& upstream);

/// ||M||_F ||M^{-1}||_F. Throws std::invalid_argument for a singular matrix.
double cond_frobenius(const Eigen::MatrixXd& M);
/// d cond_frobenius / dM.
Eigen::MatrixXd cond_frobenius_grad(const Eigen::MatrixXd& M);

/// Back-propagates a gradient G on A_N = P^T A P to P.
Eigen::MatrixXd reduced_matrix_vjp(const Eigen::MatrixXd& AP, const Eigen::MatrixXd& P, const fem::CsrMatrix& A,
                                   const Eigen::MatrixXd& G);

/// Batched projection on a tape. `P` is [B, N, ny, nx] with channel n holding
/// column n of sample b's basis in free-node order.
struct GalerkinBatch {
    /// [B, N_free]; rows of rejected samples are zero.
    nn::Var u_hat;
    /// [B]; cond_F(A_N) per sample, zero when rejected.
    nn::Var cond;
    std::vector<bool> valid;
    std::vector<double> condition_estimates;
    int num_valid() const;
};

/// `systems[b]` supplies A_h and F_h for sample b.
GalerkinBatch galerkin_batch(nn::Var P, const std::vector<const fem::FemSystem*>& systems);

/// Net output [B, N, ny, nx] of sample b as an N_free x N matrix.
Eigen::MatrixXd basis_matrix(const nn::Tensor& P, std::int64_t b);

}  // namespace cnnrom::galerkin
