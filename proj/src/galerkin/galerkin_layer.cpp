#include "cnnrom/galerkin/galerkin_layer.hpp"

#include <cmath>
#include <string>

namespace cnnrom::galerkin {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

GalerkinResult galerkin_activation(const Eigen::MatrixXd& P, const fem::CsrMatrix& A, const Eigen::VectorXd& F)
{
    if (P.rows() != A.rows() || F.size() != A.rows() || P.cols() < 1) {
        throw std::invalid_argument("galerkin_activation: basis, matrix and load dimensions differ");
    }
    GalerkinResult r;
    GalerkinCache& c = r.cache;
    c.P = P;
    c.AP = A.multiply(P);
    c.A_N = P.transpose() * c.AP;
    c.F_N = P.transpose() * F;
    c.lu.compute(c.A_N);
    const double rcond = c.lu.rcond();
    c.condition_estimate = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(c.condition_estimate <= kConditionLimit) || !c.A_N.allFinite()) {
        throw IllConditionedError("galerkin_activation: reduced matrix condition estimate " +
                                      std::to_string(c.condition_estimate) + " exceeds limit",
                                  c.condition_estimate);
    }
    c.u_N = c.lu.solve(c.F_N);
    r.u_hat = P * c.u_N;
    return r;
}

Eigen::MatrixXd galerkin_vjp(const GalerkinCache& cache, const Eigen::MatrixXd& P, const fem::CsrMatrix& A,
                             const Eigen::VectorXd& F, const Eigen::VectorXd& upstream)
{
    if (P.rows() != cache.P.rows() || P.cols() != cache.P.cols() || P != cache.P) {
        throw std::logic_error("galerkin_vjp: cache was built for a different basis");
    }
    if (upstream.size() != P.rows()) {
        throw std::invalid_argument("galerkin_vjp: upstream length differs from N_free");
    }
    // w = A_N^{-T} P^T g
    const Eigen::VectorXd w = cache.lu.transpose().solve(P.transpose() * upstream);
    const Eigen::VectorXd APu = cache.AP * cache.u_N;
    const Eigen::VectorXd ATPw = A.transpose_multiply(Eigen::VectorXd(P * w));
    return upstream * cache.u_N.transpose() + F * w.transpose() - APu * w.transpose() - ATPw * cache.u_N.transpose();
}

double cond_frobenius(const Eigen::MatrixXd& M)
{
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    if (!(lu.rcond() > 0.0)) {
        throw std::invalid_argument("cond_frobenius: singular matrix");
    }
    return M.norm() * lu.inverse().norm();
}

Eigen::MatrixXd cond_frobenius_grad(const Eigen::MatrixXd& M)
{
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    if (!(lu.rcond() > 0.0)) {
        throw std::invalid_argument("cond_frobenius_grad: singular matrix");
    }
    const Eigen::MatrixXd B = lu.inverse();
    const double na = M.norm();
    const double nb = B.norm();
    return (nb / na) * M - (na / nb) * (B.transpose() * B * B.transpose());
}

Eigen::MatrixXd reduced_matrix_vjp(const Eigen::MatrixXd& AP, const Eigen::MatrixXd& P, const fem::CsrMatrix& A,
                                   const Eigen::MatrixXd& G)
{
    return AP * G.transpose() + A.transpose_multiply(Eigen::MatrixXd(P * G));
}

int GalerkinBatch::num_valid() const
{
    int n = 0;
    for (const bool v : valid) {
        n += v ? 1 : 0;
    }
    return n;
}

Eigen::MatrixXd basis_matrix(const nn::Tensor& P, std::int64_t b)
{
    const auto N = P.dim(1);
    const auto F = P.dim(2) * P.dim(3);
    return Eigen::Map<const RowMat>(P.data() + b * N * F, N, F).transpose();
}

GalerkinBatch galerkin_batch(nn::Var P, const std::vector<const fem::FemSystem*>& systems)
{
    const nn::Tensor& pv = P.value();
    if (pv.ndim() != 4 || pv.dim(0) != static_cast<std::int64_t>(systems.size())) {
        throw std::invalid_argument("galerkin_batch: expected [B, N, ny, nx] with one system per sample");
    }
    const auto B = pv.dim(0);
    const auto N = pv.dim(1);
    const auto Nf = pv.dim(2) * pv.dim(3);

    auto caches = std::make_shared<std::vector<GalerkinCache>>(static_cast<std::size_t>(B));
    GalerkinBatch out;
    out.valid.assign(static_cast<std::size_t>(B), false);
    out.condition_estimates.assign(static_cast<std::size_t>(B), 0.0);
    nn::Tensor u(nn::Shape{B, Nf});
    nn::Tensor cond(nn::Shape{B});
    for (std::int64_t b = 0; b < B; ++b) {
        const fem::FemSystem& sys = *systems[static_cast<std::size_t>(b)];
        if (sys.A.rows() != Nf) {
            throw std::invalid_argument("galerkin_batch: system size does not match the basis resolution");
        }
        const Eigen::MatrixXd Pb = basis_matrix(pv, b);
        try {
            GalerkinResult r = galerkin_activation(Pb, sys.A, sys.F);
            Eigen::Map<Eigen::VectorXd>(u.data() + b * Nf, Nf) = r.u_hat;
            cond[b] = cond_frobenius(r.cache.A_N);
            out.condition_estimates[static_cast<std::size_t>(b)] = r.cache.condition_estimate;
            out.valid[static_cast<std::size_t>(b)] = true;
            (*caches)[static_cast<std::size_t>(b)] = std::move(r.cache);
        } catch (const IllConditionedError& e) {
            out.condition_estimates[static_cast<std::size_t>(b)] = e.estimate();
        }
    }

    const int ip = P.id;
    const auto valid = out.valid;
    auto scatter = [B, N, Nf](nn::Tensor& dP, std::int64_t b, const Eigen::MatrixXd& g) {
        Eigen::Map<RowMat>(dP.data() + b * N * Nf, N, Nf) += g.transpose();
    };
    out.u_hat = P.tape->record(std::move(u), {P}, [=](nn::Tape& t, const nn::Tensor& g) {
        nn::Tensor dP(t.value(ip).shape());
        for (std::int64_t b = 0; b < B; ++b) {
            if (!valid[static_cast<std::size_t>(b)]) {
                continue;
            }
            const fem::FemSystem& sys = *systems[static_cast<std::size_t>(b)];
            const GalerkinCache& c = (*caches)[static_cast<std::size_t>(b)];
            const Eigen::VectorXd up = Eigen::Map<const Eigen::VectorXd>(g.data() + b * Nf, Nf);
            scatter(dP, b, galerkin_vjp(c, c.P, sys.A, sys.F, up));
        }
        t.accumulate(ip, std::move(dP));
    });
    out.cond = P.tape->record(std::move(cond), {P}, [=](nn::Tape& t, const nn::Tensor& g) {
        nn::Tensor dP(t.value(ip).shape());
        for (std::int64_t b = 0; b < B; ++b) {
            if (!valid[static_cast<std::size_t>(b)] || g[b] == 0.0) {
                continue;
            }
            const fem::FemSystem& sys = *systems[static_cast<std::size_t>(b)];
            const GalerkinCache& c = (*caches)[static_cast<std::size_t>(b)];
            const Eigen::MatrixXd G = g[b] * cond_frobenius_grad(c.A_N);
            scatter(dP, b, reduced_matrix_vjp(c.AP, c.P, sys.A, G));
        }
        t.accumulate(ip, std::move(dP));
    });
    return out;
}

}  // namespace cnnrom::galerkin
