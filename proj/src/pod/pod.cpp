#include "cnnrom/pod/pod.hpp"

#include <algorithm>
#include <stdexcept>

#include <Eigen/SVD>

#include "cnnrom/fem/metrics.hpp"

namespace cnnrom::pod {

PodBasis build_pod_basis(const Eigen::MatrixXd& snapshots, int N)
{
    const Eigen::Index rows = snapshots.rows();
    const Eigen::Index cols = snapshots.cols();
    if (N < 1 || N > std::min(rows, cols)) {
        throw std::invalid_argument("build_pod_basis: N must lie in [1, min(N_free, M)]");
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(snapshots, Eigen::ComputeThinU);
    PodBasis basis;
    basis.singular_values = svd.singularValues();
    const double smax = basis.singular_values.size() > 0 ? basis.singular_values[0] : 0.0;
    const double tol = smax * static_cast<double>(std::max(rows, cols)) * Eigen::NumTraits<double>::epsilon();
    basis.rank = static_cast<int>((basis.singular_values.array() > tol).count());
    basis.rank_deficient = basis.rank < N;

    const int kept = std::min(N, basis.rank);
    basis.P.resize(rows, N);
    basis.P.leftCols(kept) = svd.matrixU().leftCols(kept);
    if (kept < N) {
        // Complete with an orthonormal basis of the complement of the kept span.
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis.P.leftCols(kept));
        const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, N);
        basis.P.rightCols(N - kept) = Q.rightCols(N - kept);
    }
    for (int j = 0; j < N; ++j) {
        Eigen::Index peak = 0;
        basis.P.col(j).cwiseAbs().maxCoeff(&peak);
        if (basis.P(peak, j) < 0.0) {
            basis.P.col(j) *= -1.0;
        }
    }
    return basis;
}

double projection_error(const Eigen::MatrixXd& P, const Eigen::MatrixXd& snapshots)
{
    return (snapshots - P * (P.transpose() * snapshots)).squaredNorm();
}

ReducedSolution galerkin_reduce_solve(const Eigen::MatrixXd& P, const fem::FemSystem& sys)
{
    if (P.rows() != sys.A.rows() || sys.F.size() != sys.A.rows()) {
        throw std::invalid_argument("galerkin_reduce_solve: basis and system dimensions differ");
    }
    const Eigen::MatrixXd AN = P.transpose() * sys.A.multiply(P);
    const Eigen::VectorXd FN = P.transpose() * sys.F;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(AN);
    if (!(lu.rcond() > 1e-14)) {
        throw std::runtime_error("galerkin_reduce_solve: reduced matrix is singular");
    }
    ReducedSolution out;
    out.u_N = lu.solve(FN);
    out.u_hat = P * out.u_N;
    return out;
}

std::vector<PodCurvePoint> pod_error_curve(const Eigen::MatrixXd& train_snapshots,
                                           std::span<const fem::FemSystem> test_systems,
                                           std::span<const Eigen::VectorXd> test_solutions, std::span<const int> Ns)
{
    if (Ns.empty() || test_systems.empty() || train_snapshots.cols() == 0) {
        throw std::invalid_argument("pod_error_curve: empty input");
    }
    if (test_systems.size() != test_solutions.size()) {
        throw std::invalid_argument("pod_error_curve: test system and solution counts differ");
    }
    const int Nmax = *std::max_element(Ns.begin(), Ns.end());
    const PodBasis basis = build_pod_basis(train_snapshots, Nmax);
    const Eigen::VectorXd train_norms = train_snapshots.colwise().squaredNorm();

    std::vector<PodCurvePoint> out;
    for (const int N : Ns) {
        if (N < 1) {
            throw std::invalid_argument("pod_error_curve: N must be positive");
        }
        const Eigen::MatrixXd P = basis.P.leftCols(N);
        std::vector<Eigen::VectorXd> preds;
        preds.reserve(test_systems.size());
        for (const auto& sys : test_systems) {
            preds.push_back(galerkin_reduce_solve(P, sys).u_hat);
        }
        const Eigen::MatrixXd resid = train_snapshots - P * (P.transpose() * train_snapshots);
        const double eps_train =
            (resid.colwise().squaredNorm().array() / train_norms.transpose().array()).mean();
        out.push_back({N, fem::relative_test_mean_error(preds, test_solutions), eps_train});
    }
    return out;
}

}  // namespace cnnrom::pod
