#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "cnnrom/nn/gradcheck.hpp"
#include "cnnrom/vae/vae.hpp"

using namespace cnnrom;
using namespace cnnrom::vae;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed, double scale)
{
    fields::Rng rng = fields::make_rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            m(i, j) = normal(rng);
        }
    }
    return m;
}

Eigen::VectorXd randn(int n, std::uint64_t seed)
{
    return random_matrix(n, 1, seed, 1.0).col(0);
}

struct Conjugate {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// z ~ N(0, I), y = G z + N(0, sigma^2 I).
Conjugate conjugate_posterior(const Eigen::MatrixXd& G, double sigma, const Eigen::VectorXd& y)
{
    const Eigen::MatrixXd prec =
        Eigen::MatrixXd::Identity(G.cols(), G.cols()) + G.transpose() * G / (sigma * sigma);
    Conjugate c;
    c.cov = prec.inverse();
    c.mean = c.cov * G.transpose() * y / (sigma * sigma);
    return c;
}

double log_evidence(const Eigen::MatrixXd& G, double sigma, const Eigen::VectorXd& y)
{
    const Eigen::MatrixXd C =
        G * G.transpose() + sigma * sigma * Eigen::MatrixXd::Identity(G.rows(), G.rows());
    const Eigen::LLT<Eigen::MatrixXd> llt(C);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * y.dot(llt.solve(y)) - 0.5 * logdet - 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

// E_q[log N(y | G z, sigma^2)] - KL(q || N(0, I)) in closed form.
double analytic_elbo(const Eigen::MatrixXd& G, double sigma, const Eigen::VectorXd& y, const PosteriorGaussian& q)
{
    const Eigen::VectorXd var = q.log_var.array().exp();
    const double trace = (G.colwise().squaredNorm().transpose().array() * var.array()).sum();
    return gaussian_loglik(y, G * q.mu, sigma) - 0.5 * trace / (sigma * sigma) - kl_standard_normal(q);
}

// Recognition net without hidden layers whose output is pinned to q for every input.
nn::ParamStore pinned_posterior(RecogCfg& cfg, const PosteriorGaussian& q)
{
    cfg.hidden = {};
    cfg.Q = static_cast<int>(q.mu.size());
    nn::ParamStore store;
    init_recognition(store, cfg, 0);
    store.value("recog.out.w").vec().setZero();
    store.value("recog.out.b").vec() << q.mu, q.log_var;
    return store;
}

double elbo_value(nn::ParamStore& store, const RecogCfg& rcfg, const ElboCfg& ecfg, const ForwardMap& fwd,
                  const std::vector<Eigen::VectorXd>& Y, std::uint64_t seed)
{
    nn::Tape tape;
    nn::Forward f{tape, store, false, false};
    return elbo(f, rcfg, ecfg, fwd, Y, seed).elbo.value()[0];
}

}  // namespace

TEST_CASE("uniform sensor layouts")
{
    const fem::Grid2D g = fem::build_grid(17, 17, fem::ElementKind::QuadBilinear);
    const SensorLayout full = uniform_layout(g, 15);
    CHECK(full.size() == 225);
    for (int k = 0; k < 225; ++k) {
        CHECK(full.free_indices[static_cast<std::size_t>(k)] == k);
    }
    const SensorLayout sparse = uniform_layout(g, 8);
    const std::set<int> unique(sparse.free_indices.begin(), sparse.free_indices.end());
    CHECK(unique.size() == 64);
    CHECK(*unique.begin() >= 0);
    CHECK(*unique.rbegin() < g.num_free());
    CHECK_THROWS_AS(uniform_layout(g, 16), std::invalid_argument);
}

TEST_CASE("observations add Gaussian noise of the configured size")
{
    const fem::Grid2D g = fem::build_grid(17, 17, fem::ElementKind::QuadBilinear);
    const SensorLayout layout = uniform_layout(g, 15);
    const Eigen::VectorXd u = randn(g.num_free(), 3);
    const Eigen::VectorXd exact = observe(u, layout, 0.0, 1);
    CHECK((exact - u).norm() == 0.0);

    const double sigma = 0.02;
    double sum2 = 0.0;
    double sum = 0.0;
    int n = 0;
    for (std::uint64_t seed = 0; seed < 45; ++seed) {
        const Eigen::VectorXd r = observe(u, layout, sigma, seed) - u;
        sum += r.sum();
        sum2 += r.squaredNorm();
        n += static_cast<int>(r.size());
    }
    const double var = sum2 / n - (sum / n) * (sum / n);
    CHECK(n >= 10000);
    CHECK(std::abs(var / (sigma * sigma) - 1.0) < 0.05);
    CHECK(observe(u, layout, sigma, 7) == observe(u, layout, sigma, 7));
}

TEST_CASE("recognition net shapes, clamping and determinism")
{
    RecogCfg cfg;
    cfg.n_obs = 12;
    cfg.hidden = {16, 16};
    cfg.Q = 3;
    nn::ParamStore store;
    init_recognition(store, cfg, 4);
    const Eigen::VectorXd y = randn(12, 5);
    const PosteriorGaussian a = infer_posterior(store, cfg, y);
    const PosteriorGaussian b = infer_posterior(store, cfg, y);
    CHECK(a.mu.size() == 3);
    CHECK(a.log_var.size() == 3);
    CHECK(a.mu == b.mu);
    CHECK(a.log_var == b.log_var);
    CHECK(a.mu.allFinite());
    CHECK(a.log_var.allFinite());

    store.value("recog.out.b").vec().tail(3).setConstant(50.0);
    CHECK(infer_posterior(store, cfg, y).log_var.maxCoeff() == doctest::Approx(4.0));
    store.value("recog.out.b").vec().tail(3).setConstant(-50.0);
    CHECK(infer_posterior(store, cfg, y).log_var.minCoeff() == doctest::Approx(-12.0));

    CHECK_THROWS_AS(infer_posterior(store, cfg, randn(11, 1)), std::invalid_argument);
}

TEST_CASE("closed-form KL against Monte Carlo")
{
    PosteriorGaussian prior{Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4)};
    CHECK(kl_standard_normal(prior) == 0.0);
    PosteriorGaussian shifted{Eigen::VectorXd::Constant(1, 1.7), Eigen::VectorXd::Zero(1)};
    CHECK(kl_standard_normal(shifted) == doctest::Approx(1.7 * 1.7 / 2.0).epsilon(1e-14));

    PosteriorGaussian q{Eigen::VectorXd(4), Eigen::VectorXd(4)};
    q.mu << 0.5, -1.2, 0.1, 2.0;
    q.log_var << -1.0, 0.3, -2.5, -0.2;
    const Eigen::VectorXd sd = (0.5 * q.log_var.array()).exp();
    fields::Rng rng = fields::make_rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int M = 100000;
    double acc = 0.0;
    for (int m = 0; m < M; ++m) {
        for (int j = 0; j < 4; ++j) {
            const double e = normal(rng);
            const double z = q.mu(j) + sd(j) * e;
            // log q - log p; the 2 pi terms cancel.
            acc += -0.5 * e * e - 0.5 * q.log_var(j) + 0.5 * z * z;
        }
    }
    const double mc = acc / M;
    const double exact = kl_standard_normal(q);
    CHECK(std::abs(mc - exact) / exact < 0.02);
}

TEST_CASE("Monte-Carlo ELBO agrees with the conjugate closed form and bounds the evidence")
{
    const int n = 8;
    const int Q = 4;
    const double sigma = 0.5;
    const Eigen::MatrixXd G = random_matrix(n, Q, 21, 1.0 / std::sqrt(n));
    const Eigen::VectorXd y = G * randn(Q, 22) + sigma * randn(n, 23);
    const Conjugate post = conjugate_posterior(G, sigma, y);
    const double evidence = log_evidence(G, sigma, y);

    PosteriorGaussian q{post.mean + 0.3 * randn(Q, 24), (post.cov.diagonal().array().log() + 0.4).matrix()};
    RecogCfg rcfg;
    rcfg.n_obs = n;
    nn::ParamStore store = pinned_posterior(rcfg, q);
    ElboCfg ecfg{sigma, 100000};
    const std::vector<Eigen::VectorXd> Y{y};
    const double mc = elbo_value(store, rcfg, ecfg, linear_forward(G), Y, 5);
    const double exact = analytic_elbo(G, sigma, y, q);
    CHECK(std::abs(mc - exact) < 0.03);
    CHECK(evidence - exact >= -1e-9);

    // Orthogonal columns make the exact posterior diagonal, so the bound is tight.
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(n, Q, 25, 1.0));
    Eigen::MatrixXd U = qr.householderQ() * Eigen::MatrixXd::Identity(n, Q);
    U *= Eigen::Vector4d(0.5, 1.0, 2.0, 3.0).asDiagonal();
    const Conjugate exact_post = conjugate_posterior(U, sigma, y);
    const PosteriorGaussian tight{exact_post.mean, exact_post.cov.diagonal().array().log().matrix()};
    CHECK(std::abs(analytic_elbo(U, sigma, y, tight) - log_evidence(U, sigma, y)) < 1e-9);
    nn::ParamStore tight_store = pinned_posterior(rcfg, tight);
    const double tight_mc = elbo_value(tight_store, rcfg, ecfg, linear_forward(U), Y, 6);
    CHECK(std::abs(tight_mc - log_evidence(U, sigma, y)) < 0.03);
}

TEST_CASE("ELBO gradient with common random numbers")
{
    RecogCfg rcfg;
    rcfg.n_obs = 5;
    rcfg.hidden = {16};
    rcfg.Q = 3;
    rcfg.activation = nn::Activation::Tanh;
    const ElboCfg ecfg{0.3, 4};
    const ForwardMap fwd = linear_forward(random_matrix(5, 3, 31, 0.5));
    std::vector<Eigen::VectorXd> Y;
    for (std::uint64_t k = 0; k < 3; ++k) {
        Y.push_back(randn(5, 40 + k));
    }
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        nn::ParamStore store;
        init_recognition(store, rcfg, seed);
        const nn::LossFn loss = [&](nn::ParamStore& s, bool with_grad) {
            nn::Tape tape;
            nn::Forward f{tape, s, true, true};
            const ElboTerms t = elbo(f, rcfg, ecfg, fwd, Y, 99 + seed);
            if (with_grad) {
                tape.backward(t.elbo);
            }
            return t.elbo.value()[0];
        };
        const nn::GradCheckResult r = nn::grad_check(loss, store);
        INFO("worst " << r.worst_param << "[" << r.worst_index << "]");
        CHECK(r.max_rel_error < 1e-4);
    }

    nn::ParamStore store;
    init_recognition(store, rcfg, 7);
    CHECK(elbo_value(store, rcfg, ecfg, fwd, Y, 3) == elbo_value(store, rcfg, ecfg, fwd, Y, 3));
    CHECK(elbo_value(store, rcfg, ecfg, fwd, Y, 3) != elbo_value(store, rcfg, ecfg, fwd, Y, 4));
}

TEST_CASE("amortized posterior recovers the conjugate answer and tightens with less noise")
{
    const int n = 8;
    const int Q = 4;
    const Eigen::MatrixXd G = random_matrix(n, Q, 51, 1.0 / std::sqrt(n));
    RecogCfg rcfg;
    rcfg.n_obs = n;
    rcfg.hidden = {64, 64};
    rcfg.Q = Q;
    VaeTrainCfg tcfg;
    tcfg.epochs = 20;
    tcfg.lr0 = 3e-3;
    tcfg.seed = 8;

    double previous = INFINITY;
    for (const double sigma : {0.05, 0.02, 0.01, 0.005}) {
        std::vector<Eigen::VectorXd> Y;
        for (std::uint64_t k = 0; k < 1000; ++k) {
            Y.push_back(G * randn(Q, 1000 + k) + sigma * randn(n, 5000 + k));
        }
        nn::ParamStore init;
        init_recognition(init, rcfg, 3);
        const VaeTrainResult r = train_vae(init, rcfg, {sigma, 8}, linear_forward(G), Y, tcfg);
        CHECK(r.history.size() == 20);
        CHECK(r.history.back().elbo > r.history.front().elbo);
        nn::ParamStore trained = r.params;
        double mean_sd = 0.0;
        for (std::uint64_t k = 0; k < 10; ++k) {
            const Eigen::VectorXd y = G * randn(Q, 9000 + k) + sigma * randn(n, 9500 + k);
            const PosteriorGaussian q = infer_posterior(trained, rcfg, y);
            mean_sd += (0.5 * q.log_var.array()).exp().mean() / 10.0;
            if (sigma == 0.05) {
                const Conjugate post = conjugate_posterior(G, sigma, y);
                const Eigen::VectorXd sd = post.cov.diagonal().cwiseSqrt();
                INFO("mu " << q.mu.transpose() << " exact " << post.mean.transpose() << " sd " << sd.transpose());
                CHECK(((q.mu - post.mean).cwiseAbs().array() <= 3.0 * sd.array()).all());
            }
        }
        INFO("sigma " << sigma << " mean posterior sd " << mean_sd);
        CHECK(mean_sd < previous);
        previous = mean_sd;
    }
}

TEST_CASE("posterior field moments")
{
    const fem::Grid2D g = fem::build_grid(9, 9, fem::ElementKind::QuadBilinear);
    const fields::KleModel kle = fields::build_kle(g, 0.3, 0.0, 3);
    const Eigen::Vector3d z(0.4, -1.0, 0.2);
    const PosteriorGaussian point{z, Eigen::Vector3d::Constant(-40.0)};
    const FieldStats s = posterior_field_stats(kle, point, 16, 1);
    CHECK((s.mean - fields::sample_grf(kle, z)).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(s.var.maxCoeff() < 1e-12);

    const fields::KleModel one = fields::build_kle(g, 0.3, 0.0, 1);
    const PosteriorGaussian prior{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
    const int M = 200000;
    const FieldStats p = posterior_field_stats(one, prior, M, 2);
    for (int node = 0; node < g.num_nodes(); node += 7) {
        const double a2 = one.lambdas(0) * one.modes(node, 0) * one.modes(node, 0);
        const double mean = std::exp(a2 / 2.0);
        const double var = (std::exp(a2) - 1.0) * std::exp(a2);
        CHECK(std::abs(p.mean.data()[node] - mean) < 4.0 * std::sqrt(var / M) + 1e-12);
    }
    const FieldStats again = posterior_field_stats(one, prior, 100, 2);
    CHECK(again.mean == posterior_field_stats(one, prior, 100, 2).mean);
    CHECK_THROWS_AS(posterior_field_stats(one, prior, 0, 2), std::invalid_argument);
}

TEST_CASE("surrogate forward map and frozen surrogate")
{
    coef::SurrogateModel m;
    m.nodes = 9;
    m.basis_cfg.free_nx = m.basis_cfg.free_ny = 7;
    m.basis_cfg.channels = {4};
    m.basis_cfg.kernel = 3;
    m.basis_cfg.N = 3;
    m.coef_cfg.free_nx = m.coef_cfg.free_ny = 7;
    m.coef_cfg.channels = {4};
    m.coef_cfg.strides = {2};
    m.coef_cfg.kernel = 3;
    m.coef_cfg.fc = {8};
    m.coef_cfg.N = 3;
    galerkin::init_basis_net(m.basis, m.basis_cfg, 1);
    coef::init_coef_net(m.coef, m.coef_cfg, 2);
    const nn::ParamStore basis0 = m.basis;
    const nn::ParamStore coef0 = m.coef;

    const fem::Grid2D g = m.grid();
    const fields::KleModel kle = fields::build_kle(g, 0.3, 0.0, 4);
    const SensorLayout layout = uniform_layout(g, 3);
    const ForwardMap fwd = surrogate_forward_map(m, kle, layout);

    const Eigen::Vector4d z(0.3, -0.2, 1.0, 0.5);
    nn::Tape tape;
    nn::Tensor zt(nn::Shape{1, 4});
    zt.vec() = z;
    const nn::Var pred = fwd(tape, tape.leaf(zt));
    REQUIRE(pred.shape() == nn::Shape{1, 9});
    const Eigen::VectorXd u = coef::surrogate_predict(fields::sample_grf(kle, z), m);
    for (std::size_t k = 0; k < layout.size(); ++k) {
        CHECK(pred.value()[static_cast<std::int64_t>(k)] == doctest::Approx(u(layout.free_indices[k])).epsilon(1e-12));
    }

    RecogCfg rcfg;
    rcfg.n_obs = 9;
    rcfg.hidden = {8};
    rcfg.Q = 4;
    std::vector<Eigen::VectorXd> Y;
    for (std::uint64_t k = 0; k < 6; ++k) {
        Y.push_back(observe(coef::surrogate_predict(fields::sample_grf(kle, 60 + k), m), layout, 0.01, k));
    }
    nn::ParamStore init;
    init_recognition(init, rcfg, 5);
    VaeTrainCfg tcfg;
    tcfg.batch = 3;
    tcfg.epochs = 2;
    const VaeTrainResult r = train_vae(init, rcfg, {0.01, 2}, fwd, Y, tcfg);
    CHECK(r.history.size() == 2);
    CHECK(m.basis == basis0);
    CHECK(m.coef == coef0);
    CHECK(!(r.params == init));
}
