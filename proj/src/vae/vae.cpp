#include "cnnrom/vae/vae.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "cnnrom/nn/optim.hpp"

namespace cnnrom::vae {

namespace {

std::string hidden_name(std::size_t i)
{
    return "recog.fc" + std::to_string(i);
}

nn::Tensor to_tensor(const Eigen::MatrixXd& m)
{
    nn::Tensor t(nn::Shape{m.rows(), m.cols()});
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            t[i * m.cols() + j] = m(i, j);
        }
    }
    return t;
}

nn::Tensor stack_rows(std::span<const Eigen::VectorXd> Y)
{
    const auto n = Y.front().size();
    nn::Tensor t(nn::Shape{static_cast<std::int64_t>(Y.size()), n});
    for (std::size_t b = 0; b < Y.size(); ++b) {
        if (Y[b].size() != n) {
            throw std::invalid_argument("vae: observation vectors differ in length");
        }
        Eigen::Map<Eigen::VectorXd>(t.data() + static_cast<std::int64_t>(b) * n, n) = Y[b];
    }
    return t;
}

nn::Tensor standard_normal(nn::Shape shape, std::uint64_t seed)
{
    nn::Tensor t(std::move(shape));
    fields::Rng rng = fields::make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::int64_t i = 0; i < t.size(); ++i) {
        t[i] = normal(rng);
    }
    return t;
}

}  // namespace

SensorLayout uniform_layout(const fem::Grid2D& grid, int s)
{
    const int fx = grid.free_nx();
    const int fy = grid.free_ny();
    if (s < 1 || s > fx || s > fy) {
        throw std::invalid_argument("uniform_layout: need 1 <= s <= free nodes per axis, got s = " +
                                    std::to_string(s));
    }
    auto pick = [s](int k, int n) {
        return static_cast<int>(std::lround((k + 0.5) * n / s - 0.5));
    };
    SensorLayout layout;
    for (int j = 0; j < s; ++j) {
        for (int i = 0; i < s; ++i) {
            layout.free_indices.push_back(pick(j, fy) * fx + pick(i, fx));
        }
    }
    return layout;
}

Eigen::VectorXd observe(const Eigen::VectorXd& u_free, const SensorLayout& layout, double sigma, std::uint64_t seed)
{
    if (sigma < 0.0) {
        throw std::invalid_argument("observe: sigma must be >= 0");
    }
    fields::Rng rng = fields::make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd y(static_cast<Eigen::Index>(layout.size()));
    for (std::size_t k = 0; k < layout.size(); ++k) {
        const int idx = layout.free_indices[k];
        if (idx < 0 || idx >= u_free.size()) {
            throw std::invalid_argument("observe: sensor outside the field");
        }
        y(static_cast<Eigen::Index>(k)) = u_free(idx) + sigma * normal(rng);
    }
    return y;
}

void RecogCfg::validate() const
{
    if (n_obs < 1 || Q < 1) {
        throw std::invalid_argument("RecogCfg: n_obs and Q must be >= 1");
    }
    for (const int w : hidden) {
        if (w < 1) {
            throw std::invalid_argument("RecogCfg: hidden widths must be >= 1");
        }
    }
    if (!(log_var_min < log_var_max)) {
        throw std::invalid_argument("RecogCfg: empty log-variance range");
    }
}

void ElboCfg::validate() const
{
    if (!(sigma_obs > 0.0) || mc_samples < 1) {
        throw std::invalid_argument("ElboCfg: need sigma_obs > 0 and mc_samples >= 1");
    }
}

void init_recognition(nn::ParamStore& store, const RecogCfg& cfg, std::uint64_t seed)
{
    cfg.validate();
    fields::Rng rng = fields::make_rng(seed);
    int width = cfg.n_obs;
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
        nn::init_linear(store, hidden_name(i), cfg.hidden[i], width, rng, cfg.activation);
        width = cfg.hidden[i];
    }
    nn::init_linear(store, "recog.out", 2 * cfg.Q, width, rng, nn::Activation::Identity);
}

PosteriorVars recognition_forward(nn::Forward& f, const RecogCfg& cfg, nn::Var Y)
{
    const nn::Shape& s = Y.shape();
    if (s.size() != 2 || s[1] != cfg.n_obs) {
        throw std::invalid_argument("recognition_forward: expected [B, " + std::to_string(cfg.n_obs) + "], got " +
                                    nn::shape_string(s));
    }
    nn::Var x = Y;
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
        x = nn::activation(nn::linear_layer(f, hidden_name(i), x), cfg.activation);
    }
    x = nn::linear_layer(f, "recog.out", x);
    return {nn::slice_cols(x, 0, cfg.Q), nn::clamp(nn::slice_cols(x, cfg.Q, cfg.Q), cfg.log_var_min, cfg.log_var_max)};
}

PosteriorGaussian infer_posterior(nn::ParamStore& store, const RecogCfg& cfg, const Eigen::VectorXd& Y)
{
    nn::Tape tape;
    nn::Forward f{tape, store, false, false};
    const PosteriorVars q = recognition_forward(f, cfg, tape.leaf(stack_rows(std::span<const Eigen::VectorXd>(&Y, 1))));
    return {q.mu.value().vec(), q.log_var.value().vec()};
}

ForwardMap linear_forward(Eigen::MatrixXd G)
{
    const nn::Tensor W = to_tensor(G);
    const nn::Tensor b(nn::Shape{G.rows()});
    return [W, b](nn::Tape& tape, nn::Var z) { return nn::linear(z, tape.leaf(W), tape.leaf(b)); };
}

ForwardMap surrogate_forward_map(const coef::SurrogateModel& model, const fields::KleModel& kle,
                                 const SensorLayout& layout)
{
    const fem::Grid2D g = model.grid();
    if (kle.grid.nx() != g.nx() || kle.grid.ny() != g.ny()) {
        throw std::invalid_argument("surrogate_forward_map: KLE and surrogate grids differ");
    }
    Eigen::MatrixXd B(g.num_free(), kle.Q);
    for (int k = 0; k < g.num_free(); ++k) {
        B.row(k) = kle.modes.row(g.free_node(k)).cwiseProduct(kle.lambdas.cwiseSqrt().transpose());
    }
    const nn::Tensor W = to_tensor(B);
    const nn::Tensor bias(nn::Shape{g.num_free()}, kle.m);
    std::vector<std::int64_t> cols(layout.free_indices.begin(), layout.free_indices.end());
    const nn::Shape field{g.free_ny(), g.free_nx()};
    return [&model, W, bias, cols, field](nn::Tape& tape, nn::Var z) {
        const nn::Var K = nn::exp(nn::linear(z, tape.leaf(W), tape.leaf(bias)));
        const nn::Var u = coef::surrogate_forward(tape, model, nn::reshape(K, {z.shape()[0], 1, field[0], field[1]}));
        return nn::gather_cols(u, cols);
    };
}

double kl_standard_normal(const PosteriorGaussian& q)
{
    return 0.5 * (q.log_var.array().exp() + q.mu.array().square() - 1.0 - q.log_var.array()).sum();
}

double gaussian_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& pred, double sigma)
{
    const double n = static_cast<double>(y.size());
    return -0.5 * (y - pred).squaredNorm() / (sigma * sigma) - 0.5 * n * std::log(2.0 * std::numbers::pi * sigma * sigma);
}

ElboTerms elbo(nn::Forward& f, const RecogCfg& rcfg, const ElboCfg& ecfg, const ForwardMap& forward,
               std::span<const Eigen::VectorXd> Y, std::uint64_t seed)
{
    ecfg.validate();
    if (Y.empty()) {
        throw std::invalid_argument("elbo: empty batch");
    }
    nn::Tape& t = f.tape;
    const auto B = static_cast<std::int64_t>(Y.size());
    const std::int64_t S = ecfg.mc_samples;
    const nn::Var y = t.leaf(stack_rows(Y));
    const PosteriorVars q = recognition_forward(f, rcfg, y);

    const nn::Var eps = t.leaf(standard_normal(nn::Shape{B * S, rcfg.Q}, seed));
    const nn::Var mu = nn::repeat_rows(q.mu, S);
    const nn::Var sd = nn::exp(nn::scale(nn::repeat_rows(q.log_var, S), 0.5));
    const nn::Var z = nn::add(mu, nn::mul(sd, eps));
    const nn::Var pred = forward(t, z);
    if (pred.shape().size() != 2 || pred.shape()[0] != B * S || pred.shape()[1] != rcfg.n_obs) {
        throw std::invalid_argument("elbo: forward map returned " + nn::shape_string(pred.shape()));
    }
    const double s2 = ecfg.sigma_obs * ecfg.sigma_obs;
    const double log_norm = -0.5 * static_cast<double>(rcfg.n_obs) * std::log(2.0 * std::numbers::pi * s2);
    const nn::Var sq = nn::sum(nn::square(nn::sub(nn::repeat_rows(y, S), pred)));
    const nn::Var loglik = nn::add_scalar(nn::scale(sq, -0.5 / (s2 * static_cast<double>(B * S))), log_norm);

    const nn::Var kl_terms =
        nn::sub(nn::add(nn::exp(q.log_var), nn::square(q.mu)), nn::add_scalar(q.log_var, 1.0));
    const nn::Var kl = nn::scale(nn::sum(kl_terms), 0.5 / static_cast<double>(B));
    return {nn::sub(loglik, kl), loglik, kl};
}

VaeTrainResult train_vae(nn::ParamStore init, const RecogCfg& rcfg, const ElboCfg& ecfg, const ForwardMap& forward,
                         std::span<const Eigen::VectorXd> Y, const VaeTrainCfg& cfg,
                         const std::function<void(const VaeHistory&)>& hook)
{
    rcfg.validate();
    ecfg.validate();
    if (cfg.batch < 1 || cfg.epochs < 0 || !(cfg.lr0 > 0.0)) {
        throw std::invalid_argument("VaeTrainCfg: need batch >= 1, epochs >= 0, lr0 > 0");
    }
    if (Y.empty()) {
        throw std::invalid_argument("train_vae: no observations");
    }
    VaeTrainResult res{std::move(init), {}};
    const std::size_t n = Y.size();
    const std::size_t per_epoch = (n + static_cast<std::size_t>(cfg.batch) - 1) / static_cast<std::size_t>(cfg.batch);
    const nn::CosineSchedule sched{cfg.lr0, std::max<std::int64_t>(1, static_cast<std::int64_t>(per_epoch) * cfg.epochs)};
    nn::Adam adam;
    std::vector<std::size_t> order(n);
    std::vector<Eigen::VectorXd> batch;
    std::int64_t step = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        fields::Rng rng = fields::make_rng(fields::derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = n; i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(order[i - 1], order[pick(rng)]);
        }
        double elbo_sum = 0.0;
        double kl_sum = 0.0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch));
            batch.clear();
            for (std::size_t k = start; k < end; ++k) {
                batch.push_back(Y[order[k]]);
            }
            res.params.zero_grad();
            nn::Tape tape;
            nn::Forward f{tape, res.params, true, true};
            const ElboTerms terms = elbo(f, rcfg, ecfg, forward, batch,
                                         fields::derive_seed(cfg.seed ^ 0x5eedULL, static_cast<std::uint64_t>(step)));
            const double value = terms.elbo.value()[0];
            if (!std::isfinite(value)) {
                throw std::runtime_error("train_vae: ELBO is not finite at epoch " + std::to_string(epoch));
            }
            tape.backward(nn::scale(terms.elbo, -1.0));
            adam.step(res.params, nn::cosine_lr(step, sched));
            ++step;
            elbo_sum += value * static_cast<double>(end - start);
            kl_sum += terms.kl.value()[0] * static_cast<double>(end - start);
        }
        const VaeHistory h{epoch, elbo_sum / static_cast<double>(n), kl_sum / static_cast<double>(n)};
        res.history.push_back(h);
        if (hook) {
            hook(h);
        }
    }
    return res;
}

FieldStats posterior_field_stats(const fields::KleModel& kle, const PosteriorGaussian& q, int M, std::uint64_t seed)
{
    if (M < 1) {
        throw std::invalid_argument("posterior_field_stats: M must be >= 1");
    }
    if (q.mu.size() != kle.Q || q.log_var.size() != kle.Q) {
        throw std::invalid_argument("posterior_field_stats: posterior dimension differs from the KLE");
    }
    const Eigen::VectorXd sd = (0.5 * q.log_var.array()).exp();
    fields::Rng rng = fields::make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index nn_ = kle.grid.num_nodes();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(nn_);
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(nn_);
    Eigen::VectorXd z(kle.Q);
    for (int m = 0; m < M; ++m) {
        for (int j = 0; j < kle.Q; ++j) {
            z(j) = q.mu(j) + sd(j) * normal(rng);
        }
        const Eigen::VectorXd K = fields::kle_log_field(kle, z).array().exp();
        const Eigen::VectorXd delta = K - mean;
        mean += delta / (m + 1);
        m2 += delta.cwiseProduct(K - mean);
    }
    const Eigen::VectorXd var = m2 / M;
    FieldStats out{fem::FieldNodal(kle.grid.ny(), kle.grid.nx()), fem::FieldNodal(kle.grid.ny(), kle.grid.nx())};
    Eigen::Map<Eigen::VectorXd>(out.mean.data(), nn_) = mean;
    Eigen::Map<Eigen::VectorXd>(out.var.data(), nn_) = var;
    return out;
}

}  // namespace cnnrom::vae
