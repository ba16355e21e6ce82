#include "cnnrom/io/cli.hpp"

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "cnnrom/fem/parallel.hpp"
#include "cnnrom/fem/solve.hpp"
#include "cnnrom/fields/channels.hpp"
#include "cnnrom/fields/kle.hpp"
#include "cnnrom/io/checkpoint.hpp"
#include "cnnrom/io/config.hpp"
#include "cnnrom/io/dataset_store.hpp"
#include "cnnrom/io/pgm.hpp"
#include "cnnrom/io/report.hpp"
#include "cnnrom/io/romt.hpp"
#include "cnnrom/pod/pod.hpp"

namespace cnnrom::io {

namespace fs = std::filesystem;

namespace {

// Recommended desk-scale training defaults.
galerkin::TrainCfg default_train()
{
    galerkin::TrainCfg t;
    t.batch = 16;
    t.lr0 = 3e-3;
    t.augment = true;
    return t;
}

struct Context {
    std::ostream& out;
    std::ostream& err;
    fs::path dir;

    void log(Json event) const { err << event.dump() << '\n'; }
};

using Runner = std::function<int(const RunConfig&, Context&)>;

struct Command {
    std::string name;
    std::string help;
    Json defaults;
    Runner run;
};

Json without_grid(Json j)
{
    j.erase("free_nx");
    j.erase("free_ny");
    return j;
}

Json data_ref()
{
    return {{"path", "runs/data"}, {"label_noise", 0.0}, {"noise_seed", 0u}};
}

LoadedDataset load_data(const RunConfig& c, const Context& ctx)
{
    LoadedDataset d = read_dataset(c.get<std::string>("data.path"), c.get<double>("data.label_noise"),
                                   c.get<std::uint64_t>("data.noise_seed"));
    ctx.log({{"event", "dataset"},
             {"path", c.get<std::string>("data.path")},
             {"train", d.data.train.size()},
             {"test", d.data.test.size()}});
    if (d.data.train.empty() || d.data.test.empty()) {
        throw std::runtime_error("dataset needs both train and test samples");
    }
    return d;
}

fem::FieldNodal to_field(const Eigen::VectorXd& free, const fem::Grid2D& g)
{
    return fem::extend_from_free(free, g);
}

Table history_table(const galerkin::TrainResult& r)
{
    Table t{{"epoch", "train_loss", "eps_test", "lr", "skipped", "monitor_cond"}, {}};
    for (const galerkin::EpochRecord& e : r.history) {
        t.rows.push_back({std::int64_t{e.epoch}, e.train_loss, e.eps_test, e.lr, std::int64_t{e.skipped}, e.monitor_cond});
    }
    return t;
}

galerkin::EpochHook epoch_logger(const Context& ctx)
{
    return [&ctx](const galerkin::EpochRecord& e) {
        ctx.log({{"event", "epoch"},
                 {"epoch", e.epoch},
                 {"train_loss", e.train_loss},
                 {"eps_test", e.eps_test},
                 {"lr", e.lr},
                 {"skipped", e.skipped}});
    };
}

int run_gen_field(const RunConfig& c, Context& ctx)
{
    const int nodes = c.get<int>("field.nodes");
    const fem::Grid2D g = fem::build_grid(nodes, nodes, fem::element_kind_from_string(c.get<std::string>("field.element")));
    const std::string kind = c.get<std::string>("field.kind");
    const auto seed = c.get<std::uint64_t>("field.seed");
    std::optional<fields::KleModel> kle;
    if (kind == "kle") {
        kle = fields::build_kle(g, c.get<double>("field.kle.l"), c.get<double>("field.kle.m"), c.get<int>("field.kle.Q"));
    } else if (kind != "binomial" && kind != "channel") {
        throw ConfigError("field.kind must be binomial, kle or channel");
    }
    fields::BinomialProcessCfg bin;
    bin.n = c.get<int>("field.binomial.n");
    bin.r = c.get<double>("field.binomial.r");
    bin.kappa0 = c.get<double>("field.binomial.kappa0");
    bin.kappa1 = c.get<double>("field.binomial.kappa1");
    bin.validate();
    const int count = c.get<int>("field.count");
    for (int i = 0; i < count; ++i) {
        const std::uint64_t s = fields::derive_seed(seed, static_cast<std::uint64_t>(i));
        fem::FieldNodal K;
        if (kle) {
            K = fields::sample_grf(*kle, s);
        } else if (kind == "channel") {
            K = fields::synth_channel_image(nodes, c.get<int>("field.channel.count"), c.get<double>("field.channel.width"), s);
        } else {
            K = fields::sample_binomial_field(bin, g, s);
        }
        const std::string stem = "field_" + std::to_string(i);
        nn::Tensor t(nn::Shape{K.rows(), K.cols()});
        std::copy_n(K.data(), K.size(), t.data());
        save_tensor(ctx.dir / (stem + ".romt"), t);
        emit_pgm(K, ctx.dir / (stem + ".pgm"));
    }
    ctx.out << "wrote " << count << " fields to " << ctx.dir.string() << '\n';
    return kExitOk;
}

int run_gen_data(const RunConfig& c, Context& ctx)
{
    galerkin::GenCfg cfg;
    from_json(c.section("data"), cfg);
    cfg.validate();
    ctx.log({{"event", "generate"}, {"samples", cfg.num_train + cfg.num_test}, {"workers", fem::worker_count()}});
    const Json m = gen_data(cfg, ctx.dir);
    ctx.out << "train " << m.at("num_train") << " test " << m.at("num_test") << " failures "
            << m.at("failures").size() << '\n';
    return kExitOk;
}

int run_train_basis(const RunConfig& c, Context& ctx)
{
    const LoadedDataset d = load_data(c, ctx);
    galerkin::BasisNetCfg net;
    from_json(c.section("basis"), net);
    net.free_nx = net.free_ny = d.cfg.nodes - 2;
    galerkin::TrainCfg tc;
    from_json(c.section("train"), tc);
    nn::ParamStore init;
    galerkin::init_basis_net(init, net, c.get<std::uint64_t>("init_seed"));
    const galerkin::TrainResult r = galerkin::train_basis(init, net, tc, d.data.train, d.data.test, epoch_logger(ctx));
    const Json extra{{"best_epoch", r.best_epoch}};
    save_basis(ctx.dir / "basis.romk", r.last, net, d.cfg.nodes, d.cfg.element, extra);
    save_basis(ctx.dir / "basis_best.romk", r.best, net, d.cfg.nodes, d.cfg.element, extra);
    emit_report(history_table(r), ctx.dir / "history.csv");
    ctx.out << "eps_test final " << format_cell(r.history.back().eps_test) << " best "
            << format_cell(r.history[static_cast<std::size_t>(r.best_epoch)].eps_test) << " (epoch " << r.best_epoch
            << ")\n";
    return kExitOk;
}

int run_train_coef(const RunConfig& c, Context& ctx)
{
    const LoadedDataset d = load_data(c, ctx);
    BasisCheckpoint basis = load_basis(c.get<std::string>("basis"));
    if (basis.nodes != d.cfg.nodes || basis.element != d.cfg.element) {
        throw std::runtime_error("basis checkpoint was trained on a different grid than the dataset");
    }
    coef::CoefNetCfg net;
    from_json(c.section("coef"), net);
    net.free_nx = net.free_ny = d.cfg.nodes - 2;
    net.N = basis.cfg.N;
    galerkin::TrainCfg tc;
    from_json(c.section("train"), tc);
    nn::ParamStore init;
    coef::init_coef_net(init, net, c.get<std::uint64_t>("init_seed"));
    const galerkin::TrainResult r =
        coef::train_coef(init, net, basis.params, basis.cfg, tc, d.data.train, d.data.test, epoch_logger(ctx));
    const Json extra{{"best_epoch", r.best_epoch}};
    save_coef(ctx.dir / "coef.romk", r.last, net, d.cfg.nodes, d.cfg.element, extra);
    save_coef(ctx.dir / "coef_best.romk", r.best, net, d.cfg.nodes, d.cfg.element, extra);
    emit_report(history_table(r), ctx.dir / "history.csv");
    ctx.out << "eps_test final " << format_cell(r.history.back().eps_test) << '\n';
    return kExitOk;
}

int run_pod(const RunConfig& c, Context& ctx)
{
    const LoadedDataset d = load_data(c, ctx);
    const std::vector<int> Ns = c.get<std::vector<int>>("Ns");
    Eigen::MatrixXd S(d.data.train.front().u.size(), static_cast<Eigen::Index>(d.data.train.size()));
    for (std::size_t i = 0; i < d.data.train.size(); ++i) {
        S.col(static_cast<Eigen::Index>(i)) = d.data.train[i].u;
    }
    std::vector<fem::FemSystem> systems;
    std::vector<Eigen::VectorXd> refs;
    for (const galerkin::Sample& s : d.data.test) {
        systems.push_back(s.system);
        refs.push_back(s.u);
    }
    const auto curve = pod::pod_error_curve(S, systems, refs, Ns);
    Table t{{"N", "eps_test"}, {}};
    for (const pod::PodCurvePoint& p : curve) {
        t.rows.push_back({std::int64_t{p.N}, p.eps_test});
    }
    emit_report(t, ctx.dir / "pod.csv");
    ctx.out << to_csv(t);
    return kExitOk;
}

int run_eval(const RunConfig& c, Context& ctx)
{
    const LoadedDataset d = load_data(c, ctx);
    const fem::Grid2D g = fem::build_grid(d.cfg.nodes, d.cfg.nodes, d.cfg.element);
    const std::string coef_path = c.get<std::string>("coef");
    std::vector<Eigen::VectorXd> pred;
    Table t{{"model", "N", "eps_test", "num_test"}, {}};
    if (coef_path.empty()) {
        BasisCheckpoint b = load_basis(c.get<std::string>("basis"));
        const galerkin::BasisEval ev = galerkin::evaluate_basis(b.params, b.cfg, d.data.test);
        pred = ev.predictions;
        t.rows.push_back({std::string("basis+galerkin"), std::int64_t{b.cfg.N}, ev.eps_test,
                          static_cast<std::int64_t>(d.data.test.size())});
    } else {
        const coef::SurrogateModel m = load_surrogate(c.get<std::string>("basis"), coef_path);
        std::vector<fem::FieldNodal> Ks;
        for (const galerkin::Sample& s : d.data.test) {
            Ks.push_back(s.K);
        }
        pred = coef::surrogate_predict(Ks, m);
        t.rows.push_back({std::string("surrogate"), std::int64_t{m.basis_cfg.N},
                          coef::evaluate_surrogate(m, d.data.test), static_cast<std::int64_t>(d.data.test.size())});
    }
    emit_report(t, ctx.dir / "eval.csv");
    const int images = std::min<int>(c.get<int>("images"), static_cast<int>(pred.size()));
    for (int i = 0; i < images; ++i) {
        const std::string stem = "test_" + std::to_string(i);
        emit_pgm(to_field(pred[static_cast<std::size_t>(i)], g), ctx.dir / (stem + "_pred.pgm"));
        emit_pgm(to_field(d.data.test[static_cast<std::size_t>(i)].u, g), ctx.dir / (stem + "_ref.pgm"));
    }
    ctx.out << to_csv(t);
    return kExitOk;
}

int run_msfem(const RunConfig& c, Context& ctx)
{
    const int n = c.get<int>("fine_nodes");
    const fem::Grid2D fine = fem::build_grid(n, n, fem::ElementKind::QuadBilinear);
    const std::string kind = c.get<std::string>("field.kind");
    const auto seed = c.get<std::uint64_t>("field.seed");
    fem::FieldNodal K;
    if (kind == "channel") {
        K = fields::synth_channel_image(n, c.get<int>("field.channel.count"), c.get<double>("field.channel.width"), seed);
    } else if (kind == "kle") {
        K = fields::sample_grf(fields::build_kle(fine, c.get<double>("field.kle.l"), 0.0, c.get<int>("field.kle.Q")), seed);
    } else {
        throw ConfigError("field.kind must be channel or kle");
    }
    emit_pgm(K, ctx.dir / "field.pgm");

    msfem::LocalBasisFn provider = msfem::direct_local_basis();
    int fallbacks = 0;
    std::optional<BasisCheckpoint> net;
    if (const std::string path = c.get<std::string>("basis"); !path.empty()) {
        net = load_basis(path);
        provider = msfem::net_local_basis(net->params, net->cfg, msfem::direct_local_basis(), &fallbacks);
    }
    const std::vector<std::string> sources = c.get<std::vector<std::string>>("sources");
    std::map<std::string, Eigen::VectorXd> refs;
    for (const std::string& s : sources) {
        refs[s] = fem::solve_linear(fem::assemble_diffusion(K, fine, msfem::make_source(s))).u;
    }
    Table t{{"elements", "source", "rel_error", "local_solves", "fallbacks"}, {}};
    for (const int E : c.get<std::vector<int>>("elements")) {
        fallbacks = 0;
        const msfem::MsBasisSet set =
            msfem::build_ms_basis(K, fine, msfem::CoarseMesh::make(n, E), {c.get<int>("ring")}, provider);
        for (const std::string& s : sources) {
            const msfem::MsSolution sol = msfem::msfem_solve(set, msfem::make_source(s));
            const double err = msfem::relative_error(sol.u_fine, refs[s]);
            t.rows.push_back({std::int64_t{E}, s, err, std::int64_t{set.local_solves}, std::int64_t{fallbacks}});
            ctx.log({{"event", "msfem"}, {"elements", E}, {"source", s}, {"rel_error", err}});
            emit_pgm(to_field(sol.u_fine, fine), ctx.dir / ("u_" + s + "_E" + std::to_string(E) + ".pgm"));
        }
    }
    emit_report(t, ctx.dir / "msfem.csv");
    ctx.out << to_csv(t);
    return kExitOk;
}

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::uint64_t seed, double sd)
{
    fields::Rng rng = fields::make_rng(seed);
    std::normal_distribution<double> normal(0.0, sd);
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            m(i, j) = normal(rng);
        }
    }
    return m;
}

int run_invert(const RunConfig& c, Context& ctx)
{
    const std::string mode = c.get<std::string>("mode");
    const auto seed = c.get<std::uint64_t>("seed");
    const double sigma = c.get<double>("sigma_obs");
    const int num_obs = c.get<int>("num_obs");
    vae::RecogCfg rcfg;
    from_json(c.section("recog"), rcfg);
    const vae::ElboCfg ecfg{sigma, c.get<int>("mc_samples")};
    vae::VaeTrainCfg tcfg;
    tcfg.batch = c.get<int>("train.batch");
    tcfg.epochs = c.get<int>("train.epochs");
    tcfg.lr0 = c.get<double>("train.lr0");
    tcfg.seed = c.get<std::uint64_t>("train.seed");
    const auto hook = [&ctx](const vae::VaeHistory& h) {
        ctx.log({{"event", "epoch"}, {"epoch", h.epoch}, {"elbo", h.elbo}, {"kl", h.kl}});
    };
    Table hist{{"epoch", "elbo", "kl"}, {}};
    Table post{{"component", "mu", "sd", "reference_mu", "reference_sd"}, {}};

    if (mode == "toy") {
        const int n = c.get<int>("toy.n_obs");
        const int Q = c.get<int>("toy.Q");
        rcfg.n_obs = n;
        rcfg.Q = Q;
        const Eigen::MatrixXd G = gaussian_matrix(n, Q, fields::derive_seed(seed, 0), 1.0 / std::sqrt(n));
        auto draw = [&](int i) {
            const std::uint64_t s = fields::derive_seed(seed, static_cast<std::uint64_t>(i) + 1);
            return Eigen::VectorXd(G * gaussian_matrix(Q, 1, s, 1.0).col(0) +
                                   gaussian_matrix(n, 1, fields::derive_seed(s, 1), sigma).col(0));
        };
        std::vector<Eigen::VectorXd> Y;
        for (int i = 0; i < num_obs; ++i) {
            Y.push_back(draw(i));
        }
        nn::ParamStore init;
        vae::init_recognition(init, rcfg, c.get<std::uint64_t>("init_seed"));
        vae::VaeTrainResult r = vae::train_vae(init, rcfg, ecfg, vae::linear_forward(G), Y, tcfg, hook);
        const Eigen::VectorXd y = draw(num_obs);
        const vae::PosteriorGaussian q = vae::infer_posterior(r.params, rcfg, y);
        const Eigen::MatrixXd cov =
            (Eigen::MatrixXd::Identity(Q, Q) + G.transpose() * G / (sigma * sigma)).inverse();
        const Eigen::VectorXd mean = cov * G.transpose() * y / (sigma * sigma);
        for (int j = 0; j < Q; ++j) {
            post.rows.push_back({std::int64_t{j}, q.mu(j), std::exp(0.5 * q.log_var(j)), mean(j), std::sqrt(cov(j, j))});
        }
        for (const vae::VaeHistory& h : r.history) {
            hist.rows.push_back({std::int64_t{h.epoch}, h.elbo, h.kl});
        }
        save_checkpoint(ctx.dir / "recog.romk", r.params, {{"kind", "recog"}, {"config", to_json(rcfg)}});
    } else if (mode == "surrogate") {
        const coef::SurrogateModel model = load_surrogate(c.get<std::string>("surrogate.basis"), c.get<std::string>("surrogate.coef"));
        const fem::Grid2D g = model.grid();
        const fields::KleModel kle = fields::build_kle(g, c.get<double>("surrogate.kle.l"), c.get<double>("surrogate.kle.m"),
                                                       c.get<int>("surrogate.kle.Q"));
        const vae::SensorLayout layout = vae::uniform_layout(g, c.get<int>("surrogate.sensors"));
        rcfg.n_obs = static_cast<int>(layout.size());
        rcfg.Q = kle.Q;
        std::vector<Eigen::VectorXd> zs;
        std::vector<fem::FieldNodal> Ks;
        for (int i = 0; i <= num_obs; ++i) {
            zs.push_back(fields::draw_kle_coefficients(kle, fields::derive_seed(seed, static_cast<std::uint64_t>(i))));
            Ks.push_back(fields::sample_grf(kle, zs.back()));
        }
        const std::vector<Eigen::VectorXd> u = coef::surrogate_predict(Ks, model);
        std::vector<Eigen::VectorXd> Y;
        for (int i = 0; i <= num_obs; ++i) {
            Y.push_back(vae::observe(u[static_cast<std::size_t>(i)], layout, sigma,
                                     fields::derive_seed(seed ^ 0x0b5ULL, static_cast<std::uint64_t>(i))));
        }
        const Eigen::VectorXd y_test = Y.back();
        Y.pop_back();
        nn::ParamStore init;
        vae::init_recognition(init, rcfg, c.get<std::uint64_t>("init_seed"));
        vae::VaeTrainResult r =
            vae::train_vae(init, rcfg, ecfg, vae::surrogate_forward_map(model, kle, layout), Y, tcfg, hook);
        const vae::PosteriorGaussian q = vae::infer_posterior(r.params, rcfg, y_test);
        for (int j = 0; j < kle.Q; ++j) {
            post.rows.push_back({std::int64_t{j}, q.mu(j), std::exp(0.5 * q.log_var(j)), zs.back()(j), 0.0});
        }
        for (const vae::VaeHistory& h : r.history) {
            hist.rows.push_back({std::int64_t{h.epoch}, h.elbo, h.kl});
        }
        const vae::FieldStats st = vae::posterior_field_stats(kle, q, c.get<int>("stats_samples"), seed);
        emit_pgm(Ks.back(), ctx.dir / "K_true.pgm");
        emit_pgm(st.mean, ctx.dir / "K_mean.pgm");
        emit_pgm(st.var, ctx.dir / "K_var.pgm");
        save_checkpoint(ctx.dir / "recog.romk", r.params, {{"kind", "recog"}, {"config", to_json(rcfg)}});
    } else {
        throw ConfigError("mode must be toy or surrogate");
    }
    emit_report(hist, ctx.dir / "history.csv");
    emit_report(post, ctx.dir / "posterior.csv");
    ctx.out << to_csv(post);
    return kExitOk;
}

int run_gradcheck(const RunConfig& c, Context& ctx)
{
    galerkin::GateCfg cfg;
    from_json(c.section("gate"), cfg);
    const nn::GradCheckResult r = galerkin::basis_gradient_gate(cfg);
    constexpr double kGate = 1e-5;
    ctx.out << "max_rel_error " << format_cell(r.max_rel_error) << " worst " << r.worst_param << "["
            << r.worst_index << "] checked " << r.checked << '\n';
    return r.max_rel_error < kGate ? kExitOk : kExitFailure;
}

std::vector<Command> commands()
{
    const fields::BinomialProcessCfg bin;
    const Json binomial{{"n", bin.n}, {"r", bin.r}, {"kappa0", bin.kappa0}, {"kappa1", bin.kappa1}};
    const vae::RecogCfg recog;
    Json recog_json = to_json(recog);
    recog_json.erase("n_obs");
    recog_json.erase("Q");
    return {
        {"gen-field", "Sample random input fields and write them as ROMT and PGM",
         {{"out", "runs/gen-field"},
          {"field",
           {{"kind", "binomial"},
            {"nodes", 17},
            {"element", "quad"},
            {"count", 4},
            {"seed", 0u},
            {"binomial", binomial},
            {"kle", {{"l", 0.1}, {"m", 0.0}, {"Q", 20}}},
            {"channel", {{"count", 3}, {"width", 4.0}}}}}},
         run_gen_field},
        {"gen-data", "Generate a (K, u_h, A_h, F_h) dataset with manifest",
         {{"out", "runs/data"}, {"data", to_json(galerkin::GenCfg{})}}, run_gen_data},
        {"train-basis", "Train the Basis network through the Galerkin activation",
         {{"out", "runs/train-basis"},
          {"data", data_ref()},
          {"basis", without_grid(to_json(galerkin::BasisNetCfg{}))},
          {"train", to_json(default_train())},
          {"init_seed", 0u}},
         run_train_basis},
        {"train-coef", "Train the Coef network against a frozen Basis checkpoint",
         {{"out", "runs/train-coef"},
          {"data", data_ref()},
          {"basis", "runs/train-basis/basis.romk"},
          {"coef", [] {
               Json j = without_grid(to_json(coef::CoefNetCfg{}));
               j.erase("N");
               return j;
           }()},
          {"train", [] {
               galerkin::TrainCfg t = default_train();
               t.lr0 = 1e-3;
               return to_json(t);
           }()},
          {"init_seed", 0u}},
         run_train_coef},
        {"pod", "POD-Galerkin error curve (CSV: N,eps_test)",
         {{"out", "runs/pod"}, {"data", data_ref()}, {"Ns", {1, 5, 10, 20}}}, run_pod},
        {"eval", "Evaluate a Basis checkpoint (with Galerkin solve) or a full surrogate",
         {{"out", "runs/eval"},
          {"data", data_ref()},
          {"basis", "runs/train-basis/basis.romk"},
          {"coef", ""},
          {"images", 3}},
         run_eval},
        {"msfem", "Oversampled MsFEM on a synthetic field against the fine solution",
         {{"out", "runs/msfem"},
          {"fine_nodes", 65},
          {"elements", {4, 8, 16}},
          {"ring", 1},
          {"sources", {"exp-sum", "sin-sum"}},
          {"basis", ""},
          {"field",
           {{"kind", "channel"}, {"seed", 11u}, {"channel", {{"count", 3}, {"width", 4.0}}}, {"kle", {{"l", 0.1}, {"Q", 20}}}}}},
         run_msfem},
        {"invert", "Amortized variational inversion from sparse noisy sensors",
         {{"out", "runs/invert"},
          {"mode", "toy"},
          {"seed", 0u},
          {"init_seed", 0u},
          {"sigma_obs", 0.01},
          {"mc_samples", 8},
          {"num_obs", 512},
          {"stats_samples", 1024},
          {"recog", recog_json},
          {"train", {{"batch", 32}, {"epochs", 50}, {"lr0", 1e-3}, {"seed", 0u}}},
          {"toy", {{"n_obs", 8}, {"Q", 4}}},
          {"surrogate",
           {{"basis", "runs/train-basis/basis.romk"},
            {"coef", "runs/train-coef/coef.romk"},
            {"sensors", 15},
            {"kle", {{"l", 0.1}, {"m", 0.0}, {"Q", 20}}}}}},
         run_invert},
        {"gradcheck", "Full Basis-loss gradient against central differences (exit 0 iff < 1e-5)",
         {{"out", ""}, {"gate", to_json(galerkin::GateCfg{})}}, run_gradcheck},
    };
}

std::vector<int> parse_int_list(const std::string& text)
{
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw ConfigError("--Ns expects comma-separated integers, got '" + text + "'");
        }
    }
    return out;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    const std::vector<Command> cmds = commands();
    CLI::App app{"Reduced-order surrogates with CNN bases and Galerkin projection", "cnnrom"};
    app.require_subcommand(1);
    struct Flags {
        std::string config;
        std::vector<std::string> sets;
        std::string out;
        std::string Ns;
    };
    std::vector<Flags> flags(cmds.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        CLI::App* sub = app.add_subcommand(cmds[i].name, cmds[i].help);
        sub->add_option("--config", flags[i].config, "JSON or TOML run configuration");
        sub->add_option("--set", flags[i].sets, "Override one config key (key=value), repeatable");
        sub->add_option("--out", flags[i].out, "Output directory");
        if (cmds[i].name == "pod") {
            sub->add_option("--Ns", flags[i].Ns, "Comma-separated basis sizes");
        }
        subs.push_back(sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    for (std::size_t i = 0; i < cmds.size(); ++i) {
        if (!subs[i]->parsed()) {
            continue;
        }
        const Command& cmd = cmds[i];
        const Flags& f = flags[i];
        RunConfig cfg(cmd.defaults);
        try {
            if (!f.config.empty()) {
                cfg.merge_file(f.config);
            }
            for (const std::string& s : f.sets) {
                cfg.set(s);
            }
            if (!f.out.empty()) {
                cfg.merge({{"out", f.out}}, "--out");
            }
            if (!f.Ns.empty()) {
                cfg.merge({{"Ns", parse_int_list(f.Ns)}}, "--Ns");
            }
        } catch (const ConfigError& e) {
            err << "error: " << e.what() << "\n\n" << subs[i]->help();
            return kExitUsage;
        }
        Context ctx{out, err, cfg.get<std::string>("out")};
        try {
            if (!ctx.dir.empty()) {
                fs::create_directories(ctx.dir);
                cfg.write(ctx.dir / "config.json");
            }
            ctx.log({{"event", "start"}, {"command", cmd.name}});
            const int code = cmd.run(cfg, ctx);
            ctx.log({{"event", "done"}, {"command", cmd.name}, {"exit", code}});
            return code;
        } catch (const ConfigError& e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        } catch (const std::exception& e) {
            ctx.log({{"event", "failed"}, {"command", cmd.name}, {"error", e.what()}});
            err << "error: " << e.what() << '\n';
            return kExitFailure;
        }
    }
    return kExitUsage;
}

}  // namespace cnnrom::io
