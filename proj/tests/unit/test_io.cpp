#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "cnnrom/fem/parallel.hpp"
#include "cnnrom/io/checkpoint.hpp"
#include "cnnrom/io/cli.hpp"
#include "cnnrom/io/config.hpp"
#include "cnnrom/io/dataset_store.hpp"
#include "cnnrom/io/pgm.hpp"
#include "cnnrom/io/report.hpp"
#include "cnnrom/io/romt.hpp"

using namespace cnnrom;
using namespace cnnrom::io;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("cnnrom_" + tag + "_" + std::to_string(::getpid())))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text)
{
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    os << text;
}

bool same_bits(const nn::Tensor& a, const nn::Tensor& b)
{
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr)
{
    args.insert(args.begin(), "cnnrom");
    std::vector<const char*> argv;
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) {
        *out_text = out.str();
    }
    if (err_text) {
        *err_text = err.str();
    }
    return code;
}

galerkin::GenCfg tiny_gen()
{
    galerkin::GenCfg cfg;
    cfg.nodes = 9;
    cfg.num_train = 3;
    cfg.num_test = 1;
    cfg.seed = 17;
    return cfg;
}

}  // namespace

TEST_CASE("ROMT round trips")
{
    TempDir tmp("romt");
    nn::Tensor t(nn::Shape{3, 3});
    const double specials[] = {0.1, -0.0, 1e-310, std::numeric_limits<double>::max(), -3.5, 1.0 / 3.0, 7.0, 2e-300,
                               std::nan("")};
    std::copy(std::begin(specials), std::end(specials), t.data());
    save_tensor(tmp.path / "a.romt", t);
    CHECK(same_bits(load_tensor(tmp.path / "a.romt"), t));
    CHECK(fs::file_size(tmp.path / "a.romt") == 4 + 2 + 1 + 1 + 2 * 8 + 9 * 8);

    const nn::Tensor empty(nn::Shape{0, 4});
    save_tensor(tmp.path / "e.romt", empty);
    CHECK(load_tensor(tmp.path / "e.romt").shape() == nn::Shape{0, 4});

    nn::Tensor small(nn::Shape{2}, std::vector<double>{0.0, 255.0});
    save_tensor(tmp.path / "u8.romt", small, Dtype::U8);
    CHECK(load_tensor(tmp.path / "u8.romt").vec() == small.vec());
    nn::Tensor halfs(nn::Shape{2}, std::vector<double>{0.5, -2.25});
    save_tensor(tmp.path / "f32.romt", halfs, Dtype::F32);
    CHECK(load_tensor(tmp.path / "f32.romt").vec() == halfs.vec());

    const std::vector<std::uint64_t> ints{0, 1, std::numeric_limits<std::uint64_t>::max()};
    save_romt(tmp.path / "i.romt", encode_u64(ints));
    CHECK(decode_u64(load_romt(tmp.path / "i.romt")) == ints);
    CHECK_THROWS_AS(load_tensor(tmp.path / "i.romt"), FormatError);
    CHECK_THROWS_AS(decode_u64(load_romt(tmp.path / "a.romt")), FormatError);
}

TEST_CASE("ROMT rejects corrupt files")
{
    TempDir tmp("romt_bad");
    nn::Tensor t(nn::Shape{2, 2}, 1.5);
    save_tensor(tmp.path / "a.romt", t);
    std::string bytes = slurp(tmp.path / "a.romt");

    std::string bad = bytes;
    bad[0] = 'X';
    spit(tmp.path / "magic.romt", bad);
    CHECK_THROWS_AS(load_tensor(tmp.path / "magic.romt"), FormatError);

    spit(tmp.path / "short.romt", bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(load_tensor(tmp.path / "short.romt"), FormatError);

    spit(tmp.path / "long.romt", bytes + "x");
    CHECK_THROWS_AS(load_tensor(tmp.path / "long.romt"), FormatError);

    bad = bytes;
    bad[6] = 9;
    spit(tmp.path / "dtype.romt", bad);
    CHECK_THROWS_AS(load_tensor(tmp.path / "dtype.romt"), FormatError);

    CHECK_THROWS_AS(encode(nn::Tensor(nn::Shape{1}, 300.0), Dtype::U8), std::invalid_argument);
}

TEST_CASE("checkpoints keep parameters, buffers and metadata")
{
    TempDir tmp("ckpt");
    galerkin::BasisNetCfg cfg;
    cfg.free_nx = cfg.free_ny = 7;
    cfg.channels = {4, 4};
    cfg.kernel = 3;
    cfg.N = 2;
    cfg.activation = nn::Activation::Tanh;
    nn::ParamStore store;
    galerkin::init_basis_net(store, cfg, 3);
    save_basis(tmp.path / "b.romk", store, cfg, 9, fem::ElementKind::TriLinear, {{"note", "x"}});
    const BasisCheckpoint b = load_basis(tmp.path / "b.romk");
    CHECK(b.params == store);
    for (const auto& [name, entry] : store.entries()) {
        CHECK(b.params.at(name).trainable == entry.trainable);
    }
    CHECK(b.cfg.channels == cfg.channels);
    CHECK(b.cfg.activation == nn::Activation::Tanh);
    CHECK(b.nodes == 9);
    CHECK(b.element == fem::ElementKind::TriLinear);

    save_basis(tmp.path / "c.romk", b.params, b.cfg, 9, fem::ElementKind::TriLinear, {{"note", "x"}});
    CHECK(slurp(tmp.path / "b.romk") == slurp(tmp.path / "c.romk"));

    std::string bytes = slurp(tmp.path / "b.romk");
    spit(tmp.path / "t.romk", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(tmp.path / "t.romk"), FormatError);
    CHECK_THROWS_AS(load_surrogate(tmp.path / "b.romk", tmp.path / "b.romk"), FormatError);
}

TEST_CASE("dataset persistence")
{
    TempDir tmp("data");
    const galerkin::GenCfg cfg = tiny_gen();
    const galerkin::GeneratedData data = galerkin::generate_data(cfg);
    const Json m = write_dataset(tmp.path / "a", cfg, data);
    CHECK(m.at("samples").size() == 4);

    const LoadedDataset back = read_dataset(tmp.path / "a");
    REQUIRE(back.data.train.size() == 3);
    REQUIRE(back.data.test.size() == 1);
    for (std::size_t i = 0; i < 3; ++i) {
        const galerkin::Sample& s = back.data.train[i];
        CHECK(s.K == data.train[i].K);
        CHECK(s.u == data.train[i].u);
        CHECK(s.system.A == data.train[i].system.A);
        CHECK(s.system.F == data.train[i].system.F);
        const double res = (s.system.A.multiply(s.u) - s.system.F).norm() / s.system.F.norm();
        CHECK(res <= 1e-8);
    }
    CHECK(back.cfg.seed == cfg.seed);

    gen_data(cfg, tmp.path / "b");
    for (const auto& entry : fs::recursive_directory_iterator(tmp.path / "a")) {
        if (entry.is_regular_file()) {
            const fs::path rel = fs::relative(entry.path(), tmp.path / "a");
            CHECK(slurp(entry.path()) == slurp(tmp.path / "b" / rel));
        }
    }

    const LoadedDataset noisy = read_dataset(tmp.path / "a", 0.001, 5);
    CHECK(noisy.data.train[0].u != data.train[0].u);
    CHECK(noisy.data.test[0].u == data.test[0].u);
    CHECK(read_dataset(tmp.path / "a").data.train[0].u == data.train[0].u);

    fs::remove(tmp.path / "b" / "train" / "00001.F.romt");
    CHECK_THROWS_AS(read_dataset(tmp.path / "b"), DatasetError);
    save_tensor(tmp.path / "a" / "train" / "00002.u.romt", nn::Tensor(nn::Shape{5}));
    CHECK_THROWS_AS(read_dataset(tmp.path / "a"), DatasetError);
    CHECK_THROWS_AS(read_dataset(tmp.path / "missing"), DatasetError);
}

TEST_CASE("generation is independent of the worker count")
{
    galerkin::GenCfg cfg = tiny_gen();
    cfg.num_train = 5;
    ::setenv("ROM_THREADS", "1", 1);
    CHECK(fem::worker_count() == 1);
    const galerkin::GeneratedData serial = galerkin::generate_data(cfg);
    ::setenv("ROM_THREADS", "3", 1);
    CHECK(fem::worker_count() == 3);
    const galerkin::GeneratedData threaded = galerkin::generate_data(cfg);
    ::unsetenv("ROM_THREADS");
    REQUIRE(serial.train.size() == threaded.train.size());
    for (std::size_t i = 0; i < serial.train.size(); ++i) {
        CHECK(serial.train[i].u == threaded.train[i].u);
        CHECK(serial.train[i].K == threaded.train[i].K);
    }
}

TEST_CASE("TOML subset")
{
    const Json j = parse_toml(R"(# header
top = 1
name = "a # not a comment"
[train]
lr0 = 3e-3   # trailing
augment = true
channels = [8, 16, 32]
[data.kle]
Q = 20
nested.key = -2
)");
    CHECK(j.at("top") == 1);
    CHECK(j.at("name") == "a # not a comment");
    CHECK(j.at("train").at("lr0").get<double>() == 3e-3);
    CHECK(j.at("train").at("augment") == true);
    CHECK(j.at("train").at("channels") == Json::array({8, 16, 32}));
    CHECK(j.at("data").at("kle").at("Q") == 20);
    CHECK(j.at("data").at("kle").at("nested").at("key") == -2);

    CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("a = [1,\n2]\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("[[array.table]]\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("just words\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("when = 1979-05-27\n"), ConfigError);
}

TEST_CASE("run configs reject unknown keys and wrong types")
{
    TempDir tmp("cfg");
    RunConfig c({{"out", "x"}, {"seed", 0u}, {"train", {{"lr0", 1e-3}, {"epochs", 10}, {"list", {1, 2}}}}});
    c.set("train.lr0=2");
    CHECK(c.get<double>("train.lr0") == 2.0);
    CHECK(c.at("train.lr0").is_number_float());
    c.set("out=plain text");
    CHECK(c.get<std::string>("out") == "plain text");
    c.set("train.list=[3,4,5]");
    CHECK(c.get<std::vector<int>>("train.list") == std::vector<int>{3, 4, 5});
    CHECK_THROWS_AS(c.set("train.epochs=2.5"), ConfigError);
    CHECK_THROWS_AS(c.set("seed=-1"), ConfigError);
    CHECK_THROWS_AS(c.set("train.momentum=0.9"), ConfigError);
    CHECK_THROWS_AS(c.set("novalue"), ConfigError);
    CHECK_THROWS_AS(c.set("train.list=[1.5]"), ConfigError);

    spit(tmp.path / "a.json", R"({"train": {"epochs": 3}})");
    c.merge_file(tmp.path / "a.json");
    CHECK(c.get<int>("train.epochs") == 3);
    spit(tmp.path / "b.toml", "[train]\nbogus = 1\n");
    CHECK_THROWS_AS(c.merge_file(tmp.path / "b.toml"), ConfigError);
    spit(tmp.path / "c.yaml", "x: 1\n");
    CHECK_THROWS_AS(c.merge_file(tmp.path / "c.yaml"), ConfigError);

    c.write(tmp.path / "resolved.json");
    const Json r = Json::parse(slurp(tmp.path / "resolved.json"));
    CHECK(r.at("train").at("epochs") == 3);
    CHECK(c.section("train").at("list") == Json::array({3, 4, 5}));
}

TEST_CASE("config structs reject unknown keys")
{
    galerkin::TrainCfg t;
    from_json(Json{{"epochs", 7}}, t);
    CHECK(t.epochs == 7);
    CHECK(t.batch == 32);
    CHECK_THROWS_AS(from_json(Json{{"epoch", 7}}, t), std::invalid_argument);
    galerkin::GenCfg g;
    from_json(to_json(tiny_gen()), g);
    CHECK(to_json(g) == to_json(tiny_gen()));
    CHECK_THROWS_AS(from_json(Json{{"kle", {{"L", 1.0}}}}, g), std::invalid_argument);
}

TEST_CASE("CSV reports")
{
    TempDir tmp("csv");
    Table t{{"name", "value", "count"}, {}};
    emit_report(t, tmp.path / "empty.csv");
    CHECK(slurp(tmp.path / "empty.csv") == "name,value,count\n");

    const double x = 0.1 + 0.2;
    t.rows.push_back({std::string("a,b"), x, std::int64_t{-3}});
    t.rows.push_back({std::string("say \"hi\""), 1e-300, std::int64_t{0}});
    t.rows.push_back({std::string("line\nbreak"), -0.0, std::int64_t{7}});
    emit_report(t, tmp.path / "t.csv");
    const auto rows = read_csv(tmp.path / "t.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[1][0] == "a,b");
    CHECK(rows[2][0] == "say \"hi\"");
    CHECK(rows[3][0] == "line\nbreak");
    CHECK(std::stod(rows[1][1]) == x);
    CHECK(rows[1][1] == "0.30000000000000004");
    CHECK(rows[1][2] == "-3");
    CHECK_THROWS_AS(emit_report(Table{{"a"}, {{std::int64_t{1}, std::int64_t{2}}}}, tmp.path / "x.csv"),
                    std::invalid_argument);
}

TEST_CASE("PGM images")
{
    TempDir tmp("pgm");
    const fem::FieldNodal flat = fem::FieldNodal::Constant(3, 4, 2.5);
    for (const std::uint8_t p : pgm_pixels(flat)) {
        CHECK(p == 128);
    }
    fem::FieldNodal f(2, 3);
    f << 0.0, 1.0, 2.0,   // y = 0
        3.0, 4.0, 10.0;   // y = h
    const auto px = pgm_pixels(f);
    CHECK(px[0] == static_cast<std::uint8_t>(std::lround(255.0 * 0.3)));
    CHECK(px[2] == 255);
    CHECK(px[3] == 0);
    emit_pgm(f, tmp.path / "f.pgm");
    const std::string bytes = slurp(tmp.path / "f.pgm");
    CHECK(bytes.rfind("P5\n3 2\n255\n", 0) == 0);
    CHECK(bytes.size() == std::string("P5\n3 2\n255\n").size() + 6);
    f(0, 0) = INFINITY;
    CHECK_THROWS_AS(pgm_pixels(f), std::invalid_argument);
}

TEST_CASE("command-line contract")
{
    TempDir tmp("cli");
    std::string out;
    std::string err;
    CHECK(run_cli({}, &out, &err) == kExitUsage);
    CHECK(run_cli({"frobnicate"}, &out, &err) == kExitUsage);
    CHECK(run_cli({"pod", "--no-such-flag"}, &out, &err) == kExitUsage);
    CHECK(err.find("Usage") != std::string::npos);
    CHECK(run_cli({"--help"}, &out, &err) == kExitOk);
    CHECK(out.find("gradcheck") != std::string::npos);
    CHECK(run_cli({"gradcheck", "--set", "gate.colour=1"}, &out, &err) == kExitUsage);

    spit(tmp.path / "tiny.toml", "[gate]\nnodes = 5\nN = 2\nseed = 3\n");
    CHECK(run_cli({"gradcheck", "--config", (tmp.path / "tiny.toml").string()}, &out, &err) == kExitOk);
    CHECK(out.rfind("max_rel_error ", 0) == 0);

    const fs::path data = tmp.path / "data";
    CHECK(run_cli({"gen-data", "--out", data.string(), "--set", "data.nodes=9", "--set", "data.num_train=4", "--set",
                   "data.num_test=2"},
                  &out, &err) == kExitOk);
    CHECK(fs::exists(data / "manifest.json"));
    CHECK(fs::exists(data / "config.json"));
    const fs::path pod = tmp.path / "pod";
    CHECK(run_cli({"pod", "--Ns", "1,2,3", "--out", pod.string(), "--set", "data.path=" + data.string()}, &out,
                  &err) == kExitOk);
    const auto rows = read_csv(pod / "pod.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"N", "eps_test"});
    CHECK(rows[3][0] == "3");
    CHECK(Json::parse(slurp(pod / "config.json")).at("Ns") == Json::array({1, 2, 3}));
    CHECK(run_cli({"pod", "--Ns", "1,x"}, &out, &err) == kExitUsage);

    CHECK(run_cli({"pod", "--out", pod.string(), "--set", "data.path=" + (tmp.path / "nowhere").string()}, &out,
                  &err) == kExitFailure);
}
