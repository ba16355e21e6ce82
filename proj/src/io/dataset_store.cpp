#include "cnnrom/io/dataset_store.hpp"

#include <cstdio>
#include <fstream>

#include "cnnrom/io/romt.hpp"

namespace cnnrom::io {

namespace fs = std::filesystem;

namespace {

constexpr int kFormatVersion = 1;

nn::Tensor vector_tensor(const Eigen::VectorXd& v)
{
    nn::Tensor t(nn::Shape{v.size()});
    t.vec() = v;
    return t;
}

std::string sample_stem(const char* split, std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s/%05zu", split, i);
    return buf;
}

Json write_sample(const fs::path& dir, const char* split, std::size_t i, const galerkin::Sample& s)
{
    const std::string stem = sample_stem(split, i);
    const auto file = [&](const char* what) { return stem + "." + what + ".romt"; };
    nn::Tensor K(nn::Shape{s.K.rows(), s.K.cols()});
    std::copy_n(s.K.data(), s.K.size(), K.data());
    save_tensor(dir / file("K"), K);
    save_tensor(dir / file("u"), vector_tensor(s.u));
    save_tensor(dir / file("F"), vector_tensor(s.system.F));
    const fem::CsrMatrix& A = s.system.A;
    const std::vector<std::uint64_t> offsets(A.row_offsets().begin(), A.row_offsets().end());
    const std::vector<std::uint64_t> cols(A.col_indices().begin(), A.col_indices().end());
    save_romt(dir / file("A_offsets"), encode_u64(offsets));
    save_romt(dir / file("A_cols"), encode_u64(cols));
    nn::Tensor values(nn::Shape{A.nnz()});
    std::copy(A.values().begin(), A.values().end(), values.data());
    save_tensor(dir / file("A_values"), values);
    return {{"split", split},
            {"K", file("K")},
            {"u", file("u")},
            {"F", file("F")},
            {"A", {{"offsets", file("A_offsets")}, {"cols", file("A_cols")}, {"values", file("A_values")}}}};
}

Eigen::VectorXd read_vector(const fs::path& path, std::int64_t n)
{
    const nn::Tensor t = load_tensor(path);
    if (t.shape() != nn::Shape{n}) {
        throw DatasetError(path.string() + ": expected " + std::to_string(n) + " entries, found shape " +
                           nn::shape_string(t.shape()));
    }
    return t.vec();
}

galerkin::Sample read_sample(const fs::path& dir, const Json& entry, const fem::Grid2D& grid)
{
    const std::int64_t nf = grid.num_free();
    const nn::Tensor K = load_tensor(dir / entry.at("K").get<std::string>());
    if (K.shape() != nn::Shape{grid.ny(), grid.nx()}) {
        throw DatasetError(entry.at("K").get<std::string>() + ": field shape " + nn::shape_string(K.shape()) +
                           " does not match the grid");
    }
    fem::FieldNodal field(grid.ny(), grid.nx());
    std::copy_n(K.data(), K.size(), field.data());
    Eigen::VectorXd u = read_vector(dir / entry.at("u").get<std::string>(), nf);
    Eigen::VectorXd F = read_vector(dir / entry.at("F").get<std::string>(), nf);
    const Json& A = entry.at("A");
    const std::vector<std::uint64_t> off = decode_u64(load_romt(dir / A.at("offsets").get<std::string>()));
    const std::vector<std::uint64_t> cols = decode_u64(load_romt(dir / A.at("cols").get<std::string>()));
    const nn::Tensor values = load_tensor(dir / A.at("values").get<std::string>());
    if (static_cast<std::int64_t>(off.size()) != nf + 1 || off.back() != cols.size() ||
        static_cast<std::int64_t>(cols.size()) != values.size()) {
        throw DatasetError(A.at("offsets").get<std::string>() + ": inconsistent CSR arrays");
    }
    std::vector<double> vals(values.data(), values.data() + values.size());
    try {
        fem::CsrMatrix mat(nf, nf, std::vector<std::int64_t>(off.begin(), off.end()),
                           std::vector<std::int64_t>(cols.begin(), cols.end()), std::move(vals));
        return {std::move(field), std::move(u), fem::FemSystem{std::move(mat), std::move(F), grid}};
    } catch (const std::invalid_argument& e) {
        throw DatasetError(A.at("offsets").get<std::string>() + ": " + e.what());
    }
}

}  // namespace

Json write_dataset(const fs::path& dir, const galerkin::GenCfg& cfg, const galerkin::GeneratedData& data)
{
    fs::create_directories(dir / "train");
    fs::create_directories(dir / "test");
    Json m;
    m["format_version"] = kFormatVersion;
    m["generator"] = to_json(cfg);
    m["grid"] = {{"nodes", cfg.nodes}, {"element", fem::to_string(cfg.element)}};
    m["equation"] = galerkin::to_string(cfg.equation);
    m["num_train"] = data.train.size();
    m["num_test"] = data.test.size();
    m["failures"] = data.failures;
    Json samples = Json::array();
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        samples.push_back(write_sample(dir, "train", i, data.train[i]));
    }
    for (std::size_t i = 0; i < data.test.size(); ++i) {
        samples.push_back(write_sample(dir, "test", i, data.test[i]));
    }
    m["samples"] = std::move(samples);
    std::ofstream os(dir / "manifest.json", std::ios::trunc);
    os << m.dump(2) << '\n';
    if (!os) {
        throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    }
    return m;
}

Json gen_data(const galerkin::GenCfg& cfg, const fs::path& dir)
{
    return write_dataset(dir, cfg, galerkin::generate_data(cfg));
}

LoadedDataset read_dataset(const fs::path& dir, double label_noise, std::uint64_t noise_seed)
{
    LoadedDataset out;
    try {
        std::ifstream is(dir / "manifest.json");
        if (!is) {
            throw DatasetError("no manifest.json in " + dir.string());
        }
        out.manifest = Json::parse(is);
        const Json& m = out.manifest;
        if (m.at("format_version").get<int>() != kFormatVersion) {
            throw DatasetError("unsupported dataset format version");
        }
        from_json(m.at("generator"), out.cfg);
        out.cfg.validate();
        if (m.at("grid").at("nodes").get<int>() != out.cfg.nodes ||
            fem::element_kind_from_string(m.at("grid").at("element").get<std::string>()) != out.cfg.element) {
            throw DatasetError("grid block disagrees with the generator block");
        }
        const fem::Grid2D grid = fem::build_grid(out.cfg.nodes, out.cfg.nodes, out.cfg.element);
        for (const Json& entry : m.at("samples")) {
            const std::string split = entry.at("split").get<std::string>();
            if (split != "train" && split != "test") {
                throw DatasetError("unknown split '" + split + "'");
            }
            (split == "train" ? out.data.train : out.data.test).push_back(read_sample(dir, entry, grid));
        }
        if (out.data.train.size() != m.at("num_train").get<std::size_t>() ||
            out.data.test.size() != m.at("num_test").get<std::size_t>()) {
            throw DatasetError("sample counts disagree with the listed files");
        }
        out.data.failures = m.at("failures").get<std::vector<std::int64_t>>();
    } catch (const DatasetError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(dir.string() + ": malformed manifest: " + e.what());
    } catch (const FormatError& e) {
        throw DatasetError(e.what());
    } catch (const std::invalid_argument& e) {
        throw DatasetError(dir.string() + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw DatasetError(e.what());
    }
    if (label_noise > 0.0) {
        galerkin::add_label_noise(out.data.train, label_noise, noise_seed);
    }
    return out;
}

}  // namespace cnnrom::io
