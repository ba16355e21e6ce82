#include "cnnrom/io/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "cnnrom/io/romt.hpp"

namespace cnnrom::io {

namespace {

constexpr char kMagic[4] = {'R', 'O', 'M', 'K'};
constexpr std::uint16_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is)
{
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        throw FormatError("ROMK: truncated file");
    }
    return v;
}

std::string get_string(std::istream& is, std::uint64_t n)
{
    std::string s(n, '\0');
    if (n > 0 && !is.read(s.data(), static_cast<std::streamsize>(n))) {
        throw FormatError("ROMK: truncated file");
    }
    return s;
}

Json grid_meta(const char* kind, int nodes, fem::ElementKind element)
{
    return {{"kind", kind}, {"nodes", nodes}, {"element", fem::to_string(element)}};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const nn::ParamStore& params, const Json& meta)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    os.write(kMagic, 4);
    put<std::uint16_t>(os, kVersion);
    const std::string text = meta.dump();
    put<std::uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    put<std::uint64_t>(os, params.entries().size());
    for (const auto& [name, entry] : params.entries()) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint8_t>(os, entry.trainable ? 1 : 0);
        write_romt(os, encode(entry.value));
    }
    if (!os) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open " + path.string());
    }
    try {
        char magic[4];
        if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
            throw FormatError("ROMK: bad magic");
        }
        if (get<std::uint16_t>(is) != kVersion) {
            throw FormatError("ROMK: unsupported version");
        }
        Checkpoint ck;
        const std::string text = get_string(is, get<std::uint64_t>(is));
        try {
            ck.meta = Json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(std::string("ROMK: metadata is not JSON: ") + e.what());
        }
        const auto count = get<std::uint64_t>(is);
        for (std::uint64_t i = 0; i < count; ++i) {
            const std::string name = get_string(is, get<std::uint32_t>(is));
            const bool trainable = get<std::uint8_t>(is) != 0;
            ck.params.add(name, decode(read_romt(is)), trainable);
        }
        if (is.peek() != std::char_traits<char>::eof()) {
            throw FormatError("ROMK: trailing bytes");
        }
        return ck;
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void save_basis(const std::filesystem::path& path, const nn::ParamStore& params, const galerkin::BasisNetCfg& cfg,
                int nodes, fem::ElementKind element, const Json& extra)
{
    Json meta = grid_meta("basis", nodes, element);
    meta["config"] = to_json(cfg);
    meta["extra"] = extra;
    save_checkpoint(path, params, meta);
}

void save_coef(const std::filesystem::path& path, const nn::ParamStore& params, const coef::CoefNetCfg& cfg,
               int nodes, fem::ElementKind element, const Json& extra)
{
    Json meta = grid_meta("coef", nodes, element);
    meta["config"] = to_json(cfg);
    meta["extra"] = extra;
    save_checkpoint(path, params, meta);
}

namespace {

Checkpoint load_kind(const std::filesystem::path& path, const char* kind)
{
    Checkpoint ck = load_checkpoint(path);
    if (!ck.meta.is_object() || ck.meta.value("kind", "") != kind) {
        throw FormatError(path.string() + ": not a " + kind + " checkpoint");
    }
    return ck;
}

}  // namespace

BasisCheckpoint load_basis(const std::filesystem::path& path)
{
    Checkpoint ck = load_kind(path, "basis");
    BasisCheckpoint b;
    from_json(ck.meta.at("config"), b.cfg);
    b.nodes = ck.meta.at("nodes").get<int>();
    b.element = fem::element_kind_from_string(ck.meta.at("element").get<std::string>());
    b.params = std::move(ck.params);
    return b;
}

coef::SurrogateModel load_surrogate(const std::filesystem::path& basis, const std::filesystem::path& coef)
{
    BasisCheckpoint b = load_basis(basis);
    Checkpoint c = load_kind(coef, "coef");
    coef::SurrogateModel m;
    m.basis_cfg = b.cfg;
    m.basis = std::move(b.params);
    from_json(c.meta.at("config"), m.coef_cfg);
    m.coef = std::move(c.params);
    m.nodes = b.nodes;
    m.element = b.element;
    if (c.meta.at("nodes").get<int>() != b.nodes ||
        fem::element_kind_from_string(c.meta.at("element").get<std::string>()) != b.element) {
        throw std::invalid_argument("load_surrogate: basis and coef checkpoints were trained on different grids");
    }
    m.validate();
    return m;
}

}  // namespace cnnrom::io
