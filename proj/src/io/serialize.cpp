#include "cnnrom/io/serialize.hpp"

#include <set>
#include <stdexcept>
#include <string>

namespace cnnrom::io {

namespace {

// Strict object reader: every key must be claimed by a field.
class Reader {
public:
    Reader(const Json& j, std::string context) : j_(j), context_(std::move(context))
    {
        if (!j_.is_object()) {
            throw std::invalid_argument(context_ + ": expected an object");
        }
    }

    template <class T>
    void operator()(const char* key, T& out)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) {
            return;
        }
        try {
            read(*it, out);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(context_ + "." + key + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(context_ + "." + key + ": " + e.what());
        }
    }

    void claim(const char* key) { seen_.insert(key); }

    void finish() const
    {
        for (const auto& [key, value] : j_.items()) {
            if (seen_.count(key) == 0) {
                throw std::invalid_argument(context_ + ": unknown key '" + key + "'");
            }
        }
    }

private:
    static void read(const Json& v, int& out)
    {
        if (!v.is_number_integer()) {
            throw std::invalid_argument("expected an integer");
        }
        out = v.get<int>();
    }
    static void read(const Json& v, std::uint64_t& out)
    {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw std::invalid_argument("expected a nonnegative integer");
        }
        out = v.get<std::uint64_t>();
    }
    static void read(const Json& v, double& out)
    {
        if (!v.is_number()) {
            throw std::invalid_argument("expected a number");
        }
        out = v.get<double>();
    }
    static void read(const Json& v, bool& out)
    {
        if (!v.is_boolean()) {
            throw std::invalid_argument("expected true or false");
        }
        out = v.get<bool>();
    }
    static void read(const Json& v, std::vector<int>& out)
    {
        if (!v.is_array()) {
            throw std::invalid_argument("expected an array of integers");
        }
        std::vector<int> tmp;
        for (const Json& e : v) {
            int x = 0;
            read(e, x);
            tmp.push_back(x);
        }
        out = std::move(tmp);
    }
    static void read(const Json& v, nn::Activation& out) { out = nn::activation_from_string(v.get<std::string>()); }
    static void read(const Json& v, fem::ElementKind& out) { out = fem::element_kind_from_string(v.get<std::string>()); }
    static void read(const Json& v, galerkin::Equation& out) { out = galerkin::equation_from_string(v.get<std::string>()); }
    static void read(const Json& v, galerkin::FieldKind& out)
    {
        out = galerkin::field_kind_from_string(v.get<std::string>());
    }

    const Json& j_;
    std::string context_;
    std::set<std::string> seen_;
};

}  // namespace

Json to_json(const galerkin::BasisNetCfg& c)
{
    return {{"free_nx", c.free_nx},  {"free_ny", c.free_ny},   {"channels", c.channels},
            {"kernel", c.kernel},    {"N", c.N},               {"activation", nn::to_string(c.activation)},
            {"lambda_G", c.lambda_G}, {"log_input", c.log_input}};
}

void from_json(const Json& j, galerkin::BasisNetCfg& c)
{
    Reader r(j, "basis");
    r("free_nx", c.free_nx);
    r("free_ny", c.free_ny);
    r("channels", c.channels);
    r("kernel", c.kernel);
    r("N", c.N);
    r("activation", c.activation);
    r("lambda_G", c.lambda_G);
    r("log_input", c.log_input);
    r.finish();
}

Json to_json(const coef::CoefNetCfg& c)
{
    return {{"free_nx", c.free_nx}, {"free_ny", c.free_ny}, {"channels", c.channels},
            {"strides", c.strides}, {"kernel", c.kernel},   {"fc", c.fc},
            {"N", c.N},             {"activation", nn::to_string(c.activation)},
            {"log_input", c.log_input}};
}

void from_json(const Json& j, coef::CoefNetCfg& c)
{
    Reader r(j, "coef");
    r("free_nx", c.free_nx);
    r("free_ny", c.free_ny);
    r("channels", c.channels);
    r("strides", c.strides);
    r("kernel", c.kernel);
    r("fc", c.fc);
    r("N", c.N);
    r("activation", c.activation);
    r("log_input", c.log_input);
    r.finish();
}

Json to_json(const galerkin::GenCfg& c)
{
    return {{"nodes", c.nodes},
            {"element", fem::to_string(c.element)},
            {"equation", galerkin::to_string(c.equation)},
            {"p", c.p},
            {"field", galerkin::to_string(c.field)},
            {"binomial",
             {{"n", c.binomial.n}, {"r", c.binomial.r}, {"kappa0", c.binomial.kappa0}, {"kappa1", c.binomial.kappa1}}},
            {"kle", {{"l", c.kle_l}, {"m", c.kle_m}, {"Q", c.kle_Q}}},
            {"num_train", c.num_train},
            {"num_test", c.num_test},
            {"seed", c.seed}};
}

void from_json(const Json& j, galerkin::GenCfg& c)
{
    Reader r(j, "data");
    r("nodes", c.nodes);
    r("element", c.element);
    r("equation", c.equation);
    r("p", c.p);
    r("field", c.field);
    r("num_train", c.num_train);
    r("num_test", c.num_test);
    r("seed", c.seed);
    Json empty = Json::object();
    {
        const auto it = j.find("binomial");
        Reader b(it == j.end() ? empty : *it, "data.binomial");
        b("n", c.binomial.n);
        b("r", c.binomial.r);
        b("kappa0", c.binomial.kappa0);
        b("kappa1", c.binomial.kappa1);
        b.finish();
    }
    {
        const auto it = j.find("kle");
        Reader k(it == j.end() ? empty : *it, "data.kle");
        k("l", c.kle_l);
        k("m", c.kle_m);
        k("Q", c.kle_Q);
        k.finish();
    }
    r.claim("binomial");
    r.claim("kle");
    r.finish();
}

Json to_json(const galerkin::TrainCfg& c)
{
    return {{"batch", c.batch},   {"epochs", c.epochs},           {"lr0", c.lr0},        {"lr_floor", c.lr_floor},
            {"seed", c.seed},     {"max_skip_rate", c.max_skip_rate}, {"augment", c.augment}};
}

void from_json(const Json& j, galerkin::TrainCfg& c)
{
    Reader r(j, "train");
    r("batch", c.batch);
    r("epochs", c.epochs);
    r("lr0", c.lr0);
    r("lr_floor", c.lr_floor);
    r("seed", c.seed);
    r("max_skip_rate", c.max_skip_rate);
    r("augment", c.augment);
    r.finish();
}

Json to_json(const galerkin::GateCfg& c)
{
    return {{"nodes", c.nodes},       {"N", c.N},         {"channels", c.channels},
            {"kernel", c.kernel},     {"batch", c.batch}, {"lambda_G", c.lambda_G},
            {"activation", nn::to_string(c.activation)},  {"eps", c.eps},
            {"seed", c.seed}};
}

void from_json(const Json& j, galerkin::GateCfg& c)
{
    Reader r(j, "gate");
    r("nodes", c.nodes);
    r("N", c.N);
    r("channels", c.channels);
    r("kernel", c.kernel);
    r("batch", c.batch);
    r("lambda_G", c.lambda_G);
    r("activation", c.activation);
    r("eps", c.eps);
    r("seed", c.seed);
    r.finish();
}

Json to_json(const vae::RecogCfg& c)
{
    return {{"n_obs", c.n_obs},
            {"hidden", c.hidden},
            {"Q", c.Q},
            {"activation", nn::to_string(c.activation)},
            {"log_var_min", c.log_var_min},
            {"log_var_max", c.log_var_max}};
}

void from_json(const Json& j, vae::RecogCfg& c)
{
    Reader r(j, "recog");
    r("n_obs", c.n_obs);
    r("hidden", c.hidden);
    r("Q", c.Q);
    r("activation", c.activation);
    r("log_var_min", c.log_var_min);
    r("log_var_max", c.log_var_max);
    r.finish();
}

}  // namespace cnnrom::io
