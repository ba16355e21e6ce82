#include "cnnrom/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "cnnrom/fields/rng.hpp"

namespace cnnrom::nn {

namespace {

std::map<std::string, Tensor> analytic_gradient(const LossFn& loss, ParamStore& store)
{
    store.zero_grad();
    loss(store, true);
    std::map<std::string, Tensor> g;
    for (auto& [name, e] : store.entries()) {
        if (e.trainable) {
            g[name] = e.grad;
        }
    }
    return g;
}

}  // namespace

double relative_error(double a, double b, double floor)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

GradCheckResult grad_check(const LossFn& loss, ParamStore& store, double eps, std::int64_t max_per_param,
                           std::uint64_t seed, double floor_ratio)
{
    const auto grads = analytic_gradient(loss, store);
    double gmax = 0.0;
    for (const auto& [name, g] : grads) {
        gmax = std::max(gmax, g.vec().cwiseAbs().maxCoeff());
    }
    const double floor = std::max(floor_ratio * gmax, 1e-300);

    fields::Rng rng = fields::make_rng(seed);
    GradCheckResult result;
    for (const auto& [name, g] : grads) {
        Tensor& value = store.value(name);
        std::vector<std::int64_t> coords(static_cast<std::size_t>(value.size()));
        std::iota(coords.begin(), coords.end(), 0);
        if (max_per_param > 0 && value.size() > max_per_param) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(static_cast<std::size_t>(max_per_param));
        }
        for (const auto i : coords) {
            const double saved = value[i];
            value[i] = saved + eps;
            const double up = loss(store, false);
            value[i] = saved - eps;
            const double down = loss(store, false);
            value[i] = saved;
            const double fd = (up - down) / (2.0 * eps);
            const double err = relative_error(g[i], fd, floor);
            ++result.checked;
            if (err > result.max_rel_error || result.worst_index < 0) {
                result.max_rel_error = err;
                result.worst_param = name;
                result.worst_index = i;
            }
        }
    }
    return result;
}

GradCheckResult grad_check_directions(const LossFn& loss, ParamStore& store, int directions, double eps,
                                      std::uint64_t seed)
{
    const auto grads = analytic_gradient(loss, store);
    fields::Rng rng = fields::make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    GradCheckResult result;
    for (int d = 0; d < directions; ++d) {
        std::map<std::string, Tensor> dir;
        double norm2 = 0.0;
        for (const auto& [name, g] : grads) {
            Tensor t(g.shape());
            for (std::int64_t i = 0; i < t.size(); ++i) {
                t[i] = normal(rng);
            }
            norm2 += t.vec().squaredNorm();
            dir[name] = std::move(t);
        }
        const double inv = 1.0 / std::sqrt(norm2);
        double analytic = 0.0;
        for (auto& [name, t] : dir) {
            t.vec() *= inv;
            analytic += t.vec().dot(grads.at(name).vec());
        }
        auto shift = [&](double s) {
            for (const auto& [name, t] : dir) {
                store.value(name).vec() += s * t.vec();
            }
        };
        std::map<std::string, Tensor> saved;
        for (const auto& [name, t] : dir) {
            saved[name] = store.value(name);
        }
        shift(eps);
        const double up = loss(store, false);
        for (const auto& [name, t] : saved) {
            store.value(name) = t;
        }
        shift(-eps);
        const double down = loss(store, false);
        for (const auto& [name, t] : saved) {
            store.value(name) = t;
        }
        const double fd = (up - down) / (2.0 * eps);
        const double err = relative_error(analytic, fd, 1e-300);
        ++result.checked;
        if (err >= result.max_rel_error) {
            result.max_rel_error = err;
            result.worst_param = "direction";
            result.worst_index = d;
        }
    }
    return result;
}

}  // namespace cnnrom::nn
