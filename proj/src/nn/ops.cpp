#include "cnnrom/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cnnrom::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

void require_same_shape(const Var& a, const Var& b, const char* op)
{
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                    shape_string(b.shape()));
    }
}

void require_same_tape(const Var& a, const Var& b)
{
    if (a.tape != b.tape) {
        throw std::invalid_argument("operands live on different tapes");
    }
}

/// Elementwise unary op with value f(x) and derivative df(x).
template <class F, class DF>
Var unary(Var a, F f, DF df)
{
    const Tensor& x = a.value();
    Tensor y(x.shape());
    for (std::int64_t i = 0; i < x.size(); ++i) {
        y[i] = f(x[i]);
    }
    const int ia = a.id;
    return a.tape->record(std::move(y), {a}, [ia, df](Tape& t, const Tensor& g) {
        const Tensor& xv = t.value(ia);
        Tensor dx(xv.shape());
        for (std::int64_t i = 0; i < xv.size(); ++i) {
            dx[i] = g[i] * df(xv[i]);
        }
        t.accumulate(ia, std::move(dx));
    });
}

void check_2d(const Var& a, const char* op)
{
    if (a.value().ndim() != 2) {
        throw std::invalid_argument(std::string(op) + ": expected a [B, F] tensor, got " + shape_string(a.shape()));
    }
}

// Fills the C*k*k x Ho*Wo block of a row-major matrix with row stride `ld`
// from one image x (C x H x W).
void im2col(const double* x, int C, int H, int W, int k, int stride, int Ho, int Wo, double* cols, std::ptrdiff_t ld)
{
    const int pad = k / 2;
    for (int c = 0; c < C; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                double* row = cols + static_cast<std::ptrdiff_t>(((c * k + ki) * k + kj)) * ld;
                for (int oy = 0; oy < Ho; ++oy) {
                    const int iy = oy * stride + ki - pad;
                    double* dst = row + oy * Wo;
                    if (iy < 0 || iy >= H) {
                        std::fill(dst, dst + Wo, 0.0);
                        continue;
                    }
                    const double* src = x + (static_cast<std::ptrdiff_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < Wo; ++ox) {
                        const int ix = ox * stride + kj - pad;
                        dst[ox] = (ix >= 0 && ix < W) ? src[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// Adds a block of column gradients (row stride `ld`) back onto the image gradient dx.
void col2im(const double* cols, int C, int H, int W, int k, int stride, int Ho, int Wo, double* dx, std::ptrdiff_t ld)
{
    const int pad = k / 2;
    for (int c = 0; c < C; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                const double* row = cols + static_cast<std::ptrdiff_t>(((c * k + ki) * k + kj)) * ld;
                for (int oy = 0; oy < Ho; ++oy) {
                    const int iy = oy * stride + ki - pad;
                    if (iy < 0 || iy >= H) {
                        continue;
                    }
                    double* dst = dx + (static_cast<std::ptrdiff_t>(c) * H + iy) * W;
                    const double* src = row + oy * Wo;
                    for (int ox = 0; ox < Wo; ++ox) {
                        const int ix = ox * stride + kj - pad;
                        if (ix >= 0 && ix < W) {
                            dst[ix] += src[ox];
                        }
                    }
                }
            }
        }
    }
}

// Samples per convolution GEMM; larger groups lose to cache misses at desk sizes.
constexpr int kConvGroup = 2;

}  // namespace

std::string to_string(Activation a)
{
    switch (a) {
    case Activation::Relu:
        return "relu";
    case Activation::Softplus:
        return "softplus";
    case Activation::Tanh:
        return "tanh";
    case Activation::Identity:
        return "identity";
    }
    return "relu";
}

Activation activation_from_string(const std::string& name)
{
    if (name == "relu") {
        return Activation::Relu;
    }
    if (name == "softplus") {
        return Activation::Softplus;
    }
    if (name == "tanh") {
        return Activation::Tanh;
    }
    if (name == "identity") {
        return Activation::Identity;
    }
    throw std::invalid_argument("unknown activation: " + name);
}

Var add(Var a, Var b)
{
    require_same_tape(a, b);
    require_same_shape(a, b, "add");
    Tensor y = a.value();
    y.vec() += b.value().vec();
    const int ia = a.id;
    const int ib = b.id;
    return a.tape->record(std::move(y), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
        t.accumulate(ia, g);
        t.accumulate(ib, g);
    });
}

Var sub(Var a, Var b)
{
    require_same_tape(a, b);
    require_same_shape(a, b, "sub");
    Tensor y = a.value();
    y.vec() -= b.value().vec();
    const int ia = a.id;
    const int ib = b.id;
    return a.tape->record(std::move(y), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
        t.accumulate(ia, g);
        Tensor neg = g;
        neg.vec() *= -1.0;
        t.accumulate(ib, std::move(neg));
    });
}

Var mul(Var a, Var b)
{
    require_same_tape(a, b);
    require_same_shape(a, b, "mul");
    Tensor y = a.value();
    y.vec().array() *= b.value().vec().array();
    const int ia = a.id;
    const int ib = b.id;
    return a.tape->record(std::move(y), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
        if (t.requires_grad(ia)) {
            Tensor da = g;
            da.vec().array() *= t.value(ib).vec().array();
            t.accumulate(ia, std::move(da));
        }
        if (t.requires_grad(ib)) {
            Tensor db = g;
            db.vec().array() *= t.value(ia).vec().array();
            t.accumulate(ib, std::move(db));
        }
    });
}

Var scale(Var a, double s)
{
    Tensor y = a.value();
    y.vec() *= s;
    const int ia = a.id;
    return a.tape->record(std::move(y), {a}, [ia, s](Tape& t, const Tensor& g) {
        Tensor d = g;
        d.vec() *= s;
        t.accumulate(ia, std::move(d));
    });
}

Var add_scalar(Var a, double s)
{
    Tensor y = a.value();
    y.vec().array() += s;
    const int ia = a.id;
    return a.tape->record(std::move(y), {a}, [ia](Tape& t, const Tensor& g) { t.accumulate(ia, g); });
}

Var square(Var a)
{
    return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var exp(Var a)
{
    return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log(Var a)
{
    return unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var relu(Var a)
{
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var softplus(Var a)
{
    return unary(
        a, [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
        [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var tanh(Var a)
{
    return unary(
        a, [](double x) { return std::tanh(x); },
        [](double x) {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        });
}

Var activation(Var a, Activation kind)
{
    switch (kind) {
    case Activation::Relu:
        return relu(a);
    case Activation::Softplus:
        return softplus(a);
    case Activation::Tanh:
        return tanh(a);
    case Activation::Identity:
        return a;
    }
    return a;
}

Var clamp(Var a, double lo, double hi)
{
    return unary(
        a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var sum(Var a)
{
    Tensor y(Shape{1}, a.value().vec().sum());
    const int ia = a.id;
    return a.tape->record(std::move(y), {a}, [ia](Tape& t, const Tensor& g) {
        t.accumulate(ia, Tensor(t.value(ia).shape(), g[0]));
    });
}

Var mean(Var a)
{
    const auto n = a.value().size();
    if (n == 0) {
        throw std::invalid_argument("mean: empty tensor");
    }
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var row_sum(Var a)
{
    check_2d(a, "row_sum");
    const auto B = a.value().dim(0);
    const auto F = a.value().dim(1);
    Tensor y(Shape{B});
    ConstRowMap x(a.value().data(), B, F);
    Eigen::Map<Eigen::VectorXd>(y.data(), B) = x.rowwise().sum();
    const int ia = a.id;
    return a.tape->record(std::move(y), {a}, [ia, B, F](Tape& t, const Tensor& g) {
        Tensor d(Shape{B, F});
        RowMap dm(d.data(), B, F);
        for (std::int64_t b = 0; b < B; ++b) {
            dm.row(b).setConstant(g[b]);
        }
        t.accumulate(ia, std::move(d));
    });
}

Var mul_const(Var a, const Tensor& w)
{
    if (w.size() != a.value().size()) {
        throw std::invalid_argument("mul_const: size mismatch");
    }
    Tensor y = a.value();
    y.vec().array() *= w.vec().array();
    const int ia = a.id;
    return a.tape->record(std::move(y), {a}, [ia, w](Tape& t, const Tensor& g) {
        Tensor d = g;
        d.vec().array() *= w.vec().array();
        t.accumulate(ia, std::move(d));
    });
}

Var reshape(Var a, Shape shape)
{
    Tensor y = a.value().reshaped(std::move(shape));
    const int ia = a.id;
    return a.tape->record(std::move(y), {a}, [ia](Tape& t, const Tensor& g) {
        t.accumulate(ia, g.reshaped(t.value(ia).shape()));
    });
}

Var flatten(Var a)
{
    const auto B = a.value().dim(0);
    return reshape(a, Shape{B, B == 0 ? 0 : a.value().size() / B});
}

Var slice_cols(Var a, std::int64_t start, std::int64_t len)
{
    check_2d(a, "slice_cols");
    const auto B = a.value().dim(0);
    const auto F = a.value().dim(1);
    if (start < 0 || len < 0 || start + len > F) {
        throw std::invalid_argument("slice_cols: range out of bounds");
    }
    Tensor y(Shape{B, len});
    RowMap(y.data(), B, len) = ConstRowMap(a.value().data(), B, F).middleCols(start, len);
    const int ia = a.id;
    return a.tape->record(std::move(y), {a}, [ia, B, F, start, len](Tape& t, const Tensor& g) {
        Tensor d(Shape{B, F});
        RowMap(d.data(), B, F).middleCols(start, len) = ConstRowMap(g.data(), B, len);
        t.accumulate(ia, std::move(d));
    });
}

Var gather_cols(Var a, const std::vector<std::int64_t>& cols)
{
    check_2d(a, "gather_cols");
    const auto B = a.value().dim(0);
    const auto F = a.value().dim(1);
    const auto n = static_cast<std::int64_t>(cols.size());
    for (const auto c : cols) {
        if (c < 0 || c >= F) {
            throw std::invalid_argument("gather_cols: index out of bounds");
        }
    }
    Tensor y(Shape{B, n});
    for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t j = 0; j < n; ++j) {
            y[b * n + j] = a.value()[b * F + cols[static_cast<std::size_t>(j)]];
        }
    }
    const int ia = a.id;
    return a.tape->record(std::move(y), {a}, [ia, B, F, n, cols](Tape& t, const Tensor& g) {
        Tensor d(Shape{B, F});
        for (std::int64_t b = 0; b < B; ++b) {
            for (std::int64_t j = 0; j < n; ++j) {
                d[b * F + cols[static_cast<std::size_t>(j)]] += g[b * n + j];
            }
        }
        t.accumulate(ia, std::move(d));
    });
}

Var repeat_rows(Var a, std::int64_t times)
{
    check_2d(a, "repeat_rows");
    if (times < 1) {
        throw std::invalid_argument("repeat_rows: times must be >= 1");
    }
    const auto B = a.value().dim(0);
    const auto F = a.value().dim(1);
    Tensor y(Shape{B * times, F});
    for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t r = 0; r < times; ++r) {
            std::copy_n(a.value().data() + b * F, F, y.data() + (b * times + r) * F);
        }
    }
    const int ia = a.id;
    return a.tape->record(std::move(y), {a}, [ia, B, F, times](Tape& t, const Tensor& g) {
        Tensor d(Shape{B, F});
        for (std::int64_t b = 0; b < B; ++b) {
            for (std::int64_t r = 0; r < times; ++r) {
                for (std::int64_t j = 0; j < F; ++j) {
                    d[b * F + j] += g[(b * times + r) * F + j];
                }
            }
        }
        t.accumulate(ia, std::move(d));
    });
}

Var linear(Var x, Var W, Var b)
{
    require_same_tape(x, W);
    require_same_tape(x, b);
    check_2d(x, "linear");
    const Tensor& xv = x.value();
    const Tensor& Wv = W.value();
    if (Wv.ndim() != 2 || Wv.dim(1) != xv.dim(1) || b.value().size() != Wv.dim(0)) {
        throw std::invalid_argument("linear: shape mismatch x" + shape_string(xv.shape()) + " W" +
                                    shape_string(Wv.shape()) + " b" + shape_string(b.shape()));
    }
    const auto B = xv.dim(0);
    const auto in = xv.dim(1);
    const auto out = Wv.dim(0);
    Tensor y(Shape{B, out});
    RowMap ym(y.data(), B, out);
    ym.noalias() = ConstRowMap(xv.data(), B, in) * ConstRowMap(Wv.data(), out, in).transpose();
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.value().data(), out);
    const int ix = x.id;
    const int iw = W.id;
    const int ib = b.id;
    return x.tape->record(std::move(y), {x, W, b}, [ix, iw, ib, B, in, out](Tape& t, const Tensor& g) {
        ConstRowMap gm(g.data(), B, out);
        if (t.requires_grad(ix)) {
            Tensor dx(Shape{B, in});
            RowMap(dx.data(), B, in).noalias() = gm * ConstRowMap(t.value(iw).data(), out, in);
            t.accumulate(ix, std::move(dx));
        }
        if (t.requires_grad(iw)) {
            Tensor dw(Shape{out, in});
            RowMap(dw.data(), out, in).noalias() = gm.transpose() * ConstRowMap(t.value(ix).data(), B, in);
            t.accumulate(iw, std::move(dw));
        }
        if (t.requires_grad(ib)) {
            Tensor db(Shape{out});
            Eigen::Map<Eigen::RowVectorXd>(db.data(), out) = gm.colwise().sum();
            t.accumulate(ib, std::move(db));
        }
    });
}

Var conv2d_same(Var x, Var w, Var b, int stride)
{
    require_same_tape(x, w);
    require_same_tape(x, b);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    if (xv.ndim() != 4 || wv.ndim() != 4) {
        throw std::invalid_argument("conv2d_same: expected 4-d input and kernel");
    }
    const int B = static_cast<int>(xv.dim(0));
    const int C = static_cast<int>(xv.dim(1));
    const int H = static_cast<int>(xv.dim(2));
    const int W = static_cast<int>(xv.dim(3));
    const int O = static_cast<int>(wv.dim(0));
    const int k = static_cast<int>(wv.dim(2));
    if (wv.dim(1) != C || wv.dim(3) != k || k % 2 == 0 || b.value().size() != O) {
        throw std::invalid_argument("conv2d_same: kernel " + shape_string(wv.shape()) + " does not fit input " +
                                    shape_string(xv.shape()));
    }
    if (stride < 1) {
        throw std::invalid_argument("conv2d_same: stride must be >= 1");
    }
    const int Ho = (H + stride - 1) / stride;
    const int Wo = (W + stride - 1) / stride;
    const int P = Ho * Wo;
    const int CKK = C * k * k;

    // Samples are processed in small groups laid side by side, one GEMM per group.
    const int group = kConvGroup;
    const std::ptrdiff_t image = static_cast<std::ptrdiff_t>(C) * H * W;
    Tensor y(Shape{B, O, Ho, Wo});
    {
        const Eigen::Map<const Eigen::VectorXd> bias(b.value().data(), O);
        ConstRowMap wm(wv.data(), O, CKK);
        RowMat cols;
        RowMat out;
        for (int n0 = 0; n0 < B; n0 += group) {
            const int nb = std::min(group, B - n0);
            const std::ptrdiff_t ld = static_cast<std::ptrdiff_t>(nb) * P;
            cols.resize(CKK, ld);
            for (int j = 0; j < nb; ++j) {
                im2col(xv.data() + (n0 + j) * image, C, H, W, k, stride, Ho, Wo,
                       cols.data() + static_cast<std::ptrdiff_t>(j) * P, ld);
            }
            out.noalias() = wm * cols;
            for (int j = 0; j < nb; ++j) {
                RowMap ym(y.data() + static_cast<std::ptrdiff_t>(n0 + j) * O * P, O, P);
                ym = out.middleCols(static_cast<std::ptrdiff_t>(j) * P, P);
                ym.colwise() += bias;
            }
        }
    }

    const int ix = x.id;
    const int iw = w.id;
    const int ib = b.id;
    return x.tape->record(std::move(y), {x, w, b}, [=](Tape& t, const Tensor& g) {
        const Tensor& xin = t.value(ix);
        const Tensor& win = t.value(iw);
        const bool need_x = t.requires_grad(ix);
        const bool need_w = t.requires_grad(iw);
        ConstRowMap wm(win.data(), O, CKK);
        Tensor dx = need_x ? Tensor(xin.shape()) : Tensor();
        Tensor dw = need_w ? Tensor(win.shape()) : Tensor();
        Tensor db(Shape{O});
        RowMat gm;
        RowMat buf;
        for (int n0 = 0; n0 < B; n0 += group) {
            const int nb = std::min(group, B - n0);
            const std::ptrdiff_t ld = static_cast<std::ptrdiff_t>(nb) * P;
            gm.resize(O, ld);
            for (int j = 0; j < nb; ++j) {
                gm.middleCols(static_cast<std::ptrdiff_t>(j) * P, P) =
                    ConstRowMap(g.data() + static_cast<std::ptrdiff_t>(n0 + j) * O * P, O, P);
            }
            Eigen::Map<Eigen::VectorXd>(db.data(), O) += gm.rowwise().sum();
            if (need_w) {
                buf.resize(CKK, ld);
                for (int j = 0; j < nb; ++j) {
                    im2col(xin.data() + (n0 + j) * image, C, H, W, k, stride, Ho, Wo,
                           buf.data() + static_cast<std::ptrdiff_t>(j) * P, ld);
                }
                RowMap(dw.data(), O, CKK).noalias() += gm * buf.transpose();
            }
            if (need_x) {
                buf.noalias() = wm.transpose() * gm;
                for (int j = 0; j < nb; ++j) {
                    col2im(buf.data() + static_cast<std::ptrdiff_t>(j) * P, C, H, W, k, stride, Ho, Wo,
                           dx.data() + (n0 + j) * image, ld);
                }
            }
        }
        if (need_x) {
            t.accumulate(ix, std::move(dx));
        }
        if (need_w) {
            t.accumulate(iw, std::move(dw));
        }
        t.accumulate(ib, std::move(db));
    });
}

Var batchnorm(Var x, Var gamma, Var beta, BatchNormBuffers buffers, bool train, double momentum, double eps)
{
    require_same_tape(x, gamma);
    require_same_tape(x, beta);
    const Tensor& xv = x.value();
    if (xv.ndim() != 4 && xv.ndim() != 2) {
        throw std::invalid_argument("batchnorm: expected [B, C, H, W] or [B, C]");
    }
    const auto B = xv.dim(0);
    const auto C = xv.dim(1);
    const std::int64_t S = xv.ndim() == 4 ? xv.dim(2) * xv.dim(3) : 1;
    if (gamma.value().size() != C || beta.value().size() != C) {
        throw std::invalid_argument("batchnorm: gamma/beta must have one entry per channel");
    }
    if (buffers.running_mean == nullptr || buffers.running_var == nullptr ||
        buffers.running_mean->size() != C || buffers.running_var->size() != C) {
        throw std::invalid_argument("batchnorm: running statistics missing or mis-shaped");
    }
    if (train && B < 2) {
        throw std::invalid_argument("batchnorm: train mode needs a batch of at least 2");
    }
    const double m = static_cast<double>(B * S);
    Eigen::VectorXd mu(C);
    Eigen::VectorXd var(C);
    if (train) {
        for (std::int64_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::int64_t n = 0; n < B; ++n) {
                const double* p = xv.data() + (n * C + c) * S;
                for (std::int64_t i = 0; i < S; ++i) {
                    s += p[i];
                }
            }
            mu[c] = s / m;
            double v = 0.0;
            for (std::int64_t n = 0; n < B; ++n) {
                const double* p = xv.data() + (n * C + c) * S;
                for (std::int64_t i = 0; i < S; ++i) {
                    v += (p[i] - mu[c]) * (p[i] - mu[c]);
                }
            }
            var[c] = v / m;
        }
        auto rm = buffers.running_mean->vec();
        auto rv = buffers.running_var->vec();
        rm = momentum * rm + (1.0 - momentum) * mu;
        rv = momentum * rv + (1.0 - momentum) * var;
    } else {
        mu = buffers.running_mean->vec();
        var = buffers.running_var->vec();
    }
    const Eigen::VectorXd inv_std = (var.array() + eps).rsqrt();

    // xhat is saved for the backward pass.
    Tensor xhat(xv.shape());
    Tensor y(xv.shape());
    for (std::int64_t n = 0; n < B; ++n) {
        for (std::int64_t c = 0; c < C; ++c) {
            const std::int64_t off = (n * C + c) * S;
            const double gmul = gamma.value()[c];
            const double badd = beta.value()[c];
            for (std::int64_t i = 0; i < S; ++i) {
                const double h = (xv[off + i] - mu[c]) * inv_std[c];
                xhat[off + i] = h;
                y[off + i] = gmul * h + badd;
            }
        }
    }
    const int ix = x.id;
    const int ig = gamma.id;
    const int ibt = beta.id;
    return x.tape->record(
        std::move(y), {x, gamma, beta},
        [ix, ig, ibt, B, C, S, m, train, inv_std, xhat = std::move(xhat)](Tape& t, const Tensor& g) {
            Tensor dgamma(Shape{C});
            Tensor dbeta(Shape{C});
            for (std::int64_t c = 0; c < C; ++c) {
                double sg = 0.0;
                double sgx = 0.0;
                for (std::int64_t n = 0; n < B; ++n) {
                    const std::int64_t off = (n * C + c) * S;
                    for (std::int64_t i = 0; i < S; ++i) {
                        sg += g[off + i];
                        sgx += g[off + i] * xhat[off + i];
                    }
                }
                dbeta[c] = sg;
                dgamma[c] = sgx;
            }
            if (t.requires_grad(ix)) {
                const Tensor& gam = t.value(ig);
                Tensor dx(t.value(ix).shape());
                for (std::int64_t c = 0; c < C; ++c) {
                    const double scale_c = gam[c] * inv_std[c];
                    const double mean_g = dbeta[c] / m;
                    const double mean_gx = dgamma[c] / m;
                    for (std::int64_t n = 0; n < B; ++n) {
                        const std::int64_t off = (n * C + c) * S;
                        for (std::int64_t i = 0; i < S; ++i) {
                            dx[off + i] = train ? scale_c * (g[off + i] - mean_g - xhat[off + i] * mean_gx)
                                                : scale_c * g[off + i];
                        }
                    }
                }
                t.accumulate(ix, std::move(dx));
            }
            t.accumulate(ig, std::move(dgamma));
            t.accumulate(ibt, std::move(dbeta));
        });
}

Var combine_channels(Var P, Var c)
{
    require_same_tape(P, c);
    const Tensor& pv = P.value();
    const Tensor& cv = c.value();
    if (pv.ndim() != 4 || cv.ndim() != 2 || cv.dim(0) != pv.dim(0) || cv.dim(1) != pv.dim(1)) {
        throw std::invalid_argument("combine_channels: P " + shape_string(pv.shape()) + " and c " +
                                    shape_string(cv.shape()) + " do not match");
    }
    const auto B = pv.dim(0);
    const auto N = pv.dim(1);
    const auto F = pv.dim(2) * pv.dim(3);
    Tensor y(Shape{B, F});
    for (std::int64_t b = 0; b < B; ++b) {
        Eigen::Map<Eigen::RowVectorXd>(y.data() + b * F, F) =
            Eigen::Map<const Eigen::RowVectorXd>(cv.data() + b * N, N) * ConstRowMap(pv.data() + b * N * F, N, F);
    }
    const int ip = P.id;
    const int ic = c.id;
    return P.tape->record(std::move(y), {P, c}, [ip, ic, B, N, F](Tape& t, const Tensor& g) {
        if (t.requires_grad(ip)) {
            Tensor dp(t.value(ip).shape());
            const Tensor& cval = t.value(ic);
            for (std::int64_t b = 0; b < B; ++b) {
                RowMap(dp.data() + b * N * F, N, F).noalias() =
                    Eigen::Map<const Eigen::VectorXd>(cval.data() + b * N, N) *
                    Eigen::Map<const Eigen::RowVectorXd>(g.data() + b * F, F);
            }
            t.accumulate(ip, std::move(dp));
        }
        if (t.requires_grad(ic)) {
            Tensor dc(Shape{B, N});
            const Tensor& pval = t.value(ip);
            for (std::int64_t b = 0; b < B; ++b) {
                Eigen::Map<Eigen::VectorXd>(dc.data() + b * N, N).noalias() =
                    ConstRowMap(pval.data() + b * N * F, N, F) * Eigen::Map<const Eigen::VectorXd>(g.data() + b * F, F);
            }
            t.accumulate(ic, std::move(dc));
        }
    });
}

}  // namespace cnnrom::nn
