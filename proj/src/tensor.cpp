#include "ulab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ulab/errors.hpp"
#include "ulab/kernels.hpp"

namespace ulab {

namespace {

thread_local uint64_t g_next_id = 1;
thread_local int g_no_grad_depth = 0;

std::shared_ptr<TensorNode> make_node(std::vector<size_t> shape, size_t n) {
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->data.resize(n);
    node->id = g_next_id++;
    return node;
}

size_t shape_numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) {
        if (d == 0) throw ShapeError("zero extent in shape");
        n *= d;
    }
    return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) throw ShapeError(std::string(op) + ": shape mismatch");
}

void require_2d(const Tensor& a, const char* op) {
    if (a.shape().size() != 2) throw ShapeError(std::string(op) + ": expected 2-D tensor");
}

bool track(const Tensor& a) { return grad_enabled() && a.requires_grad(); }

std::vector<double>& grad_of(const std::shared_ptr<TensorNode>& n) {
    if (n->grad.empty()) n->grad.assign(n->data.size(), 0.0);
    return n->grad;
}

// Wires parents + backward closure onto out when any parent is tracked.
void register_op(Tensor& out, std::vector<Tensor> parents,
                 std::function<void(const TensorNode&)> backward_fn) {
    bool any = false;
    for (const auto& p : parents) any = any || track(p);
    if (!any) return;
    out.node()->requires_grad = true;
    for (auto& p : parents) out.node()->parents.push_back(p.node());
    out.node()->backward_fn = std::move(backward_fn);
}

// Elementwise unary helper: fwd(x) and dfdx given (x, y).
template <typename Fwd, typename Dfdx>
Tensor unary_op(const Tensor& a, const char* name, Fwd fwd, Dfdx dfdx) {
    Tensor out(make_node(a.shape(), a.numel()));
    const auto& x = a.data();
    auto& y = out.data();
    for (size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
    register_op(out, {a}, [dfdx](const TensorNode& o) {
        const auto& p = o.parents[0];
        if (!p->requires_grad) return;
        auto& g = grad_of(p);
        for (size_t i = 0; i < o.data.size(); ++i)
            g[i] += dfdx(p->data[i], o.data[i]) * o.grad[i];
    });
    (void)name;
    return out;
}

}  // namespace

bool grad_enabled() { return g_no_grad_depth == 0; }
NoGrad::NoGrad() { ++g_no_grad_depth; }
NoGrad::~NoGrad() { --g_no_grad_depth; }

Tensor Tensor::zeros(const std::vector<size_t>& shape, bool requires_grad) {
    Tensor t(make_node(shape, shape_numel(shape)));
    t.node()->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::full(const std::vector<size_t>& shape, double value, bool requires_grad) {
    Tensor t = zeros(shape, requires_grad);
    std::fill(t.data().begin(), t.data().end(), value);
    return t;
}

Tensor Tensor::from(const std::vector<size_t>& shape, std::vector<double> data,
                    bool requires_grad) {
    if (shape_numel(shape) != data.size())
        throw ShapeError("from: data length does not match shape");
    auto node = std::make_shared<TensorNode>();
    node->shape = shape;
    node->data = std::move(data);
    node->id = g_next_id++;
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({1}, {value}, requires_grad);
}

Tensor Tensor::randn(const std::vector<size_t>& shape, Rng& rng, double stddev,
                     bool requires_grad) {
    Tensor t = zeros(shape, requires_grad);
    for (auto& v : t.data()) v = rng.next_normal() * stddev;
    return t;
}

double Tensor::item() const {
    if (numel() != 1) throw ContractError("item: tensor is not scalar");
    return node_->data[0];
}

std::vector<double>& Tensor::grad_buffer() { return grad_of(node_); }

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw ContractError("backward: loss must be a defined scalar");
    if (!loss.requires_grad())
        throw ContractError("backward: loss is not connected to any requires_grad leaf");

    // Collect the reachable subgraph once, then sweep in decreasing creation
    // order so every node's grad is complete before its backward runs.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> seen;
    std::vector<TensorNode*> stack{loss.node().get()};
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        TensorNode* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& p : n->parents)
            if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
    std::sort(order.begin(), order.end(),
              [](const TensorNode* a, const TensorNode* b) { return a->id > b->id; });

    auto& seed = grad_of(loss.node());
    seed[0] += 1.0;
    for (TensorNode* n : order)
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(make_node(a.shape(), a.numel()));
    for (size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    register_op(out, {a, b}, [](const TensorNode& o) {
        for (int s = 0; s < 2; ++s) {
            const auto& p = o.parents[s];
            if (!p->requires_grad) continue;
            auto& g = grad_of(p);
            for (size_t i = 0; i < o.data.size(); ++i) g[i] += o.grad[i];
        }
    });
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out(make_node(a.shape(), a.numel()));
    for (size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    register_op(out, {a, b}, [](const TensorNode& o) {
        const auto& pa = o.parents[0];
        const auto& pb = o.parents[1];
        if (pa->requires_grad) {
            auto& g = grad_of(pa);
            for (size_t i = 0; i < o.data.size(); ++i) g[i] += o.grad[i];
        }
        if (pb->requires_grad) {
            auto& g = grad_of(pb);
            for (size_t i = 0; i < o.data.size(); ++i) g[i] -= o.grad[i];
        }
    });
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out(make_node(a.shape(), a.numel()));
    for (size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    register_op(out, {a, b}, [](const TensorNode& o) {
        const auto& pa = o.parents[0];
        const auto& pb = o.parents[1];
        if (pa->requires_grad) {
            auto& g = grad_of(pa);
            for (size_t i = 0; i < o.data.size(); ++i) g[i] += pb->data[i] * o.grad[i];
        }
        if (pb->requires_grad) {
            auto& g = grad_of(pb);
            for (size_t i = 0; i < o.data.size(); ++i) g[i] += pa->data[i] * o.grad[i];
        }
    });
    return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "div");
    Tensor out(make_node(a.shape(), a.numel()));
    for (size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] / b.data()[i];
    register_op(out, {a, b}, [](const TensorNode& o) {
        const auto& pa = o.parents[0];
        const auto& pb = o.parents[1];
        if (pa->requires_grad) {
            auto& g = grad_of(pa);
            for (size_t i = 0; i < o.data.size(); ++i) g[i] += o.grad[i] / pb->data[i];
        }
        if (pb->requires_grad) {
            auto& g = grad_of(pb);
            for (size_t i = 0; i < o.data.size(); ++i)
                g[i] -= o.grad[i] * pa->data[i] / (pb->data[i] * pb->data[i]);
        }
    });
    return out;
}

Tensor add_scalar(const Tensor& a, double s) {
    Tensor out(make_node(a.shape(), a.numel()));
    for (size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + s;
    register_op(out, {a}, [](const TensorNode& o) {
        const auto& p = o.parents[0];
        if (!p->requires_grad) return;
        auto& g = grad_of(p);
        for (size_t i = 0; i < o.data.size(); ++i) g[i] += o.grad[i];
    });
    return out;
}

Tensor mul_scalar(const Tensor& a, double s) {
    Tensor out(make_node(a.shape(), a.numel()));
    for (size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * s;
    register_op(out, {a}, [s](const TensorNode& o) {
        const auto& p = o.parents[0];
        if (!p->requires_grad) return;
        auto& g = grad_of(p);
        for (size_t i = 0; i < o.data.size(); ++i) g[i] += s * o.grad[i];
    });
    return out;
}

Tensor exp(const Tensor& a) {
    return unary_op(
        a, "exp", [](double x) { return std::exp(x); },
        [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary_op(
        a, "log", [](double x) { return std::log(x); },
        [](double x, double) { return 1.0 / x; });
}

Tensor tanh(const Tensor& a) {
    return unary_op(
        a, "tanh", [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(
        a, "sigmoid",
        [](double x) {
            // Stable in both tails.
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor power(const Tensor& a, double p) {
    if (p == 2.0) {
        return unary_op(
            a, "power2", [](double x) { return x * x; },
            [](double x, double) { return 2.0 * x; });
    }
    return unary_op(
        a, "power", [p](double x) { return std::pow(x, p); },
        [p](double x, double) { return p * std::pow(x, p - 1.0); });
}

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    Tensor out(make_node({1}, 1));
    out.data()[0] = acc;
    register_op(out, {a}, [](const TensorNode& o) {
        const auto& p = o.parents[0];
        if (!p->requires_grad) return;
        auto& g = grad_of(p);
        for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[0];
    });
    return out;
}

Tensor mean(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.numel());
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    Tensor out(make_node({1}, 1));
    out.data()[0] = acc * inv;
    register_op(out, {a}, [inv](const TensorNode& o) {
        const auto& p = o.parents[0];
        if (!p->requires_grad) return;
        auto& g = grad_of(p);
        for (size_t i = 0; i < g.size(); ++i) g[i] += inv * o.grad[0];
    });
    return out;
}

Tensor rowmax(const Tensor& a) {
    require_2d(a, "rowmax");
    const size_t r = a.dim(0), c = a.dim(1);
    Tensor out(make_node({r}, r));
    std::vector<size_t> argmax(r);
    for (size_t i = 0; i < r; ++i) {
        const double* row = a.data().data() + i * c;
        size_t best = 0;
        for (size_t j = 1; j < c; ++j)
            if (row[j] > row[best]) best = j;
        argmax[i] = best;
        out.data()[i] = row[best];
    }
    register_op(out, {a}, [argmax, c](const TensorNode& o) {
        const auto& p = o.parents[0];
        if (!p->requires_grad) return;
        auto& g = grad_of(p);
        for (size_t i = 0; i < o.data.size(); ++i) g[i * c + argmax[i]] += o.grad[i];
    });
    return out;
}

Tensor gather_rows(const Tensor& table, std::span<const int> ids) {
    require_2d(table, "gather_rows");
    const size_t rows = table.dim(0), d = table.dim(1);
    for (int id : ids)
        if (id < 0 || static_cast<size_t>(id) >= rows)
            throw ContractError("gather_rows: index out of range");
    Tensor out(make_node({ids.size(), d}, ids.size() * d));
    for (size_t t = 0; t < ids.size(); ++t)
        std::copy_n(table.data().data() + static_cast<size_t>(ids[t]) * d, d,
                    out.data().data() + t * d);
    std::vector<int> idv(ids.begin(), ids.end());
    register_op(out, {table}, [idv, d](const TensorNode& o) {
        const auto& p = o.parents[0];
        if (!p->requires_grad) return;
        auto& g = grad_of(p);
        for (size_t t = 0; t < idv.size(); ++t) {
            double* dst = g.data() + static_cast<size_t>(idv[t]) * d;
            const double* src = o.grad.data() + t * d;
            for (size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
    });
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no inputs");
    const size_t r = parts[0].dim(0);
    size_t total = 0;
    for (const auto& p : parts) {
        require_2d(p, "concat_cols");
        if (p.dim(0) != r) throw ShapeError("concat_cols: row mismatch");
        total += p.dim(1);
    }
    Tensor out(make_node({r, total}, r * total));
    size_t off = 0;
    for (const auto& p : parts) {
        const size_t c = p.dim(1);
        for (size_t i = 0; i < r; ++i)
            std::copy_n(p.data().data() + i * c, c, out.data().data() + i * total + off);
        off += c;
    }
    std::vector<size_t> widths;
    for (const auto& p : parts) widths.push_back(p.dim(1));
    register_op(out, parts, [widths, total](const TensorNode& o) {
        const size_t r2 = o.shape[0];
        size_t off2 = 0;
        for (size_t s = 0; s < o.parents.size(); ++s) {
            const auto& p = o.parents[s];
            const size_t c = widths[s];
            if (p->requires_grad) {
                auto& g = grad_of(p);
                for (size_t i = 0; i < r2; ++i) {
                    const double* src = o.grad.data() + i * total + off2;
                    double* dst = g.data() + i * c;
                    for (size_t j = 0; j < c; ++j) dst[j] += src[j];
                }
            }
            off2 += c;
        }
    });
    return out;
}

Tensor slice_cols(const Tensor& a, size_t c0, size_t c1) {
    require_2d(a, "slice_cols");
    const size_t r = a.dim(0), c = a.dim(1);
    if (c0 >= c1 || c1 > c) throw ShapeError("slice_cols: bad range");
    const size_t w = c1 - c0;
    Tensor out(make_node({r, w}, r * w));
    for (size_t i = 0; i < r; ++i)
        std::copy_n(a.data().data() + i * c + c0, w, out.data().data() + i * w);
    register_op(out, {a}, [c0, c, w](const TensorNode& o) {
        const auto& p = o.parents[0];
        if (!p->requires_grad) return;
        auto& g = grad_of(p);
        const size_t r2 = o.shape[0];
        for (size_t i = 0; i < r2; ++i) {
            const double* src = o.grad.data() + i * w;
            double* dst = g.data() + i * c + c0;
            for (size_t j = 0; j < w; ++j) dst[j] += src[j];
        }
    });
    return out;
}

Tensor slice_rows(const Tensor& a, size_t r0, size_t r1) {
    require_2d(a, "slice_rows");
    const size_t r = a.dim(0), c = a.dim(1);
    if (r0 >= r1 || r1 > r) throw ShapeError("slice_rows: bad range");
    const size_t h = r1 - r0;
    Tensor out(make_node({h, c}, h * c));
    std::copy_n(a.data().data() + r0 * c, h * c, out.data().data());
    register_op(out, {a}, [r0, c](const TensorNode& o) {
        const auto& p = o.parents[0];
        if (!p->requires_grad) return;
        auto& g = grad_of(p);
        const size_t n = o.data.size();
        double* dst = g.data() + r0 * c;
        for (size_t i = 0; i < n; ++i) dst[i] += o.grad[i];
    });
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    require_2d(x, "layer_norm");
    const size_t r = x.dim(0), d = x.dim(1);
    if (gain.numel() != d || bias.numel() != d)
        throw ShapeError("layer_norm: gain/bias must match last axis");
    Tensor out(make_node({r, d}, r * d));
    std::vector<double> inv_std(r), xhat(r * d);
    for (size_t i = 0; i < r; ++i) {
        const double* row = x.data().data() + i * d;
        double mu = 0.0;
        for (size_t j = 0; j < d; ++j) mu += row[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (size_t j = 0; j < d; ++j) {
            double t = row[j] - mu;
            var += t * t;
        }
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[i] = is;
        for (size_t j = 0; j < d; ++j) {
            const double xh = (row[j] - mu) * is;
            xhat[i * d + j] = xh;
            out.data()[i * d + j] = gain.data()[j] * xh + bias.data()[j];
        }
    }
    register_op(out, {x, gain, bias},
                [inv_std = std::move(inv_std), xhat = std::move(xhat), d](const TensorNode& o) {
                    const auto& px = o.parents[0];
                    const auto& pg = o.parents[1];
                    const auto& pb = o.parents[2];
                    const size_t r2 = o.shape[0];
                    const double invd = 1.0 / static_cast<double>(d);
                    if (pg->requires_grad) {
                        auto& g = grad_of(pg);
                        for (size_t i = 0; i < r2; ++i)
                            for (size_t j = 0; j < d; ++j)
                                g[j] += o.grad[i * d + j] * xhat[i * d + j];
                    }
                    if (pb->requires_grad) {
                        auto& g = grad_of(pb);
                        for (size_t i = 0; i < r2; ++i)
                            for (size_t j = 0; j < d; ++j) g[j] += o.grad[i * d + j];
                    }
                    if (px->requires_grad) {
                        auto& g = grad_of(px);
                        for (size_t i = 0; i < r2; ++i) {
                            const double* go = o.grad.data() + i * d;
                            const double* xh = xhat.data() + i * d;
                            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                            for (size_t j = 0; j < d; ++j) {
                                const double dxh = go[j] * pg->data[j];
                                sum_dxhat += dxh;
                                sum_dxhat_xhat += dxh * xh[j];
                            }
                            for (size_t j = 0; j < d; ++j) {
                                const double dxh = go[j] * pg->data[j];
                                g[i * d + j] += inv_std[i] * (dxh - invd * sum_dxhat -
                                                              invd * xh[j] * sum_dxhat_xhat);
                            }
                        }
                    }
                });
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) throw ShapeError("matmul: inner extents disagree");
    Tensor out(make_node({m, n}, m * n));
    kernels::matmul(m, k, n, a.data().data(), b.data().data(), out.data().data());
    register_op(out, {a, b}, [m, k, n](const TensorNode& o) {
        const auto& pa = o.parents[0];
        const auto& pb = o.parents[1];
        if (pa->requires_grad) {
            // dA = dC * B^T
            std::vector<double> tmp(m * k);
            kernels::matmul_nt(m, n, k, o.grad.data(), pb->data.data(), tmp.data());
            auto& g = grad_of(pa);
            for (size_t i = 0; i < tmp.size(); ++i) g[i] += tmp[i];
        }
        if (pb->requires_grad) {
            // dB = A^T * dC
            std::vector<double> tmp(k * n);
            kernels::matmul_tn(k, m, n, pa->data.data(), o.grad.data(), tmp.data());
            auto& g = grad_of(pb);
            for (size_t i = 0; i < tmp.size(); ++i) g[i] += tmp[i];
        }
    });
    return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul_nt");
    require_2d(b, "matmul_nt");
    const size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    if (b.dim(1) != k) throw ShapeError("matmul_nt: inner extents disagree");
    Tensor out(make_node({m, n}, m * n));
    kernels::matmul_nt(m, k, n, a.data().data(), b.data().data(), out.data().data());
    register_op(out, {a, b}, [m, k, n](const TensorNode& o) {
        const auto& pa = o.parents[0];
        const auto& pb = o.parents[1];
        if (pa->requires_grad) {
            // dA = dC * B
            std::vector<double> tmp(m * k);
            kernels::matmul(m, n, k, o.grad.data(), pb->data.data(), tmp.data());
            auto& g = grad_of(pa);
            for (size_t i = 0; i < tmp.size(); ++i) g[i] += tmp[i];
        }
        if (pb->requires_grad) {
            // dB = dC^T * A
            std::vector<double> tmp(n * k);
            kernels::matmul_tn(n, m, k, o.grad.data(), pa->data.data(), tmp.data());
            auto& g = grad_of(pb);
            for (size_t i = 0; i < tmp.size(); ++i) g[i] += tmp[i];
        }
    });
    return out;
}

namespace {

// Shared forward for softmax/log_softmax; writes probabilities into out.
void softmax_rows(const std::vector<double>& x, size_t r, size_t c, std::vector<double>& out) {
    for (size_t i = 0; i < r; ++i) {
        const double* row = x.data() + i * c;
        double mx = row[0];
        for (size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (size_t j = 0; j < c; ++j) {
            const double e = std::exp(row[j] - mx);
            out[i * c + j] = e;
            z += e;
        }
        const double inv = 1.0 / z;
        for (size_t j = 0; j < c; ++j) out[i * c + j] *= inv;
    }
}

}  // namespace

Tensor softmax(const Tensor& a) {
    require_2d(a, "softmax");
    if (a.dim(1) < 1) throw ShapeError("softmax: empty last axis");
    const size_t r = a.dim(0), c = a.dim(1);
    Tensor out(make_node({r, c}, r * c));
    softmax_rows(a.data(), r, c, out.data());
    register_op(out, {a}, [r, c](const TensorNode& o) {
        const auto& p = o.parents[0];
        if (!p->requires_grad) return;
        auto& g = grad_of(p);
        for (size_t i = 0; i < r; ++i) {
            const double* y = o.data.data() + i * c;
            const double* gy = o.grad.data() + i * c;
            double dot = 0.0;
            for (size_t j = 0; j < c; ++j) dot += y[j] * gy[j];
            for (size_t j = 0; j < c; ++j) g[i * c + j] += y[j] * (gy[j] - dot);
        }
    });
    return out;
}

Tensor log_softmax(const Tensor& a) {
    require_2d(a, "log_softmax");
    const size_t r = a.dim(0), c = a.dim(1);
    Tensor out(make_node({r, c}, r * c));
    std::vector<double> probs(r * c);
    softmax_rows(a.data(), r, c, probs);
    for (size_t i = 0; i < r * c; ++i) out.data()[i] = std::log(probs[i]);
    register_op(out, {a}, [probs = std::move(probs), r, c](const TensorNode& o) {
        const auto& p = o.parents[0];
        if (!p->requires_grad) return;
        auto& g = grad_of(p);
        for (size_t i = 0; i < r; ++i) {
            const double* gy = o.grad.data() + i * c;
            double sg = 0.0;
            for (size_t j = 0; j < c; ++j) sg += gy[j];
            for (size_t j = 0; j < c; ++j) g[i * c + j] += gy[j] - probs[i * c + j] * sg;
        }
    });
    return out;
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets) {
    require_2d(logits, "cross_entropy");
    const size_t t = logits.dim(0), v = logits.dim(1);
    if (targets.size() != t) throw ShapeError("cross_entropy: one target per row required");
    for (int id : targets)
        if (id < 0 || static_cast<size_t>(id) >= v)
            throw ContractError("cross_entropy: target id out of range");
    std::vector<double> probs(t * v);
    softmax_rows(logits.data(), t, v, probs);
    double nll = 0.0;
    for (size_t i = 0; i < t; ++i) nll -= std::log(probs[i * v + targets[i]]);
    Tensor out(make_node({1}, 1));
    out.data()[0] = nll / static_cast<double>(t);
    std::vector<int> tv(targets.begin(), targets.end());
    register_op(out, {logits},
                [probs = std::move(probs), tv = std::move(tv), t, v](const TensorNode& o) {
                    const auto& p = o.parents[0];
                    if (!p->requires_grad) return;
                    auto& g = grad_of(p);
                    const double scale = o.grad[0] / static_cast<double>(t);
                    for (size_t i = 0; i < t; ++i) {
                        for (size_t j = 0; j < v; ++j) g[i * v + j] += scale * probs[i * v + j];
                        g[i * v + tv[i]] -= scale;
                    }
                });
    return out;
}

bool all_finite(const Tensor& t) {
    for (double v : t.data())
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace ulab
