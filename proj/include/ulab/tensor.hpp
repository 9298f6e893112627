#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ulab/rng.hpp"

namespace ulab {

// Reverse-mode autodiff over dense double tensors. The graph is implicit:
// every op output records its parent nodes and a backward closure, and nodes
// carry a creation-order id. backward() walks reachable nodes in decreasing
// id order, which is a valid topological order because inputs are always
// created before their consumers. One graph is single-threaded; independent
// graphs may live on different threads (the id counter is thread-local).

struct TensorNode {
    std::vector<size_t> shape;
    std::vector<double> data;
    std::vector<double> grad;  // sized on first accumulation
    bool requires_grad = false;
    uint64_t id = 0;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(const TensorNode&)> backward_fn;

    size_t numel() const { return data.size(); }
};

// Gradient recording is on by default; NoGrad suspends it (evaluation paths).
bool grad_enabled();
class NoGrad {
  public:
    NoGrad();
    ~NoGrad();
    NoGrad(const NoGrad&) = delete;
    NoGrad& operator=(const NoGrad&) = delete;
};

class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

    static Tensor zeros(const std::vector<size_t>& shape, bool requires_grad = false);
    static Tensor full(const std::vector<size_t>& shape, double value,
                       bool requires_grad = false);
    static Tensor from(const std::vector<size_t>& shape, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    // Gaussian init, deterministic under the caller's Rng.
    static Tensor randn(const std::vector<size_t>& shape, Rng& rng, double stddev,
                        bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<size_t>& shape() const { return node_->shape; }
    size_t numel() const { return node_->data.size(); }
    size_t dim(size_t i) const { return node_->shape[i]; }

    std::vector<double>& data() { return node_->data; }
    const std::vector<double>& data() const { return node_->data; }
    double item() const;  // scalar tensors only

    bool requires_grad() const { return node_ && node_->requires_grad; }
    // Gradient accumulated by backward(); empty until then.
    const std::vector<double>& grad() const { return node_->grad; }
    std::vector<double>& grad_buffer();  // sized+zeroed on demand
    void zero_grad();

    std::shared_ptr<TensorNode>& node() { return node_; }
    const std::shared_ptr<TensorNode>& node() const { return node_; }

  private:
    std::shared_ptr<TensorNode> node_;
};

// Seeds d(loss)/d(loss)=1 and accumulates gradients into every reachable
// requires_grad leaf. Repeated calls accumulate; zero_grad() resets.
void backward(const Tensor& loss);

// Elementwise (same shape).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor power(const Tensor& a, double p);

// Reductions.
Tensor sum(const Tensor& a);   // -> [1]
Tensor mean(const Tensor& a);  // -> [1]
// Max along the last axis of a 2-D tensor; subgradient routes to the first
// maximal element of each row.
Tensor rowmax(const Tensor& a);  // [r,c] -> [r]

// Structure.
Tensor gather_rows(const Tensor& table, std::span<const int> ids);       // [R,d] -> [T,d]
Tensor concat_cols(const std::vector<Tensor>& parts);                    // [T,ci] -> [T,sum ci]
Tensor slice_cols(const Tensor& a, size_t c0, size_t c1);                // [T,c] -> [T,c1-c0]
Tensor slice_rows(const Tensor& a, size_t r0, size_t r1);                // [r,c] -> [r1-r0,c]
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);  // row-wise over last axis

// Matrix products (2-D).
Tensor matmul(const Tensor& a, const Tensor& b);     // [m,k]x[k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m,k]x[n,k]^T

// Row-wise, max-stabilized.
Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);

// Mean negative log-likelihood of targets under logits [T,V].
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets);

bool all_finite(const Tensor& t);

}  // namespace ulab
