#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sparsegan/errors.hpp"

namespace sparsegan {

class Rng;

using Shape = std::vector<int64_t>;

std::string shape_str(const Shape& s);
int64_t shape_numel(const Shape& s);

class Tensor;

struct BackwardArgs {
    const std::vector<Tensor>& parents;
    const Tensor& output;
    const Tensor& grad_out;
};

// One gradient per parent; an undefined Tensor means "no gradient".
using BackwardRule = std::function<std::vector<Tensor>(const BackwardArgs&)>;

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::shared_ptr<TensorImpl> grad; // lazily allocated, same shape

    uint64_t node_id = 0;
    const char* op_name = nullptr; // null for leaves
    std::vector<Tensor> parents;
    BackwardRule backward;
    // Rules written as compositions of graph ops stay differentiable; rules
    // that fill raw buffers (cross entropy) must clear this flag.
    bool twice_differentiable = true;
};

// Value-semantics handle to a shared node. Data is immutable once a tensor
// joins a graph; grad buffers and leaf parameters (updated between steps)
// are the exceptions.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false); // shape {1,1}
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }
    int64_t rows() const;
    int64_t cols() const;
    std::span<const double> data() const { return impl_->data; }
    // In-place access for parameter updates and finite-difference probes.
    // Never mutate a tensor that already participates in a live graph.
    std::span<double> raw() { return impl_->data; }
    double item() const;
    double at(int64_t r, int64_t c) const;

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool v);
    bool is_leaf() const { return impl_->backward == nullptr; }

    Tensor grad() const;
    void zero_grad() { impl_->grad.reset(); }
    void accumulate_grad(std::span<const double> values);

    uint64_t id() const { return impl_->node_id; }
    const char* op_name() const { return impl_->op_name; }
    TensorImpl* impl() const { return impl_.get(); }

    static Tensor make_node(Shape shape, std::vector<double> data, const char* op_name,
                            std::vector<Tensor> parents, BackwardRule rule,
                            bool twice_differentiable = true);

    friend bool same_data(const Tensor& a, const Tensor& b);

private:
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<TensorImpl> impl_;
};

// Graph recording is a thread-local mode: ops attach backward rules only
// while it is enabled (default on).
bool grad_mode_enabled();

class GradModeGuard {
public:
    explicit GradModeGuard(bool enable);
    ~GradModeGuard();
    GradModeGuard(const GradModeGuard&) = delete;
    GradModeGuard& operator=(const GradModeGuard&) = delete;

private:
    bool saved_;
};

class NoGradGuard : public GradModeGuard {
public:
    NoGradGuard() : GradModeGuard(false) {}
};

// Reverse-mode sweep from a scalar loss. Visits reachable nodes in reverse
// topological order exactly once and accumulates additively into .grad of
// every tensor with requires_grad set.
void backward(const Tensor& loss, bool create_graph = false);

// Returns gradients of `loss` w.r.t. `wrt` without touching .grad buffers.
// With create_graph=true the results are graph nodes and can be
// differentiated again (the gradient-penalty path). Unused inputs get zeros.
std::vector<Tensor> grad_of(const Tensor& loss, const std::vector<Tensor>& wrt,
                            bool create_graph = false);

} // namespace sparsegan
