#include "sparsegan/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "sparsegan/ops.hpp"
#include "sparsegan/rng.hpp"

namespace sparsegan {

namespace {

std::atomic<uint64_t> g_next_node_id{1};

thread_local bool g_grad_mode = true;

} // namespace

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t e : s) n *= e;
    return n;
}

bool grad_mode_enabled() { return g_grad_mode; }

GradModeGuard::GradModeGuard(bool enable) : saved_(g_grad_mode) { g_grad_mode = enable; }
GradModeGuard::~GradModeGuard() { g_grad_mode = saved_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return from_data(shape, std::vector<double>(static_cast<size_t>(shape_numel(shape)), 0.0),
                     requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    return from_data(shape, std::vector<double>(static_cast<size_t>(shape_numel(shape)), value),
                     requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1, 1}, {value}, requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
        throw ShapeError("tensor: data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
    }
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    impl->node_id = g_next_node_id.fetch_add(1, std::memory_order_relaxed);
    return Tensor(std::move(impl));
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
    std::vector<double> data(static_cast<size_t>(shape_numel(shape)));
    for (double& v : data) v = rng.normal(0.0, stddev);
    return from_data(std::move(shape), std::move(data), requires_grad);
}

int64_t Tensor::rows() const {
    if (impl_->shape.size() != 2) {
        throw ShapeError("rows(): tensor is not rank-2, shape " + shape_str(impl_->shape));
    }
    return impl_->shape[0];
}

int64_t Tensor::cols() const {
    if (impl_->shape.size() != 2) {
        throw ShapeError("cols(): tensor is not rank-2, shape " + shape_str(impl_->shape));
    }
    return impl_->shape[1];
}

double Tensor::item() const {
    if (numel() != 1) {
        throw ShapeError("item(): tensor has " + std::to_string(numel()) + " elements, shape " +
                         shape_str(impl_->shape));
    }
    return impl_->data[0];
}

double Tensor::at(int64_t r, int64_t c) const {
    return impl_->data[static_cast<size_t>(r * cols() + c)];
}

void Tensor::set_requires_grad(bool v) {
    if (v && !is_leaf()) {
        throw Error("set_requires_grad: only leaf tensors can change the flag");
    }
    impl_->requires_grad = v;
}

Tensor Tensor::grad() const {
    if (!impl_->grad) return Tensor();
    return Tensor(impl_->grad);
}

void Tensor::accumulate_grad(std::span<const double> values) {
    if (static_cast<int64_t>(values.size()) != numel()) {
        throw ShapeError("accumulate_grad: got " + std::to_string(values.size()) +
                         " values for shape " + shape_str(impl_->shape));
    }
    if (!impl_->grad) {
        auto g = std::make_shared<TensorImpl>();
        g->shape = impl_->shape;
        g->data.assign(values.begin(), values.end());
        g->node_id = g_next_node_id.fetch_add(1, std::memory_order_relaxed);
        impl_->grad = std::move(g);
        return;
    }
    double* dst = impl_->grad->data.data();
    for (size_t i = 0; i < values.size(); ++i) dst[i] += values[i];
}

Tensor Tensor::make_node(Shape shape, std::vector<double> data, const char* op_name,
                         std::vector<Tensor> parents, BackwardRule rule,
                         bool twice_differentiable) {
    Tensor out = from_data(std::move(shape), std::move(data), false);
    bool record = grad_mode_enabled();
    if (record) {
        bool any = false;
        for (const Tensor& p : parents) {
            if (p.requires_grad()) {
                any = true;
                break;
            }
        }
        record = any;
    }
    if (record) {
        out.impl_->requires_grad = true;
        out.impl_->op_name = op_name;
        out.impl_->parents = std::move(parents);
        out.impl_->backward = std::move(rule);
        out.impl_->twice_differentiable = twice_differentiable;
    }
    return out;
}

bool same_data(const Tensor& a, const Tensor& b) { return a.impl_ == b.impl_; }

namespace {

// Gradients of every node reachable from `loss`, keyed by node. Nodes are
// visited in decreasing creation id, which is a reverse topological order
// because an op's output is always created after its inputs.
std::unordered_map<TensorImpl*, Tensor> compute_grads(const Tensor& loss, bool create_graph) {
    if (!loss.defined()) throw Error("backward: undefined loss tensor");
    if (loss.numel() != 1) {
        throw ShapeError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    }

    std::vector<Tensor> order;
    {
        std::unordered_set<TensorImpl*> seen;
        std::vector<Tensor> stack{loss};
        seen.insert(loss.impl());
        while (!stack.empty()) {
            Tensor t = stack.back();
            stack.pop_back();
            order.push_back(t);
            for (const Tensor& p : t.impl()->parents) {
                if (seen.insert(p.impl()).second) stack.push_back(p);
            }
        }
        std::sort(order.begin(), order.end(),
                  [](const Tensor& a, const Tensor& b) { return a.id() > b.id(); });
    }

    std::unordered_map<TensorImpl*, Tensor> grads;
    grads.reserve(order.size());
    grads.emplace(loss.impl(), Tensor::full(loss.shape(), 1.0));

    GradModeGuard mode(create_graph);
    for (const Tensor& node : order) {
        auto it = grads.find(node.impl());
        if (it == grads.end()) continue;
        TensorImpl* impl = node.impl();
        if (!impl->backward) continue;
        if (create_graph && !impl->twice_differentiable) {
            throw Error(std::string("backward: op '") + (impl->op_name ? impl->op_name : "?") +
                        "' does not support double backward");
        }
        BackwardArgs args{impl->parents, node, it->second};
        std::vector<Tensor> parent_grads = impl->backward(args);
        if (parent_grads.size() != impl->parents.size()) {
            throw Error(std::string("backward: rule for '") + impl->op_name +
                        "' returned wrong gradient count");
        }
        for (size_t i = 0; i < parent_grads.size(); ++i) {
            const Tensor& parent = impl->parents[i];
            Tensor& pg = parent_grads[i];
            if (!pg.defined() || !parent.requires_grad()) continue;
            if (pg.shape() != parent.shape()) {
                throw ShapeError(std::string("backward: rule for '") + impl->op_name +
                                 "' produced gradient shape " + shape_str(pg.shape()) +
                                 " for parent shape " + shape_str(parent.shape()));
            }
            auto pit = grads.find(parent.impl());
            if (pit == grads.end()) {
                grads.emplace(parent.impl(), pg);
            } else {
                pit->second = add(pit->second, pg);
            }
        }
    }
    return grads;
}

} // namespace

void backward(const Tensor& loss, bool create_graph) {
    auto grads = compute_grads(loss, create_graph);
    for (auto& [impl, g] : grads) {
        if (!impl->requires_grad) continue;
        if (!impl->grad) {
            auto gi = std::make_shared<TensorImpl>();
            gi->shape = impl->shape;
            gi->data = std::vector<double>(g.data().begin(), g.data().end());
            gi->node_id = g_next_node_id.fetch_add(1, std::memory_order_relaxed);
            impl->grad = std::move(gi);
        } else {
            double* dst = impl->grad->data.data();
            auto src = g.data();
            for (size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
        }
    }
}

std::vector<Tensor> grad_of(const Tensor& loss, const std::vector<Tensor>& wrt,
                            bool create_graph) {
    auto grads = compute_grads(loss, create_graph);
    std::vector<Tensor> out;
    out.reserve(wrt.size());
    for (const Tensor& t : wrt) {
        auto it = grads.find(t.impl());
        if (it == grads.end()) {
            out.push_back(Tensor::zeros(t.shape()));
        } else {
            out.push_back(it->second);
        }
    }
    return out;
}

} // namespace sparsegan
