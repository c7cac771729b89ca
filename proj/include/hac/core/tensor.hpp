#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace hac {

using real = double;
using Shape = std::vector<long>;

inline long shape_numel(const Shape& s) {
    long n = 1;
    for (long d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

// One node of the reverse-mode tape. `backward` pulls this node's grad into
// its parents; nodes are created in program order so ids are a topological
// order of the graph.
struct Node {
    Shape shape;
    std::vector<real> value;
    std::vector<real> grad;
    bool requires_grad = false;
    std::uint64_t id = 0;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backward;

    long numel() const { return (long)value.size(); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

inline std::uint64_t next_node_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        auto n = std::make_shared<Node>();
        n->shape = std::move(shape);
        n->value.assign(shape_numel(n->shape), 0.0);
        n->requires_grad = requires_grad;
        n->id = next_node_id();
        return Tensor(n);
    }

    static Tensor from_data(Shape shape, std::vector<real> data, bool requires_grad = false) {
        check((long)data.size() == shape_numel(shape),
              "tensor data size " + std::to_string(data.size()) + " does not match shape " + shape_str(shape));
        auto n = std::make_shared<Node>();
        n->shape = std::move(shape);
        n->value = std::move(data);
        n->requires_grad = requires_grad;
        n->id = next_node_id();
        return Tensor(n);
    }

    static Tensor scalar(real v, bool requires_grad = false) {
        return from_data({1}, {v}, requires_grad);
    }

    bool defined() const { return (bool)n_; }
    const Shape& shape() const { return n_->shape; }
    long dim(int i) const { return n_->shape[(size_t)i]; }
    int rank() const { return (int)n_->shape.size(); }
    long numel() const { return n_->numel(); }
    bool requires_grad() const { return n_->requires_grad; }

    real* data() { return n_->value.data(); }
    const real* data() const { return n_->value.data(); }
    std::vector<real>& values() { return n_->value; }
    const std::vector<real>& values() const { return n_->value; }
    real item() const {
        check(numel() == 1, "item() on non-scalar tensor " + shape_str(shape()));
        return n_->value[0];
    }

    const real* grad_data() const { return n_->grad.data(); }
    std::vector<real>& grad() { return n_->grad; }
    bool has_grad() const { return n_->grad.size() == n_->value.size(); }
    void zero_grad() {
        if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), 0.0);
    }

    std::shared_ptr<Node> node() const { return n_; }

    // Reverse pass from a scalar. Walks every node reachable through parent
    // links in decreasing creation order, which is a valid reverse
    // topological order because parents always predate children.
    void backward() const {
        check(numel() == 1, "backward() requires a scalar loss");
        check(n_->requires_grad, "backward() on a tensor with no gradient path");
        std::vector<std::shared_ptr<Node>> nodes = reachable();
        std::sort(nodes.begin(), nodes.end(),
                  [](const auto& a, const auto& b) { return a->id > b->id; });
        n_->ensure_grad();
        n_->grad[0] += 1.0;
        for (auto& node : nodes) {
            if (node->backward && node->grad.size() == node->value.size()) node->backward();
        }
    }

private:
    std::vector<std::shared_ptr<Node>> reachable() const {
        std::vector<std::shared_ptr<Node>> out;
        std::vector<Node*> stack{n_.get()};
        std::unordered_set<const Node*> seen{n_.get()};
        out.push_back(n_);
        while (!stack.empty()) {
            Node* cur = stack.back();
            stack.pop_back();
            for (auto& p : cur->parents) {
                if (!p->requires_grad) continue;
                if (!seen.insert(p.get()).second) continue;
                out.push_back(p);
                stack.push_back(p.get());
            }
        }
        return out;
    }

    std::shared_ptr<Node> n_;
};

// Builds the output node for an op. Parents keep input values alive for the
// backward closure.
inline std::shared_ptr<Node> make_op_node(Shape shape, std::vector<std::shared_ptr<Node>> parents) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value.assign(shape_numel(n->shape), 0.0);
    for (auto& p : parents)
        if (p->requires_grad) n->requires_grad = true;
    n->parents = std::move(parents);
    n->id = next_node_id();
    return n;
}

}  // namespace hac
