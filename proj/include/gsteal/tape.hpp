#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "gsteal/tensor.hpp"

namespace gsteal {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while its Tape lives.
class Var {
public:
    Var() = default;
    const Tensor& value() const;
    const Tensor& grad() const;
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

// Eager reverse-mode tape over dense tensors. Each primitive records its
// forward value plus a closure that scatters the output gradient back to
// its inputs. The reverse pass walks nodes once, in reverse creation order,
// which is reverse topological order by construction. Single-threaded: a
// tape belongs to one training step at a time.
class Tape {
public:
    Var leaf(Tensor value, bool requires_grad = false);

    // [m x k] . [k x n] -> [m x n]
    Var matmul(Var a, Var b);
    // Same shape, or b a row vector [1 x d] broadcast over a's rows.
    Var add(Var a, Var b);
    Var scale(Var a, double s);
    // Elementwise product with a trainable scalar (shape {1,1}).
    Var scale_by(Var a, Var s);
    // Row i of a multiplied by coeffs[i]; coefficients are constants.
    Var scale_rows(Var a, std::vector<double> coeffs);
    Var relu(Var a);
    Var sigmoid(Var a);
    Var log(Var a);
    // [n x d] -> [1 x d]
    Var row_mean(Var a);
    Var row_sum(Var a);
    Var gather_rows(Var a, std::vector<std::size_t> rows);
    // out[dst[i], :] += a[i, :]; output has out_rows rows.
    Var scatter_add_rows(Var a, std::vector<std::size_t> dst, std::size_t out_rows);
    Var gather_cols(Var a, std::vector<std::size_t> cols);
    Var softmax_rows(Var a);
    Var concat_rows(Var a, Var b);

    // Mean over rows of -log softmax(logits_r)[labels[r]].
    Var cross_entropy(Var logits, const std::vector<int>& labels);
    // Mean over rows of cross-entropy against a full target distribution.
    Var cross_entropy_soft(Var logits, const Tensor& target_probs);

    // Extension point for fused differentiable operations defined outside
    // this file. backward receives the output gradient and must accumulate
    // into the parents' gradient tensors (same order as `parents`).
    using CustomBackward = std::function<void(
        const Tensor& grad_out, const std::vector<Var>& parents,
        const std::vector<Tensor*>& parent_grads)>;
    Var custom_op(Tensor value, std::vector<Var> parents, CustomBackward backward);

    // Reverse pass from a scalar root (seeded with 1).
    void backward(Var root);
    // Reverse pass from an arbitrary root with an explicit seed gradient.
    void backward(Var root, const Tensor& seed);

    const Tensor& value(Var v) const { return nodes_[v.id_].value; }
    const Tensor& grad(Var v) const { return nodes_[v.id_].grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, std::size_t)> back;  // empty for leaves
    };

    Var push(Tensor value, std::function<void(Tape&, std::size_t)> back);
    Tensor& grad_ref(std::size_t id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
};

}  // namespace gsteal
