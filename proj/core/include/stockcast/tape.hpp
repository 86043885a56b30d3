#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "stockcast/rng.hpp"
#include "stockcast/tensor.hpp"

namespace stockcast::ad {

/// Handle to a node on a Tape.
struct Var {
    std::uint32_t id = UINT32_MAX;
    bool valid() const { return id != UINT32_MAX; }
};

/// Define-by-run reverse-mode automatic differentiation tape.
///
/// Every operation validates shapes, records a backward rule, and verifies
/// the output is finite (a NaN/Inf anywhere aborts the step naming the op).
/// One backward pass per forward pass; reset() clears the recording. A tape
/// is single-threaded; separate tapes may run concurrently.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Registers an input. Parameters pass requires_grad = true.
    Var leaf(Tensor value, bool requires_grad = false);

    // ---- forward ops ----
    Var matmul(Var a, Var b);
    Var add(Var a, Var b);  // same shape, or b a {1,c} row vector broadcast over rows
    Var mul(Var a, Var b);  // elementwise, same shape
    Var scale(Var a, double c);
    Var concat(std::span<const Var> parts, std::size_t axis);
    Var slice(Var a, std::size_t axis, std::size_t start, std::size_t len);
    Var transpose(Var a);
    /// 1-D convolution along axis 0 (time). x is (L x Cin), kernel is
    /// (Cout x Cin x K) with K odd, bias is (1 x Cout); stride 1, same
    /// padding, so the output is (L x Cout).
    Var conv1d(Var x, Var kernel, Var bias);
    Var softmax(Var a, std::size_t axis);
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var relu(Var a);
    /// Train mode zeroes entries with probability rate and scales survivors
    /// by 1/(1-rate); eval mode is the exact identity (no node recorded).
    Var dropout(Var a, double rate, Rng& rng, bool train);
    Var mean(Var a);
    Var mse_loss(Var pred, Var target);
    /// Builds a (k x C) matrix from row `row` of k same-shaped matrices.
    Var stack_rows(std::span<const Var> mats, std::size_t row);

    // ---- access ----
    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    /// Gradient of the last backward()'s loss w.r.t. v; zeros if the node
    /// does not influence the loss.
    const Tensor& grad(Var v);

    /// Reverse accumulation from a scalar loss.
    /// Errors: NonScalarLoss, TapeAlreadyConsumed.
    void backward(Var loss);

    /// Clears all nodes and re-arms backward().
    void reset();

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;  // empty until needed
        bool requires_grad = false;
        std::function<void(Tape&, const Tensor&)> backward;
    };

    Var push(Tensor value, bool requires_grad,
             std::function<void(Tape&, const Tensor&)> back, const char* op);
    Tensor& grad_buf(Var v);
    bool needs(Var v) const { return nodes_[v.id].requires_grad; }

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

}  // namespace stockcast::ad
