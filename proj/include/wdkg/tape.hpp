#ifndef WDKG_TAPE_HPP
#define WDKG_TAPE_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "wdkg/tensor.hpp"

namespace wdkg::ad {

struct Var {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
};

// Records forward operations with their adjoint rules; one tape per
// evaluation, confined to a single thread. Nodes are appended in creation
// order, so the record is topologically sorted by construction and the
// backward pass is a single reverse sweep visiting each node once.
class Tape {
public:
    Var constant(Tensor v);
    Var param(Tensor v); // gradient-carrying leaf

    // elementwise
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double k);
    Var tanh_op(Var a);
    Var sigmoid(Var a);
    Var relu(Var a);
    Var leaky_relu(Var a, double slope);

    // linear algebra
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var add_rowvec(Var m, Var row); // broadcast row vector over matrix rows
    Var outer_sum(Var u, Var w);    // out[i][j] = u[i] + w[j]
    Var normalize_rows(Var a);      // rows scaled to unit L2 norm (zero rows stay zero)
    Var scale_by(Var t, Var scalar);

    // shape
    Var concat(const std::vector<Var>& parts, std::size_t axis);
    Var slice(Var a, std::size_t axis, std::size_t start, std::size_t len);
    Var reshape(Var a, Shape s);

    // reductions / normalizers
    Var sum_all(Var a);
    Var mean_all(Var a);
    Var sum_axis(Var a, std::size_t axis);
    Var softmax(Var a, std::size_t axis);
    // Row softmax over mask==1 entries only; off-mask outputs are exactly 0.
    Var masked_row_softmax(Var logits, const Tensor& mask);

    // valid 2-D multichannel cross-correlation:
    // input (N,T,c_in), kernels (c_out,Ks,Kt,c_in) -> (N-Ks+1, T-Kt+1, c_out)
    Var conv2d(Var input, Var kernels);

    void backward(Var loss); // throws NotScalar unless loss has one element

    const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
    // Gradient accumulated by the last backward pass (zeros if untouched).
    const Tensor& grad(Var v);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad; // allocated lazily during backward
        bool requires_grad = false;
        std::function<void(Tape&)> back;
    };

    std::deque<Node> nodes_;

    Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> back);
    Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
    bool needs(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }
    Tensor& grad_buf(Var v);
};

// Central-difference check of the analytic gradient. `build` must be a
// deterministic function of the tape inputs it is handed; returns the max
// over components of |analytic - numeric| / max(1, |analytic|, |numeric|).
using BuildFn = std::function<Var(Tape&, const std::vector<Var>&)>;
double grad_check(const BuildFn& build, const std::vector<Tensor>& point, double eps = 1e-5);

} // namespace wdkg::ad

#endif
