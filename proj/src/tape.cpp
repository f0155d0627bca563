#include "wdkg/tape.hpp"

#include <algorithm>
#include <cmath>

namespace wdkg::ad {

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeMismatch(std::string(op) + ": " + shape_str(a.shape()) + " vs " +
                            shape_str(b.shape()));
}

// Iteration geometry for one axis of a row-major tensor: the tensor is a
// sequence of `outer` blocks of `dim * inner` elements.
struct AxisGeom {
    std::size_t outer = 1, dim = 1, inner = 1;
};

AxisGeom axis_geom(const Shape& s, std::size_t axis) {
    AxisGeom g;
    g.dim = s[axis];
    for (std::size_t i = 0; i < axis; ++i) g.outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) g.inner *= s[i];
    return g;
}

} // namespace

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> back) {
    nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, std::move(back)});
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Tensor& Tape::grad_buf(Var v) {
    Node& n = node(v);
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

const Tensor& Tape::grad(Var v) {
    return grad_buf(v); // zeros when backward never reached this node
}

Var Tape::constant(Tensor v) { return push(std::move(v), false, nullptr); }

Var Tape::param(Tensor v) { return push(std::move(v), true, nullptr); }

void Tape::backward(Var loss) {
    const Tensor& lv = value(loss);
    if (lv.size() != 1)
        throw NotScalar("backward: loss has " + std::to_string(lv.size()) + " elements");
    for (auto& n : nodes_) n.grad = Tensor{};
    grad_buf(loss)[0] = 1.0;
    for (std::int32_t i = loss.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.requires_grad || !n.back || n.grad.empty()) continue;
        n.back(*this);
    }
}

// --- elementwise ------------------------------------------------------------

Var Tape::add(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    check_same_shape("add", av, bv);
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    Var o = push(std::move(out), needs(a) || needs(b), nullptr);
    node(o).back = [a, b, o](Tape& t) {
        const Tensor& g = t.node(o).grad;
        if (t.needs(a)) {
            Tensor& ga = t.grad_buf(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.needs(b)) {
            Tensor& gb = t.grad_buf(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
    };
    return o;
}

Var Tape::sub(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    check_same_shape("sub", av, bv);
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    Var o = push(std::move(out), needs(a) || needs(b), nullptr);
    node(o).back = [a, b, o](Tape& t) {
        const Tensor& g = t.node(o).grad;
        if (t.needs(a)) {
            Tensor& ga = t.grad_buf(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.needs(b)) {
            Tensor& gb = t.grad_buf(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    };
    return o;
}

Var Tape::mul(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    check_same_shape("mul", av, bv);
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    Var o = push(std::move(out), needs(a) || needs(b), nullptr);
    node(o).back = [a, b, o](Tape& t) {
        const Tensor& g = t.node(o).grad;
        if (t.needs(a)) {
            const Tensor& bv2 = t.value(b);
            Tensor& ga = t.grad_buf(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
        }
        if (t.needs(b)) {
            const Tensor& av2 = t.value(a);
            Tensor& gb = t.grad_buf(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
        }
    };
    return o;
}

Var Tape::scale(Var a, double k) {
    const Tensor& av = value(a);
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = k * av[i];
    Var o = push(std::move(out), needs(a), nullptr);
    node(o).back = [a, k, o](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& g = t.node(o).grad;
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
    };
    return o;
}

Var Tape::tanh_op(Var a) {
    const Tensor& av = value(a);
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
    Var o = push(std::move(out), needs(a), nullptr);
    node(o).back = [a, o](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& g = t.node(o).grad;
        const Tensor& y = t.value(o);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    };
    return o;
}

Var Tape::sigmoid(Var a) {
    const Tensor& av = value(a);
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-av[i]));
    Var o = push(std::move(out), needs(a), nullptr);
    node(o).back = [a, o](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& g = t.node(o).grad;
        const Tensor& y = t.value(o);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    };
    return o;
}

Var Tape::relu(Var a) {
    const Tensor& av = value(a);
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
    Var o = push(std::move(out), needs(a), nullptr);
    node(o).back = [a, o](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& g = t.node(o).grad;
        const Tensor& x = t.value(a);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (x[i] > 0.0) ga[i] += g[i];
    };
    return o;
}

Var Tape::leaky_relu(Var a, double slope) {
    const Tensor& av = value(a);
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : slope * av[i];
    Var o = push(std::move(out), needs(a), nullptr);
    node(o).back = [a, slope, o](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& g = t.node(o).grad;
        const Tensor& x = t.value(a);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (x[i] > 0.0 ? 1.0 : slope);
    };
    return o;
}

// --- linear algebra ---------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0])
        throw ShapeMismatch("matmul: " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
    const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = av.data() + i * k;
        double* orow = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double x = arow[p];
            if (x == 0.0) continue;
            const double* brow = bv.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += x * brow[j];
        }
    }
    Var o = push(std::move(out), needs(a) || needs(b), nullptr);
    node(o).back = [a, b, o, m, k, n](Tape& t) {
        const Tensor& g = t.node(o).grad;
        if (t.needs(a)) { // dA = G * B^T
            const Tensor& bv2 = t.value(b);
            Tensor& ga = t.grad_buf(a);
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = g.data() + i * n;
                double* garow = ga.data() + i * k;
                for (std::size_t p = 0; p < k; ++p) {
                    const double* brow = bv2.data() + p * n;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                    garow[p] += acc;
                }
            }
        }
        if (t.needs(b)) { // dB = A^T * G
            const Tensor& av2 = t.value(a);
            Tensor& gb = t.grad_buf(b);
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = av2.data() + i * k;
                const double* grow = g.data() + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double x = arow[p];
                    if (x == 0.0) continue;
                    double* gbrow = gb.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) gbrow[j] += x * grow[j];
                }
            }
        }
    };
    return o;
}

Var Tape::transpose(Var a) {
    const Tensor& av = value(a);
    if (av.rank() != 2) throw ShapeMismatch("transpose: " + shape_str(av.shape()));
    const std::size_t r = av.shape()[0], c = av.shape()[1];
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(j, i) = av.at(i, j);
    Var o = push(std::move(out), needs(a), nullptr);
    node(o).back = [a, o, r, c](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& g = t.node(o).grad;
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) ga.data()[i * c + j] += g.data()[j * r + i];
    };
    return o;
}

Var Tape::add_rowvec(Var m, Var row) {
    const Tensor& mv = value(m);
    const Tensor& rv = value(row);
    if (mv.rank() != 2 || rv.rank() != 1 || rv.shape()[0] != mv.shape()[1])
        throw ShapeMismatch("add_rowvec: " + shape_str(mv.shape()) + " vs " + shape_str(rv.shape()));
    const std::size_t r = mv.shape()[0], c = mv.shape()[1];
    Tensor out(mv.shape());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) = mv.at(i, j) + rv[j];
    Var o = push(std::move(out), needs(m) || needs(row), nullptr);
    node(o).back = [m, row, o, r, c](Tape& t) {
        const Tensor& g = t.node(o).grad;
        if (t.needs(m)) {
            Tensor& gm = t.grad_buf(m);
            for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
        }
        if (t.needs(row)) {
            Tensor& gr = t.grad_buf(row);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gr[j] += g.data()[i * c + j];
        }
    };
    return o;
}

Var Tape::outer_sum(Var u, Var w) {
    const Tensor& uv = value(u);
    const Tensor& wv = value(w);
    if (uv.rank() != 1 || wv.rank() != 1)
        throw ShapeMismatch("outer_sum: " + shape_str(uv.shape()) + " vs " + shape_str(wv.shape()));
    const std::size_t n = uv.shape()[0], m = wv.shape()[0];
    Tensor out({n, m});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out.at(i, j) = uv[i] + wv[j];
    Var o = push(std::move(out), needs(u) || needs(w), nullptr);
    node(o).back = [u, w, o, n, m](Tape& t) {
        const Tensor& g = t.node(o).grad;
        if (t.needs(u)) {
            Tensor& gu = t.grad_buf(u);
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < m; ++j) acc += g.data()[i * m + j];
                gu[i] += acc;
            }
        }
        if (t.needs(w)) {
            Tensor& gw = t.grad_buf(w);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) gw[j] += g.data()[i * m + j];
        }
    };
    return o;
}

Var Tape::normalize_rows(Var a) {
    const Tensor& av = value(a);
    if (av.rank() != 2) throw ShapeMismatch("normalize_rows: " + shape_str(av.shape()));
    const std::size_t r = av.shape()[0], c = av.shape()[1];
    Tensor out(av.shape());
    std::vector<double> norms(r, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += av.at(i, j) * av.at(i, j);
        const double nrm = std::sqrt(s);
        norms[i] = nrm;
        if (nrm > 0.0)
            for (std::size_t j = 0; j < c; ++j) out.at(i, j) = av.at(i, j) / nrm;
        // zero rows stay zero
    }
    Var o = push(std::move(out), needs(a), nullptr);
    node(o).back = [a, o, r, c, norms](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& g = t.node(o).grad;
        const Tensor& y = t.value(o);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < r; ++i) {
            if (norms[i] == 0.0) continue;
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += g.data()[i * c + j] * y.data()[i * c + j];
            for (std::size_t j = 0; j < c; ++j)
                ga.data()[i * c + j] += (g.data()[i * c + j] - dot * y.data()[i * c + j]) / norms[i];
        }
    };
    return o;
}

Var Tape::scale_by(Var tvar, Var scalar) {
    const Tensor& tv = value(tvar);
    const Tensor& sv = value(scalar);
    if (sv.size() != 1)
        throw ShapeMismatch("scale_by: scalar operand has shape " + shape_str(sv.shape()));
    Tensor out(tv.shape());
    const double s = sv[0];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * tv[i];
    Var o = push(std::move(out), needs(tvar) || needs(scalar), nullptr);
    node(o).back = [tvar, scalar, o](Tape& t) {
        const Tensor& g = t.node(o).grad;
        if (t.needs(tvar)) {
            const double s2 = t.value(scalar)[0];
            Tensor& gt = t.grad_buf(tvar);
            for (std::size_t i = 0; i < g.size(); ++i) gt[i] += s2 * g[i];
        }
        if (t.needs(scalar)) {
            const Tensor& x = t.value(tvar);
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * x[i];
            t.grad_buf(scalar)[0] += acc;
        }
    };
    return o;
}

// --- shape ------------------------------------------------------------------

Var Tape::concat(const std::vector<Var>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeMismatch("concat: no operands");
    const Shape& s0 = value(parts[0]).shape();
    if (axis >= s0.size()) throw ShapeMismatch("concat: axis out of range for " + shape_str(s0));
    Shape out_shape = s0;
    std::size_t total = s0[axis];
    for (std::size_t p = 1; p < parts.size(); ++p) {
        const Shape& sp = value(parts[p]).shape();
        if (sp.size() != s0.size()) throw ShapeMismatch("concat: rank mismatch");
        for (std::size_t i = 0; i < sp.size(); ++i)
            if (i != axis && sp[i] != s0[i])
                throw ShapeMismatch("concat: " + shape_str(s0) + " vs " + shape_str(sp));
        total += sp[axis];
    }
    out_shape[axis] = total;
    Tensor out(out_shape);
    const AxisGeom g = axis_geom(out_shape, axis);
    std::size_t offset = 0;
    bool rg = false;
    for (Var p : parts) {
        const Tensor& pv = value(p);
        rg = rg || needs(p);
        const std::size_t pd = pv.shape()[axis];
        for (std::size_t o = 0; o < g.outer; ++o)
            for (std::size_t d = 0; d < pd; ++d)
                for (std::size_t in = 0; in < g.inner; ++in)
                    out[(o * total + offset + d) * g.inner + in] = pv[(o * pd + d) * g.inner + in];
        offset += pd;
    }
    std::vector<Var> parts_copy = parts;
    Var o = push(std::move(out), rg, nullptr);
    node(o).back = [parts_copy, o, axis, g, total](Tape& t) {
        const Tensor& gr = t.node(o).grad;
        std::size_t offset = 0;
        for (Var p : parts_copy) {
            const std::size_t pd = t.value(p).shape()[axis];
            if (t.needs(p)) {
                Tensor& gp = t.grad_buf(p);
                for (std::size_t ou = 0; ou < g.outer; ++ou)
                    for (std::size_t d = 0; d < pd; ++d)
                        for (std::size_t in = 0; in < g.inner; ++in)
                            gp[(ou * pd + d) * g.inner + in] +=
                                gr[(ou * total + offset + d) * g.inner + in];
            }
            offset += pd;
        }
    };
    return o;
}

Var Tape::slice(Var a, std::size_t axis, std::size_t start, std::size_t len) {
    const Tensor& av = value(a);
    const Shape& s = av.shape();
    if (axis >= s.size() || start + len > s[axis])
        throw ShapeMismatch("slice: window [" + std::to_string(start) + "," +
                            std::to_string(start + len) + ") on axis " + std::to_string(axis) +
                            " of " + shape_str(s));
    Shape out_shape = s;
    out_shape[axis] = len;
    const AxisGeom g = axis_geom(s, axis);
    Tensor out(out_shape);
    for (std::size_t o = 0; o < g.outer; ++o)
        for (std::size_t d = 0; d < len; ++d)
            for (std::size_t in = 0; in < g.inner; ++in)
                out[(o * len + d) * g.inner + in] = av[(o * g.dim + start + d) * g.inner + in];
    Var o = push(std::move(out), needs(a), nullptr);
    node(o).back = [a, o, g, start, len](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gr = t.node(o).grad;
        Tensor& ga = t.grad_buf(a);
        for (std::size_t ou = 0; ou < g.outer; ++ou)
            for (std::size_t d = 0; d < len; ++d)
                for (std::size_t in = 0; in < g.inner; ++in)
                    ga[(ou * g.dim + start + d) * g.inner + in] += gr[(ou * len + d) * g.inner + in];
    };
    return o;
}

Var Tape::reshape(Var a, Shape s) {
    const Tensor& av = value(a);
    if (shape_size(s) != av.size())
        throw ShapeMismatch("reshape: " + shape_str(av.shape()) + " to " + shape_str(s));
    Tensor out(std::move(s), std::vector<double>(av.data(), av.data() + av.size()));
    Var o = push(std::move(out), needs(a), nullptr);
    node(o).back = [a, o](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& g = t.node(o).grad;
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    };
    return o;
}

// --- reductions -------------------------------------------------------------

Var Tape::sum_all(Var a) {
    const Tensor& av = value(a);
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += av[i];
    Var o = push(Tensor::scalar(acc), needs(a), nullptr);
    node(o).back = [a, o](Tape& t) {
        if (!t.needs(a)) return;
        const double g = t.node(o).grad[0];
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    };
    return o;
}

Var Tape::mean_all(Var a) {
    const Tensor& av = value(a);
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += av[i];
    const double inv = 1.0 / static_cast<double>(av.size());
    Var o = push(Tensor::scalar(acc * inv), needs(a), nullptr);
    node(o).back = [a, o, inv](Tape& t) {
        if (!t.needs(a)) return;
        const double g = t.node(o).grad[0] * inv;
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    };
    return o;
}

Var Tape::sum_axis(Var a, std::size_t axis) {
    const Tensor& av = value(a);
    const Shape& s = av.shape();
    if (axis >= s.size()) throw ShapeMismatch("sum_axis: axis out of range for " + shape_str(s));
    Shape out_shape;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (i != axis) out_shape.push_back(s[i]);
    if (out_shape.empty()) out_shape = {1};
    const AxisGeom g = axis_geom(s, axis);
    Tensor out(out_shape);
    for (std::size_t o = 0; o < g.outer; ++o)
        for (std::size_t d = 0; d < g.dim; ++d)
            for (std::size_t in = 0; in < g.inner; ++in)
                out[o * g.inner + in] += av[(o * g.dim + d) * g.inner + in];
    Var o = push(std::move(out), needs(a), nullptr);
    node(o).back = [a, o, g](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gr = t.node(o).grad;
        Tensor& ga = t.grad_buf(a);
        for (std::size_t ou = 0; ou < g.outer; ++ou)
            for (std::size_t d = 0; d < g.dim; ++d)
                for (std::size_t in = 0; in < g.inner; ++in)
                    ga[(ou * g.dim + d) * g.inner + in] += gr[ou * g.inner + in];
    };
    return o;
}

Var Tape::softmax(Var a, std::size_t axis) {
    const Tensor& av = value(a);
    const Shape& s = av.shape();
    if (axis >= s.size()) throw ShapeMismatch("softmax: axis out of range for " + shape_str(s));
    const AxisGeom g = axis_geom(s, axis);
    Tensor out(s);
    for (std::size_t o = 0; o < g.outer; ++o) {
        for (std::size_t in = 0; in < g.inner; ++in) {
            double mx = -1e308;
            for (std::size_t d = 0; d < g.dim; ++d)
                mx = std::max(mx, av[(o * g.dim + d) * g.inner + in]);
            double denom = 0.0;
            for (std::size_t d = 0; d < g.dim; ++d)
                denom += std::exp(av[(o * g.dim + d) * g.inner + in] - mx);
            for (std::size_t d = 0; d < g.dim; ++d)
                out[(o * g.dim + d) * g.inner + in] =
                    std::exp(av[(o * g.dim + d) * g.inner + in] - mx) / denom;
        }
    }
    Var o = push(std::move(out), needs(a), nullptr);
    node(o).back = [a, o, g](Tape& t) {
        if (!t.needs(a)) return;
        const Tensor& gr = t.node(o).grad;
        const Tensor& y = t.value(o);
        Tensor& ga = t.grad_buf(a);
        for (std::size_t ou = 0; ou < g.outer; ++ou)
            for (std::size_t in = 0; in < g.inner; ++in) {
                double dot = 0.0;
                for (std::size_t d = 0; d < g.dim; ++d) {
                    const std::size_t idx = (ou * g.dim + d) * g.inner + in;
                    dot += gr[idx] * y[idx];
                }
                for (std::size_t d = 0; d < g.dim; ++d) {
                    const std::size_t idx = (ou * g.dim + d) * g.inner + in;
                    ga[idx] += y[idx] * (gr[idx] - dot);
                }
            }
    };
    return o;
}

Var Tape::masked_row_softmax(Var logits, const Tensor& mask) {
    const Tensor& lv = value(logits);
    if (lv.rank() != 2 || mask.shape() != lv.shape())
        throw ShapeMismatch("masked_row_softmax: " + shape_str(lv.shape()) + " vs mask " +
                            shape_str(mask.shape()));
    const std::size_t r = lv.shape()[0], c = lv.shape()[1];
    Tensor out(lv.shape());
    for (std::size_t i = 0; i < r; ++i) {
        double mx = -1e308;
        bool any = false;
        for (std::size_t j = 0; j < c; ++j)
            if (mask.at(i, j) != 0.0) {
                mx = std::max(mx, lv.at(i, j));
                any = true;
            }
        if (!any) continue; // fully masked row stays zero
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j)
            if (mask.at(i, j) != 0.0) denom += std::exp(lv.at(i, j) - mx);
        for (std::size_t j = 0; j < c; ++j)
            if (mask.at(i, j) != 0.0) out.at(i, j) = std::exp(lv.at(i, j) - mx) / denom;
    }
    Tensor mask_copy = mask;
    Var o = push(std::move(out), needs(logits), nullptr);
    node(o).back = [logits, o, r, c, mask_copy](Tape& t) {
        if (!t.needs(logits)) return;
        const Tensor& gr = t.node(o).grad;
        const Tensor& y = t.value(o);
        Tensor& gl = t.grad_buf(logits);
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j)
                if (mask_copy.at(i, j) != 0.0) dot += gr.at(i, j) * y.at(i, j);
            for (std::size_t j = 0; j < c; ++j)
                if (mask_copy.at(i, j) != 0.0)
                    gl.at(i, j) += y.at(i, j) * (gr.at(i, j) - dot);
        }
    };
    return o;
}

// --- convolution ------------------------------------------------------------

Var Tape::conv2d(Var input, Var kernels) {
    const Tensor& hv = value(input);
    const Tensor& wv = value(kernels);
    if (hv.rank() != 3 || wv.rank() != 4 || wv.shape()[3] != hv.shape()[2] ||
        wv.shape()[1] > hv.shape()[0] || wv.shape()[2] > hv.shape()[1])
        throw ShapeMismatch("conv2d: input " + shape_str(hv.shape()) + " vs kernels " +
                            shape_str(wv.shape()));
    const std::size_t n = hv.shape()[0], tt = hv.shape()[1], ci = hv.shape()[2];
    const std::size_t co = wv.shape()[0], ks = wv.shape()[1], kt = wv.shape()[2];
    const std::size_t no = n - ks + 1, to = tt - kt + 1;
    Tensor out({no, to, co});
    for (std::size_t on = 0; on < no; ++on)
        for (std::size_t ot = 0; ot < to; ++ot)
            for (std::size_t c = 0; c < co; ++c) {
                double acc = 0.0;
                for (std::size_t i = 0; i < ks; ++i)
                    for (std::size_t j = 0; j < kt; ++j)
                        for (std::size_t k = 0; k < ci; ++k)
                            acc += wv[((c * ks + i) * kt + j) * ci + k] *
                                   hv[((on + i) * tt + ot + j) * ci + k];
                out[(on * to + ot) * co + c] = acc;
            }
    Var o = push(std::move(out), needs(input) || needs(kernels), nullptr);
    node(o).back = [input, kernels, o, n, tt, ci, co, ks, kt, no, to](Tape& t) {
        const Tensor& g = t.node(o).grad;
        const bool ni = t.needs(input);
        const bool nk = t.needs(kernels);
        if (!ni && !nk) return;
        const Tensor& hv2 = t.value(input);
        const Tensor& wv2 = t.value(kernels);
        Tensor* gh = ni ? &t.grad_buf(input) : nullptr;
        Tensor* gw = nk ? &t.grad_buf(kernels) : nullptr;
        for (std::size_t on = 0; on < no; ++on)
            for (std::size_t ot = 0; ot < to; ++ot)
                for (std::size_t c = 0; c < co; ++c) {
                    const double gv = g[(on * to + ot) * co + c];
                    if (gv == 0.0) continue;
                    for (std::size_t i = 0; i < ks; ++i)
                        for (std::size_t j = 0; j < kt; ++j)
                            for (std::size_t k = 0; k < ci; ++k) {
                                const std::size_t widx = ((c * ks + i) * kt + j) * ci + k;
                                const std::size_t hidx = ((on + i) * tt + ot + j) * ci + k;
                                if (gh) (*gh)[hidx] += gv * wv2[widx];
                                if (gw) (*gw)[widx] += gv * hv2[hidx];
                            }
                }
    };
    return o;
}

// --- gradient checking ------------------------------------------------------

double grad_check(const BuildFn& build, const std::vector<Tensor>& point, double eps) {
    std::vector<Tensor> analytic;
    {
        Tape t;
        std::vector<Var> vars;
        vars.reserve(point.size());
        for (const auto& p : point) vars.push_back(t.param(p));
        Var loss = build(t, vars);
        t.backward(loss);
        for (Var v : vars) analytic.push_back(t.grad(v));
    }
    auto eval = [&](const std::vector<Tensor>& at) {
        Tape t;
        std::vector<Var> vars;
        vars.reserve(at.size());
        for (const auto& p : at) vars.push_back(t.param(p));
        return t.value(build(t, vars))[0];
    };
    double max_err = 0.0;
    std::vector<Tensor> work = point;
    for (std::size_t pi = 0; pi < point.size(); ++pi) {
        for (std::size_t i = 0; i < point[pi].size(); ++i) {
            const double orig = work[pi][i];
            work[pi][i] = orig + eps;
            const double fp = eval(work);
            work[pi][i] = orig - eps;
            const double fm = eval(work);
            work[pi][i] = orig;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double a = analytic[pi][i];
            const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

} // namespace wdkg::ad
