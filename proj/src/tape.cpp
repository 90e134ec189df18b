#include "gsteal/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace gsteal {

const Tensor& Var::value() const { return tape_->value(*this); }
const Tensor& Var::grad() const { return tape_->grad(*this); }

namespace {

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
    throw DimensionError(std::string(op) + ": " + detail);
}

void require_2d(const char* op, const Tensor& t) {
    if (t.shape().size() != 2) shape_error(op, "expected 2-D tensor");
}

std::string shape_str(const Tensor& t) {
    std::string s = "[";
    for (std::size_t i = 0; i < t.shape().size(); ++i) {
        if (i) s += "x";
        s += std::to_string(t.shape()[i]);
    }
    return s + "]";
}

// Dense row-major kernels, accumulate into c.
// c[m x n] += a[m x k] . b[k x n]
void mm_nn(const double* a, const double* b, double* c,
           std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            double aip = ai[p];
            if (aip == 0.0) continue;
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

// c[m x k] += a[m x n] . b[k x n]^T
void mm_nt(const double* a, const double* b, double* c,
           std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * n;
        double* ci = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += ai[j] * bp[j];
            ci[p] += acc;
        }
    }
}

// c[k x n] += a[m x k]^T . b[m x n]
void mm_tn(const double* a, const double* b, double* c,
           std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        const double* bi = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            double aip = ai[p];
            if (aip == 0.0) continue;
            double* cp = c + p * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
        }
    }
}

double row_logsumexp(const double* row, std::size_t n) {
    double m = row[0];
    for (std::size_t j = 1; j < n; ++j) m = std::max(m, row[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(row[j] - m);
    return m + std::log(s);
}

}  // namespace

Var Tape::push(Tensor value, std::function<void(Tape&, std::size_t)> back) {
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back)});
    return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor value, bool /*requires_grad*/) {
    // Gradients are accumulated for every node; the flag documents intent.
    return push(std::move(value), nullptr);
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_2d("matmul", av);
    require_2d("matmul", bv);
    if (av.cols() != bv.rows())
        shape_error("matmul", shape_str(av) + " . " + shape_str(bv));
    std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Tensor out = Tensor::zeros({m, n});
    mm_nn(av.data(), bv.data(), out.data(), m, k, n);
    std::size_t ia = a.id(), ib = b.id();
    return push(std::move(out), [ia, ib, m, k, n](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        mm_nt(g.data(), t.nodes_[ib].value.data(), t.grad_ref(ia).data(), m, n, k);
        mm_tn(t.nodes_[ia].value.data(), g.data(), t.grad_ref(ib).data(), m, k, n);
    });
}

Var Tape::add(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    bool broadcast = false;
    if (!av.same_shape(bv)) {
        if (av.shape().size() == 2 && bv.shape().size() == 2 &&
            bv.rows() == 1 && bv.cols() == av.cols()) {
            broadcast = true;
        } else {
            shape_error("add", shape_str(av) + " + " + shape_str(bv));
        }
    }
    Tensor out = av;
    if (broadcast) {
        std::size_t n = av.cols();
        for (std::size_t i = 0; i < av.rows(); ++i)
            for (std::size_t j = 0; j < n; ++j) out.values()[i * n + j] += bv.data()[j];
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += bv.data()[i];
    }
    std::size_t ia = a.id(), ib = b.id();
    return push(std::move(out), [ia, ib, broadcast](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_ref(ia);
        Tensor& gb = t.grad_ref(ib);
        for (std::size_t i = 0; i < g.size(); ++i) ga.values()[i] += g.data()[i];
        if (broadcast) {
            std::size_t n = gb.size();
            for (std::size_t i = 0; i < g.size(); ++i) gb.values()[i % n] += g.data()[i];
        } else {
            for (std::size_t i = 0; i < g.size(); ++i) gb.values()[i] += g.data()[i];
        }
    });
}

Var Tape::scale(Var a, double s) {
    Tensor out = value(a);
    for (double& v : out.values()) v *= s;
    std::size_t ia = a.id();
    return push(std::move(out), [ia, s](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga.values()[i] += s * g.data()[i];
    });
}

Var Tape::scale_by(Var a, Var s) {
    const Tensor& sv = value(s);
    if (sv.size() != 1) shape_error("scale_by", "scalar operand must have one element");
    double sval = sv.data()[0];
    Tensor out = value(a);
    for (double& v : out.values()) v *= sval;
    std::size_t ia = a.id(), is = s.id();
    return push(std::move(out), [ia, is, sval](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& av = t.nodes_[ia].value;
        Tensor& ga = t.grad_ref(ia);
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.values()[i] += sval * g.data()[i];
            acc += g.data()[i] * av.data()[i];
        }
        t.grad_ref(is).values()[0] += acc;
    });
}

Var Tape::scale_rows(Var a, std::vector<double> coeffs) {
    const Tensor& av = value(a);
    require_2d("scale_rows", av);
    if (coeffs.size() != av.rows())
        shape_error("scale_rows", "coefficient count != row count");
    std::size_t n = av.cols();
    Tensor out = av;
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < n; ++j) out.values()[i * n + j] *= coeffs[i];
    std::size_t ia = a.id();
    return push(std::move(out), [ia, n, coeffs = std::move(coeffs)](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < coeffs.size(); ++i)
            for (std::size_t j = 0; j < n; ++j)
                ga.values()[i * n + j] += coeffs[i] * g.data()[i * n + j];
    });
}

Var Tape::relu(Var a) {
    Tensor out = value(a);
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    std::size_t ia = a.id();
    return push(std::move(out), [ia](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& av = t.nodes_[ia].value;
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (av.data()[i] > 0.0) ga.values()[i] += g.data()[i];
    });
}

Var Tape::sigmoid(Var a) {
    Tensor out = value(a);
    for (double& v : out.values()) {
        if (v >= 0.0) {
            v = 1.0 / (1.0 + std::exp(-v));
        } else {
            double e = std::exp(v);
            v = e / (1.0 + e);
        }
    }
    std::size_t ia = a.id();
    return push(std::move(out), [ia](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& ov = t.nodes_[self].value;
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double s = ov.data()[i];
            ga.values()[i] += g.data()[i] * s * (1.0 - s);
        }
    });
}

Var Tape::log(Var a) {
    Tensor out = value(a);
    for (double& v : out.values()) v = std::log(v);
    std::size_t ia = a.id();
    return push(std::move(out), [ia](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& av = t.nodes_[ia].value;
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
            ga.values()[i] += g.data()[i] / av.data()[i];
    });
}

Var Tape::row_mean(Var a) {
    const Tensor& av = value(a);
    require_2d("row_mean", av);
    if (av.rows() == 0) shape_error("row_mean", "empty input");
    std::size_t m = av.rows(), n = av.cols();
    Tensor out = Tensor::zeros({1, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.values()[j] += av.data()[i * n + j];
    double inv = 1.0 / static_cast<double>(m);
    for (double& v : out.values()) v *= inv;
    std::size_t ia = a.id();
    return push(std::move(out), [ia, m, n, inv](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                ga.values()[i * n + j] += inv * g.data()[j];
    });
}

Var Tape::row_sum(Var a) {
    const Tensor& av = value(a);
    require_2d("row_sum", av);
    std::size_t m = av.rows(), n = av.cols();
    Tensor out = Tensor::zeros({1, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.values()[j] += av.data()[i * n + j];
    std::size_t ia = a.id();
    return push(std::move(out), [ia, m, n](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) ga.values()[i * n + j] += g.data()[j];
    });
}

Var Tape::gather_rows(Var a, std::vector<std::size_t> rows) {
    const Tensor& av = value(a);
    require_2d("gather_rows", av);
    for (std::size_t r : rows)
        if (r >= av.rows()) shape_error("gather_rows", "row index out of range");
    std::size_t n = av.cols();
    Tensor out = Tensor::zeros({rows.size(), n});
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy_n(av.data() + rows[i] * n, n, out.data() + i * n);
    std::size_t ia = a.id();
    return push(std::move(out), [ia, n, rows = std::move(rows)](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < n; ++j)
                ga.values()[rows[i] * n + j] += g.data()[i * n + j];
    });
}

Var Tape::scatter_add_rows(Var a, std::vector<std::size_t> dst, std::size_t out_rows) {
    const Tensor& av = value(a);
    require_2d("scatter_add_rows", av);
    if (dst.size() != av.rows())
        shape_error("scatter_add_rows", "destination count != row count");
    for (std::size_t r : dst)
        if (r >= out_rows) shape_error("scatter_add_rows", "destination out of range");
    std::size_t n = av.cols();
    Tensor out = Tensor::zeros({out_rows, n});
    for (std::size_t i = 0; i < dst.size(); ++i)
        for (std::size_t j = 0; j < n; ++j)
            out.values()[dst[i] * n + j] += av.data()[i * n + j];
    std::size_t ia = a.id();
    return push(std::move(out), [ia, n, dst = std::move(dst)](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < dst.size(); ++i)
            for (std::size_t j = 0; j < n; ++j)
                ga.values()[i * n + j] += g.data()[dst[i] * n + j];
    });
}

Var Tape::gather_cols(Var a, std::vector<std::size_t> cols) {
    const Tensor& av = value(a);
    require_2d("gather_cols", av);
    for (std::size_t c : cols)
        if (c >= av.cols()) shape_error("gather_cols", "column index out of range");
    std::size_t m = av.rows(), n = av.cols();
    Tensor out = Tensor::zeros({m, cols.size()});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out.values()[i * cols.size() + j] = av.data()[i * n + cols[j]];
    std::size_t ia = a.id();
    return push(std::move(out), [ia, m, n, cols = std::move(cols)](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < cols.size(); ++j)
                ga.values()[i * n + cols[j]] += g.data()[i * cols.size() + j];
    });
}

Var Tape::softmax_rows(Var a) {
    const Tensor& av = value(a);
    require_2d("softmax_rows", av);
    std::size_t m = av.rows(), n = av.cols();
    if (n == 0) shape_error("softmax_rows", "empty rows");
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = av.data() + i * n;
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double e = std::exp(row[j] - mx);
            out.values()[i * n + j] = e;
            s += e;
        }
        for (std::size_t j = 0; j < n; ++j) out.values()[i * n + j] /= s;
    }
    std::size_t ia = a.id();
    return push(std::move(out), [ia, m, n](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& p = t.nodes_[self].value;
        Tensor& ga = t.grad_ref(ia);
        for (std::size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                dot += g.data()[i * n + j] * p.data()[i * n + j];
            for (std::size_t j = 0; j < n; ++j)
                ga.values()[i * n + j] +=
                    p.data()[i * n + j] * (g.data()[i * n + j] - dot);
        }
    });
}

Var Tape::concat_rows(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    require_2d("concat_rows", av);
    require_2d("concat_rows", bv);
    if (av.cols() != bv.cols())
        shape_error("concat_rows", shape_str(av) + " | " + shape_str(bv));
    std::size_t n = av.cols();
    Tensor out = Tensor::zeros({av.rows() + bv.rows(), n});
    std::copy_n(av.data(), av.size(), out.data());
    std::copy_n(bv.data(), bv.size(), out.data() + av.size());
    std::size_t ia = a.id(), ib = b.id(), asize = av.size();
    return push(std::move(out), [ia, ib, asize](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor& ga = t.grad_ref(ia);
        Tensor& gb = t.grad_ref(ib);
        for (std::size_t i = 0; i < asize; ++i) ga.values()[i] += g.data()[i];
        for (std::size_t i = asize; i < g.size(); ++i)
            gb.values()[i - asize] += g.data()[i];
    });
}

Var Tape::cross_entropy(Var logits, const std::vector<int>& labels) {
    const Tensor& lv = value(logits);
    require_2d("cross_entropy", lv);
    std::size_t m = lv.rows(), n = lv.cols();
    if (labels.size() != m)
        shape_error("cross_entropy", "label count != batch rows");
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= n)
            throw IndexError("cross_entropy: label out of range");
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = lv.data() + i * n;
        loss += row_logsumexp(row, n) - row[static_cast<std::size_t>(labels[i])];
    }
    loss *= 1.0 / static_cast<double>(m);
    std::size_t il = logits.id();
    return push(Tensor::scalar(loss), [il, m, n, labels](Tape& t, std::size_t self) {
        double g = t.nodes_[self].grad.data()[0] * (1.0 / static_cast<double>(m));
        const Tensor& lv2 = t.nodes_[il].value;
        Tensor& gl = t.grad_ref(il);
        for (std::size_t i = 0; i < m; ++i) {
            const double* row = lv2.data() + i * n;
            double lse = row_logsumexp(row, n);
            for (std::size_t j = 0; j < n; ++j) {
                double p = std::exp(row[j] - lse);
                double y = (static_cast<std::size_t>(labels[i]) == j) ? 1.0 : 0.0;
                gl.values()[i * n + j] += g * (p - y);
            }
        }
    });
}

Var Tape::cross_entropy_soft(Var logits, const Tensor& target_probs) {
    const Tensor& lv = value(logits);
    require_2d("cross_entropy_soft", lv);
    if (!lv.same_shape(target_probs))
        shape_error("cross_entropy_soft", "target shape mismatch");
    std::size_t m = lv.rows(), n = lv.cols();
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = lv.data() + i * n;
        double lse = row_logsumexp(row, n);
        for (std::size_t j = 0; j < n; ++j)
            loss += target_probs.data()[i * n + j] * (lse - row[j]);
    }
    loss *= 1.0 / static_cast<double>(m);
    std::size_t il = logits.id();
    return push(Tensor::scalar(loss),
                [il, m, n, target_probs](Tape& t, std::size_t self) {
        double g = t.nodes_[self].grad.data()[0] * (1.0 / static_cast<double>(m));
        const Tensor& lv2 = t.nodes_[il].value;
        Tensor& gl = t.grad_ref(il);
        for (std::size_t i = 0; i < m; ++i) {
            const double* row = lv2.data() + i * n;
            double lse = row_logsumexp(row, n);
            for (std::size_t j = 0; j < n; ++j) {
                double p = std::exp(row[j] - lse);
                gl.values()[i * n + j] += g * (p - target_probs.data()[i * n + j]);
            }
        }
    });
}

Var Tape::custom_op(Tensor value, std::vector<Var> parents, CustomBackward backward) {
    std::vector<std::size_t> parent_ids;
    parent_ids.reserve(parents.size());
    for (const Var& p : parents) parent_ids.push_back(p.id());
    return push(std::move(value),
                [parents = std::move(parents), parent_ids,
                 backward = std::move(backward)](Tape& t, std::size_t self) {
        std::vector<Tensor*> grads;
        grads.reserve(parent_ids.size());
        for (std::size_t id : parent_ids) grads.push_back(&t.grad_ref(id));
        backward(t.nodes_[self].grad, parents, grads);
    });
}

void Tape::backward(Var root) {
    if (value(root).size() != 1)
        throw DimensionError("backward: root is not a scalar; pass a seed");
    backward(root, Tensor::scalar(1.0));
}

void Tape::backward(Var root, const Tensor& seed) {
    if (!value(root).same_shape(seed))
        throw DimensionError("backward: seed shape != root shape");
    for (Node& node : nodes_) {
        node.grad = Tensor::zeros(node.value.shape());
    }
    nodes_[root.id()].grad = seed;
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back(*this, i);
    }
}

}  // namespace gsteal
