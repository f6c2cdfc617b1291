#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "gdk/common.hpp"

namespace gdk {

// Reverse-mode tape over dense 2D tensors. Nodes are created in topological
// order by construction; backward() walks them once in reverse. Vectors and
// scalars are (1, n) and (1, 1) tensors.
template <class Real>
class Tape {
public:
    struct Node {
        int rows = 0, cols = 0;
        std::vector<Real> val;
        std::vector<Real> grad;  // allocated only when requires_grad
        bool requires_grad = false;
        std::function<void(Tape&)> back;  // empty for leaves/constants

        std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
    };

    bool checked = false;  // when set, every op verifies finite outputs

    int new_node(int rows, int cols, bool requires_grad) {
        Node n;
        n.rows = rows;
        n.cols = cols;
        n.val.assign(static_cast<std::size_t>(rows) * cols, Real(0));
        n.requires_grad = requires_grad;
        if (requires_grad) n.grad.assign(n.val.size(), Real(0));
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    std::size_t node_count() const { return nodes_.size(); }

    void check_finite(int id, const char* op) {
        if (!checked) return;
        for (Real v : nodes_[static_cast<std::size_t>(id)].val)
            if (!std::isfinite(static_cast<double>(v)))
                throw NumericError(std::string("non-finite value out of ") + op);
    }

    // Accumulates gradients of every requires_grad node reachable from loss.
    void backward(int loss_id) {
        Node& loss = node(loss_id);
        if (loss.rows != 1 || loss.cols != 1) throw ShapeError("backward: loss must be scalar");
        if (!loss.requires_grad)
            throw UsageError("backward: loss does not depend on any trainable input");
        loss.grad[0] = Real(1);
        for (int id = loss_id; id >= 0; --id) {
            Node& n = node(id);
            if (n.requires_grad && n.back) n.back(*this);
        }
    }

private:
    std::deque<Node> nodes_;  // deque: stable references while the tape grows
};

template <class Real>
struct Tensor {
    Tape<Real>* tape = nullptr;
    int id = -1;

    int rows() const { return tape->node(id).rows; }
    int cols() const { return tape->node(id).cols; }
    std::size_t size() const { return tape->node(id).size(); }
    std::vector<Real>& val() const { return tape->node(id).val; }
    std::vector<Real>& grad() const { return tape->node(id).grad; }
    bool requires_grad() const { return tape->node(id).requires_grad; }
};

template <class Real>
Tensor<Real> make_tensor(Tape<Real>& tape, int rows, int cols, const std::vector<Real>& data,
                         bool requires_grad) {
    if (data.size() != static_cast<std::size_t>(rows) * cols)
        throw ShapeError("make_tensor: data does not match shape");
    const int id = tape.new_node(rows, cols, requires_grad);
    tape.node(id).val = data;
    return {&tape, id};
}

template <class Real>
Tensor<Real> make_constant(Tape<Real>& tape, int rows, int cols, const std::vector<Real>& data) {
    return make_tensor(tape, rows, cols, data, false);
}

namespace detail {

// C(m,n) += A(m,k) * B(k,n)
template <class Real>
void gemm_nn(const Real* a, const Real* b, Real* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const Real* arow = a + static_cast<std::size_t>(i) * k;
        Real* crow = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const Real av = arow[p];
            if (av == Real(0)) continue;
            const Real* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C(m,n) += A(m,k) * B(n,k)^T. B is transposed into a scratch buffer so the
// inner loop runs unit-stride; each output element accumulates in a fixed
// (ascending p) order, keeping results deterministic.
template <class Real>
void gemm_nt(const Real* a, const Real* b, Real* c, int m, int k, int n) {
    std::vector<Real> bt(static_cast<std::size_t>(k) * n);
    for (int j = 0; j < n; ++j)
        for (int p = 0; p < k; ++p)
            bt[static_cast<std::size_t>(p) * n + j] = b[static_cast<std::size_t>(j) * k + p];
    for (int i = 0; i < m; ++i) {
        const Real* arow = a + static_cast<std::size_t>(i) * k;
        Real* crow = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const Real av = arow[p];
            if (av == Real(0)) continue;
            const Real* btrow = bt.data() + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * btrow[j];
        }
    }
}

// C(k,n) += A(m,k)^T * B(m,n)
template <class Real>
void gemm_tn(const Real* a, const Real* b, Real* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const Real* arow = a + static_cast<std::size_t>(i) * k;
        const Real* brow = b + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const Real av = arow[p];
            if (av == Real(0)) continue;
            Real* crow = c + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <class Real>
void require_same_tape(Tensor<Real> a, Tensor<Real> b) {
    if (a.tape != b.tape) throw UsageError("tensors belong to different tapes");
}

}  // namespace detail

template <class Real>
Tensor<Real> matmul(Tensor<Real> a, Tensor<Real> b) {
    detail::require_same_tape(a, b);
    Tape<Real>& t = *a.tape;
    if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    const bool rg = a.requires_grad() || b.requires_grad();
    const int out = t.new_node(m, n, rg);
    detail::gemm_nn(t.node(a.id).val.data(), t.node(b.id).val.data(), t.node(out).val.data(), m, k,
                    n);
    t.check_finite(out, "matmul");
    if (rg) {
        const int aid = a.id, bid = b.id;
        t.node(out).back = [aid, bid, out, m, k, n](Tape<Real>& tp) {
            auto& g = tp.node(out).grad;
            auto& na = tp.node(aid);
            auto& nb = tp.node(bid);
            if (na.requires_grad) detail::gemm_nt(g.data(), nb.val.data(), na.grad.data(), m, n, k);
            if (nb.requires_grad) detail::gemm_tn(na.val.data(), g.data(), nb.grad.data(), m, k, n);
        };
    }
    return {&t, out};
}

// A * B^T with B stored (n, k); avoids materializing transposes for attention scores.
template <class Real>
Tensor<Real> matmul_nt(Tensor<Real> a, Tensor<Real> b) {
    detail::require_same_tape(a, b);
    Tape<Real>& t = *a.tape;
    if (a.cols() != b.cols()) throw ShapeError("matmul_nt: inner dimensions differ");
    const int m = a.rows(), k = a.cols(), n = b.rows();
    const bool rg = a.requires_grad() || b.requires_grad();
    const int out = t.new_node(m, n, rg);
    detail::gemm_nt(t.node(a.id).val.data(), t.node(b.id).val.data(), t.node(out).val.data(), m, k,
                    n);
    t.check_finite(out, "matmul_nt");
    if (rg) {
        const int aid = a.id, bid = b.id;
        t.node(out).back = [aid, bid, out, m, k, n](Tape<Real>& tp) {
            auto& g = tp.node(out).grad;
            auto& na = tp.node(aid);
            auto& nb = tp.node(bid);
            if (na.requires_grad) detail::gemm_nn(g.data(), nb.val.data(), na.grad.data(), m, n, k);
            if (nb.requires_grad) detail::gemm_tn(g.data(), na.val.data(), nb.grad.data(), m, n, k);
        };
    }
    return {&t, out};
}

// Elementwise sum; b may also be a (1, c) row broadcast over a's rows.
template <class Real>
Tensor<Real> add(Tensor<Real> a, Tensor<Real> b) {
    detail::require_same_tape(a, b);
    Tape<Real>& t = *a.tape;
    const bool broadcast = b.rows() == 1 && a.rows() != 1;
    if (a.cols() != b.cols() || (!broadcast && a.rows() != b.rows()))
        throw ShapeError("add: shape mismatch");
    const int m = a.rows(), n = a.cols();
    const bool rg = a.requires_grad() || b.requires_grad();
    const int out = t.new_node(m, n, rg);
    {
        auto& ov = t.node(out).val;
        const auto& av = t.node(a.id).val;
        const auto& bv = t.node(b.id).val;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                const std::size_t oi = static_cast<std::size_t>(i) * n + j;
                ov[oi] = av[oi] + bv[broadcast ? static_cast<std::size_t>(j) : oi];
            }
    }
    t.check_finite(out, "add");
    if (rg) {
        const int aid = a.id, bid = b.id;
        t.node(out).back = [aid, bid, out, m, n, broadcast](Tape<Real>& tp) {
            const auto& g = tp.node(out).grad;
            auto& na = tp.node(aid);
            auto& nb = tp.node(bid);
            if (na.requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i) na.grad[i] += g[i];
            if (nb.requires_grad) {
                if (broadcast) {
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < n; ++j)
                            nb.grad[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(i) * n + j];
                } else {
                    for (std::size_t i = 0; i < g.size(); ++i) nb.grad[i] += g[i];
                }
            }
        };
    }
    return {&t, out};
}

template <class Real>
Tensor<Real> scale(Tensor<Real> a, double s) {
    Tape<Real>& t = *a.tape;
    const bool rg = a.requires_grad();
    const int out = t.new_node(a.rows(), a.cols(), rg);
    {
        auto& ov = t.node(out).val;
        const auto& av = t.node(a.id).val;
        for (std::size_t i = 0; i < av.size(); ++i) ov[i] = static_cast<Real>(s) * av[i];
    }
    t.check_finite(out, "scale");
    if (rg) {
        const int aid = a.id;
        t.node(out).back = [aid, out, s](Tape<Real>& tp) {
            const auto& g = tp.node(out).grad;
            auto& na = tp.node(aid);
            for (std::size_t i = 0; i < g.size(); ++i) na.grad[i] += static_cast<Real>(s) * g[i];
        };
    }
    return {&t, out};
}

template <class Real>
Tensor<Real> mul(Tensor<Real> a, Tensor<Real> b) {
    detail::require_same_tape(a, b);
    Tape<Real>& t = *a.tape;
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("mul: shape mismatch");
    const bool rg = a.requires_grad() || b.requires_grad();
    const int out = t.new_node(a.rows(), a.cols(), rg);
    {
        auto& ov = t.node(out).val;
        const auto& av = t.node(a.id).val;
        const auto& bv = t.node(b.id).val;
        for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] * bv[i];
    }
    t.check_finite(out, "mul");
    if (rg) {
        const int aid = a.id, bid = b.id;
        t.node(out).back = [aid, bid, out](Tape<Real>& tp) {
            const auto& g = tp.node(out).grad;
            auto& na = tp.node(aid);
            auto& nb = tp.node(bid);
            if (na.requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i) na.grad[i] += nb.val[i] * g[i];
            if (nb.requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i) nb.grad[i] += na.val[i] * g[i];
        };
    }
    return {&t, out};
}

template <class Real>
Tensor<Real> softmax_rows(Tensor<Real> a) {
    Tape<Real>& t = *a.tape;
    const int m = a.rows(), n = a.cols();
    const bool rg = a.requires_grad();
    const int out = t.new_node(m, n, rg);
    {
        auto& ov = t.node(out).val;
        const auto& av = t.node(a.id).val;
        for (int i = 0; i < m; ++i) {
            const Real* row = av.data() + static_cast<std::size_t>(i) * n;
            Real* orow = ov.data() + static_cast<std::size_t>(i) * n;
            Real mx = row[0];
            for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
            Real sum = Real(0);
            for (int j = 0; j < n; ++j) {
                orow[j] = std::exp(row[j] - mx);
                sum += orow[j];
            }
            for (int j = 0; j < n; ++j) orow[j] /= sum;
        }
    }
    t.check_finite(out, "softmax_rows");
    if (rg) {
        const int aid = a.id;
        t.node(out).back = [aid, out, m, n](Tape<Real>& tp) {
            const auto& g = tp.node(out).grad;
            const auto& y = tp.node(out).val;
            auto& na = tp.node(aid);
            for (int i = 0; i < m; ++i) {
                const std::size_t off = static_cast<std::size_t>(i) * n;
                Real dot = Real(0);
                for (int j = 0; j < n; ++j) dot += g[off + j] * y[off + j];
                for (int j = 0; j < n; ++j) na.grad[off + j] += y[off + j] * (g[off + j] - dot);
            }
        };
    }
    return {&t, out};
}

// Per-row normalization with learned gain/bias rows (1, n).
template <class Real>
Tensor<Real> layer_norm(Tensor<Real> x, Tensor<Real> gain, Tensor<Real> bias,
                        double eps = 1e-5) {
    detail::require_same_tape(x, gain);
    detail::require_same_tape(x, bias);
    Tape<Real>& t = *x.tape;
    const int m = x.rows(), n = x.cols();
    if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n)
        throw ShapeError("layer_norm: gain/bias must be (1, cols)");
    const bool rg = x.requires_grad() || gain.requires_grad() || bias.requires_grad();
    const int out = t.new_node(m, n, rg);
    // xhat is stashed for the backward pass.
    auto xhat = std::make_shared<std::vector<Real>>(static_cast<std::size_t>(m) * n);
    auto inv_std = std::make_shared<std::vector<Real>>(static_cast<std::size_t>(m));
    {
        auto& ov = t.node(out).val;
        const auto& xv = t.node(x.id).val;
        const auto& gv = t.node(gain.id).val;
        const auto& bv = t.node(bias.id).val;
        for (int i = 0; i < m; ++i) {
            const std::size_t off = static_cast<std::size_t>(i) * n;
            Real mean = Real(0);
            for (int j = 0; j < n; ++j) mean += xv[off + j];
            mean /= static_cast<Real>(n);
            Real var = Real(0);
            for (int j = 0; j < n; ++j) {
                const Real d = xv[off + j] - mean;
                var += d * d;
            }
            var /= static_cast<Real>(n);
            const Real is = Real(1) / std::sqrt(var + static_cast<Real>(eps));
            (*inv_std)[static_cast<std::size_t>(i)] = is;
            for (int j = 0; j < n; ++j) {
                const Real xh = (xv[off + j] - mean) * is;
                (*xhat)[off + j] = xh;
                ov[off + j] = gv[static_cast<std::size_t>(j)] * xh + bv[static_cast<std::size_t>(j)];
            }
        }
    }
    t.check_finite(out, "layer_norm");
    if (rg) {
        const int xid = x.id, gid = gain.id, bid = bias.id;
        t.node(out).back = [xid, gid, bid, out, m, n, xhat, inv_std](Tape<Real>& tp) {
            const auto& g = tp.node(out).grad;
            auto& nx = tp.node(xid);
            auto& ng = tp.node(gid);
            auto& nb = tp.node(bid);
            const auto& gv = tp.node(gid).val;
            for (int i = 0; i < m; ++i) {
                const std::size_t off = static_cast<std::size_t>(i) * n;
                if (ng.requires_grad || nb.requires_grad) {
                    for (int j = 0; j < n; ++j) {
                        if (ng.requires_grad) ng.grad[static_cast<std::size_t>(j)] += g[off + j] * (*xhat)[off + j];
                        if (nb.requires_grad) nb.grad[static_cast<std::size_t>(j)] += g[off + j];
                    }
                }
                if (nx.requires_grad) {
                    Real mean_gh = Real(0), mean_ghx = Real(0);
                    for (int j = 0; j < n; ++j) {
                        const Real gh = g[off + j] * gv[static_cast<std::size_t>(j)];
                        mean_gh += gh;
                        mean_ghx += gh * (*xhat)[off + j];
                    }
                    mean_gh /= static_cast<Real>(n);
                    mean_ghx /= static_cast<Real>(n);
                    const Real is = (*inv_std)[static_cast<std::size_t>(i)];
                    for (int j = 0; j < n; ++j) {
                        const Real gh = g[off + j] * gv[static_cast<std::size_t>(j)];
                        nx.grad[off + j] += is * (gh - mean_gh - (*xhat)[off + j] * mean_ghx);
                    }
                }
            }
        };
    }
    return {&t, out};
}

namespace detail {
inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluA = 0.044715;
}  // namespace detail

// tanh-approximation GELU, fixed for reproducibility across builds.
template <class Real>
Tensor<Real> gelu(Tensor<Real> a) {
    using detail::kGeluA;
    using detail::kGeluC;
    Tape<Real>& t = *a.tape;
    const bool rg = a.requires_grad();
    const int out = t.new_node(a.rows(), a.cols(), rg);
    {
        auto& ov = t.node(out).val;
        const auto& av = t.node(a.id).val;
        for (std::size_t i = 0; i < av.size(); ++i) {
            const double x = static_cast<double>(av[i]);
            const double u = kGeluC * (x + kGeluA * x * x * x);
            ov[i] = static_cast<Real>(0.5 * x * (1.0 + std::tanh(u)));
        }
    }
    t.check_finite(out, "gelu");
    if (rg) {
        const int aid = a.id;
        t.node(out).back = [aid, out](Tape<Real>& tp) {
            const auto& g = tp.node(out).grad;
            auto& na = tp.node(aid);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double x = static_cast<double>(na.val[i]);
                const double u = detail::kGeluC * (x + detail::kGeluA * x * x * x);
                const double th = std::tanh(u);
                const double dudx = detail::kGeluC * (1.0 + 3.0 * detail::kGeluA * x * x);
                const double d = 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * dudx;
                na.grad[i] += static_cast<Real>(d) * g[i];
            }
        };
    }
    return {&t, out};
}

template <class Real>
Tensor<Real> embedding_lookup(Tensor<Real> table, const std::vector<int>& indices) {
    Tape<Real>& t = *table.tape;
    const int n = table.cols();
    for (int idx : indices)
        if (idx < 0 || idx >= table.rows()) throw ShapeError("embedding_lookup: index out of range");
    const bool rg = table.requires_grad();
    const int out = t.new_node(static_cast<int>(indices.size()), n, rg);
    {
        auto& ov = t.node(out).val;
        const auto& tv = t.node(table.id).val;
        for (std::size_t i = 0; i < indices.size(); ++i)
            std::copy_n(tv.data() + static_cast<std::size_t>(indices[i]) * n, n,
                        ov.data() + i * static_cast<std::size_t>(n));
    }
    if (rg) {
        const int tid = table.id;
        auto idx = std::make_shared<std::vector<int>>(indices);
        t.node(out).back = [tid, out, n, idx](Tape<Real>& tp) {
            const auto& g = tp.node(out).grad;
            auto& nt = tp.node(tid);
            for (std::size_t i = 0; i < idx->size(); ++i) {
                Real* dst = nt.grad.data() + static_cast<std::size_t>((*idx)[i]) * n;
                const Real* src = g.data() + i * static_cast<std::size_t>(n);
                for (int j = 0; j < n; ++j) dst[j] += src[j];
            }
        };
    }
    return {&t, out};
}

template <class Real>
Tensor<Real> concat_rows(Tensor<Real> a, Tensor<Real> b) {
    detail::require_same_tape(a, b);
    Tape<Real>& t = *a.tape;
    if (a.cols() != b.cols()) throw ShapeError("concat_rows: column mismatch");
    const int n = a.cols(), ma = a.rows(), mb = b.rows();
    const bool rg = a.requires_grad() || b.requires_grad();
    const int out = t.new_node(ma + mb, n, rg);
    {
        auto& ov = t.node(out).val;
        const auto& av = t.node(a.id).val;
        const auto& bv = t.node(b.id).val;
        std::copy(av.begin(), av.end(), ov.begin());
        std::copy(bv.begin(), bv.end(), ov.begin() + static_cast<std::ptrdiff_t>(av.size()));
    }
    if (rg) {
        const int aid = a.id, bid = b.id;
        t.node(out).back = [aid, bid, out](Tape<Real>& tp) {
            const auto& g = tp.node(out).grad;
            auto& na = tp.node(aid);
            auto& nb = tp.node(bid);
            if (na.requires_grad)
                for (std::size_t i = 0; i < na.grad.size(); ++i) na.grad[i] += g[i];
            if (nb.requires_grad) {
                const std::size_t off = na.val.size();
                for (std::size_t i = 0; i < nb.grad.size(); ++i) nb.grad[i] += g[off + i];
            }
        };
    }
    return {&t, out};
}

template <class Real>
Tensor<Real> slice_rows(Tensor<Real> a, int start, int count) {
    Tape<Real>& t = *a.tape;
    if (start < 0 || count < 0 || start + count > a.rows())
        throw ShapeError("slice_rows: range out of bounds");
    const int n = a.cols();
    const bool rg = a.requires_grad();
    const int out = t.new_node(count, n, rg);
    {
        auto& ov = t.node(out).val;
        const auto& av = t.node(a.id).val;
        std::copy_n(av.data() + static_cast<std::size_t>(start) * n,
                    static_cast<std::size_t>(count) * n, ov.data());
    }
    if (rg) {
        const int aid = a.id;
        t.node(out).back = [aid, out, start, count, n](Tape<Real>& tp) {
            const auto& g = tp.node(out).grad;
            auto& na = tp.node(aid);
            Real* dst = na.grad.data() + static_cast<std::size_t>(start) * n;
            for (std::size_t i = 0; i < static_cast<std::size_t>(count) * n; ++i) dst[i] += g[i];
        };
    }
    return {&t, out};
}

template <class Real>
Tensor<Real> slice_cols(Tensor<Real> a, int start, int count) {
    Tape<Real>& t = *a.tape;
    if (start < 0 || count < 0 || start + count > a.cols())
        throw ShapeError("slice_cols: range out of bounds");
    const int m = a.rows(), n = a.cols();
    const bool rg = a.requires_grad();
    const int out = t.new_node(m, count, rg);
    {
        auto& ov = t.node(out).val;
        const auto& av = t.node(a.id).val;
        for (int i = 0; i < m; ++i)
            std::copy_n(av.data() + static_cast<std::size_t>(i) * n + start, count,
                        ov.data() + static_cast<std::size_t>(i) * count);
    }
    if (rg) {
        const int aid = a.id;
        t.node(out).back = [aid, out, start, count, m, n](Tape<Real>& tp) {
            const auto& g = tp.node(out).grad;
            auto& na = tp.node(aid);
            for (int i = 0; i < m; ++i) {
                Real* dst = na.grad.data() + static_cast<std::size_t>(i) * n + start;
                const Real* src = g.data() + static_cast<std::size_t>(i) * count;
                for (int j = 0; j < count; ++j) dst[j] += src[j];
            }
        };
    }
    return {&t, out};
}

template <class Real>
Tensor<Real> concat_cols(const std::vector<Tensor<Real>>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    Tape<Real>& t = *parts[0].tape;
    const int m = parts[0].rows();
    int total = 0;
    bool rg = false;
    for (const auto& p : parts) {
        detail::require_same_tape(parts[0], p);
        if (p.rows() != m) throw ShapeError("concat_cols: row mismatch");
        total += p.cols();
        rg = rg || p.requires_grad();
    }
    const int out = t.new_node(m, total, rg);
    {
        auto& ov = t.node(out).val;
        int off = 0;
        for (const auto& p : parts) {
            const auto& pv = t.node(p.id).val;
            const int n = p.cols();
            for (int i = 0; i < m; ++i)
                std::copy_n(pv.data() + static_cast<std::size_t>(i) * n, n,
                            ov.data() + static_cast<std::size_t>(i) * total + off);
            off += n;
        }
    }
    if (rg) {
        auto ids = std::make_shared<std::vector<std::pair<int, int>>>();  // (id, cols)
        for (const auto& p : parts) ids->push_back({p.id, p.cols()});
        t.node(out).back = [ids, out, m, total](Tape<Real>& tp) {
            const auto& g = tp.node(out).grad;
            int off = 0;
            for (const auto& [pid, n] : *ids) {
                auto& np = tp.node(pid);
                if (np.requires_grad) {
                    for (int i = 0; i < m; ++i) {
                        Real* dst = np.grad.data() + static_cast<std::size_t>(i) * n;
                        const Real* src = g.data() + static_cast<std::size_t>(i) * total + off;
                        for (int j = 0; j < n; ++j) dst[j] += src[j];
                    }
                }
                off += n;
            }
        };
    }
    return {&t, out};
}

template <class Real>
Tensor<Real> sum_all(Tensor<Real> a) {
    Tape<Real>& t = *a.tape;
    const bool rg = a.requires_grad();
    const int out = t.new_node(1, 1, rg);
    {
        Real s = Real(0);
        for (Real v : t.node(a.id).val) s += v;
        t.node(out).val[0] = s;
    }
    t.check_finite(out, "sum_all");
    if (rg) {
        const int aid = a.id;
        t.node(out).back = [aid, out](Tape<Real>& tp) {
            const Real g = tp.node(out).grad[0];
            auto& na = tp.node(aid);
            for (std::size_t i = 0; i < na.grad.size(); ++i) na.grad[i] += g;
        };
    }
    return {&t, out};
}

// Mean squared error over every entry of a and b.
template <class Real>
Tensor<Real> mse(Tensor<Real> a, Tensor<Real> b) {
    Tensor<Real> diff = add(a, scale(b, -1.0));
    return scale(sum_all(mul(diff, diff)), 1.0 / static_cast<double>(a.size()));
}

}  // namespace gdk
