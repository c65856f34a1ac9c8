#include "hv/tape.hpp"

#include <cmath>

#include "hv/kernels.hpp"

namespace hv::ad {

namespace k = hv::kernels;

namespace {
void require(bool ok, const char* what) {
    if (!ok) throw ModelError(std::string("tape: ") + what);
}
} // namespace

const Matrix& Var::value() const { return tape->value(id); }

Matrix Var::grad() const {
    if (tape->grad_allocated(id)) return tape->grad_buf(id);
    const Matrix& v = value();
    return Matrix::zeros(v.rows, v.cols);
}

Var Tape::input(Matrix v) { return emplace(std::move(v), false, nullptr); }

Var Tape::param(Matrix v) { return emplace(std::move(v), true, nullptr); }

Var Tape::emplace(Matrix value, bool requires_grad, BackFn back) {
    nodes_.push_back(Node{std::move(value), Matrix{}, requires_grad, std::move(back)});
    return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Matrix& Tape::grad_buf(int id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Matrix::zeros(n.value.rows, n.value.cols);
    return n.grad;
}

void Tape::backward(Var loss) {
    require(loss.tape == this, "backward: var from another tape");
    require(value(loss.id).rows == 1 && value(loss.id).cols == 1, "backward: loss must be 1x1");
    grad_buf(loss.id).a[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.requires_grad || !n.back || n.grad.empty()) continue;
        n.back(*this);
    }
}

namespace {

bool any_grad(std::initializer_list<Var> vs) {
    for (const Var& v : vs)
        if (v.tape->wants_grad(v.id)) return true;
    return false;
}

Tape& tape_of(Var a, Var b) {
    require(a.tape == b.tape, "operands from different tapes");
    return *a.tape;
}

} // namespace

Var add(Var a, Var b) { return add_scaled(a, 1.0, b, 1.0); }
Var sub(Var a, Var b) { return add_scaled(a, 1.0, b, -1.0); }

Var add_scaled(Var a, double wa, Var b, double wb) {
    Tape& t = tape_of(a, b);
    require(a.value().same_shape(b.value()), "add: shape mismatch");
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    Matrix out(av.rows, av.cols);
    for (size_t i = 0; i < out.size(); ++i) out.a[i] = wa * av.a[i] + wb * bv.a[i];
    bool rg = any_grad({a, b});
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        if (tp.wants_grad(a.id)) k::axpy(wa, g, tp.grad_buf(a.id));
        if (tp.wants_grad(b.id)) k::axpy(wb, g, tp.grad_buf(b.id));
    });
}

Var scale(Var a, double s) {
    Tape& t = *a.tape;
    Matrix out = a.value();
    for (double& v : out.a) v *= s;
    bool rg = t.wants_grad(a.id);
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        k::axpy(s, tp.grad_buf(oid), tp.grad_buf(a.id));
    });
}

Var hadamard(Var a, Var b) {
    Tape& t = tape_of(a, b);
    Matrix out;
    k::hadamard(a.value(), b.value(), out);
    bool rg = any_grad({a, b});
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        Matrix tmp;
        if (tp.wants_grad(a.id)) {
            k::hadamard(g, tp.value(b.id), tmp);
            k::axpy(1.0, tmp, tp.grad_buf(a.id));
        }
        if (tp.wants_grad(b.id)) {
            k::hadamard(g, tp.value(a.id), tmp);
            k::axpy(1.0, tmp, tp.grad_buf(b.id));
        }
    });
}

Var matmul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    Matrix out;
    k::matmul(a.value(), b.value(), out);
    bool rg = any_grad({a, b});
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        Matrix tmp;
        if (tp.wants_grad(a.id)) {
            k::matmul_nt(g, tp.value(b.id), tmp); // dA = G * B^T
            k::axpy(1.0, tmp, tp.grad_buf(a.id));
        }
        if (tp.wants_grad(b.id)) {
            k::matmul_tn(tp.value(a.id), g, tmp); // dB = A^T * G
            k::axpy(1.0, tmp, tp.grad_buf(b.id));
        }
    });
}

Var matmul_nt(Var a, Var b) {
    Tape& t = tape_of(a, b);
    Matrix out;
    k::matmul_nt(a.value(), b.value(), out);
    bool rg = any_grad({a, b});
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        Matrix tmp;
        if (tp.wants_grad(a.id)) {
            k::matmul(g, tp.value(b.id), tmp); // dA = G * B
            k::axpy(1.0, tmp, tp.grad_buf(a.id));
        }
        if (tp.wants_grad(b.id)) {
            k::matmul_tn(g, tp.value(a.id), tmp); // dB = G^T * A
            k::axpy(1.0, tmp, tp.grad_buf(b.id));
        }
    });
}

Var add_row(Var a, Var bias) {
    Tape& t = tape_of(a, bias);
    Matrix out;
    k::add_row_broadcast(a.value(), bias.value(), out);
    bool rg = any_grad({a, bias});
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        if (tp.wants_grad(a.id)) k::axpy(1.0, g, tp.grad_buf(a.id));
        if (tp.wants_grad(bias.id)) {
            Matrix cs;
            k::col_sum(g, cs);
            k::axpy(1.0, cs, tp.grad_buf(bias.id));
        }
    });
}

Var relu(Var a) {
    Tape& t = *a.tape;
    Matrix out;
    k::relu(a.value(), out);
    bool rg = t.wants_grad(a.id);
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        const Matrix& x = tp.value(a.id);
        Matrix& ga = tp.grad_buf(a.id);
        for (size_t i = 0; i < g.size(); ++i)
            if (x.a[i] > 0.0) ga.a[i] += g.a[i];
    });
}

Var tanh_op(Var a) {
    Tape& t = *a.tape;
    Matrix out;
    k::tanh_(a.value(), out);
    bool rg = t.wants_grad(a.id);
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        const Matrix& y = tp.value(oid);
        Matrix& ga = tp.grad_buf(a.id);
        for (size_t i = 0; i < g.size(); ++i) ga.a[i] += g.a[i] * (1.0 - y.a[i] * y.a[i]);
    });
}

Var sigmoid_op(Var a) {
    Tape& t = *a.tape;
    Matrix out;
    k::sigmoid(a.value(), out);
    bool rg = t.wants_grad(a.id);
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        const Matrix& y = tp.value(oid);
        Matrix& ga = tp.grad_buf(a.id);
        for (size_t i = 0; i < g.size(); ++i) ga.a[i] += g.a[i] * y.a[i] * (1.0 - y.a[i]);
    });
}

Var row_softmax_op(Var a) {
    Tape& t = *a.tape;
    Matrix out;
    k::row_softmax(a.value(), out);
    bool rg = t.wants_grad(a.id);
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        const Matrix& y = tp.value(oid);
        Matrix& ga = tp.grad_buf(a.id);
        for (int i = 0; i < y.rows; ++i) {
            const double* yi = y.row(i);
            const double* gi = g.row(i);
            double dot = 0.0;
            for (int j = 0; j < y.cols; ++j) dot += yi[j] * gi[j];
            double* o = ga.row(i);
            for (int j = 0; j < y.cols; ++j) o[j] += yi[j] * (gi[j] - dot);
        }
    });
}

Var layer_norm(Var x, Var gain, Var shift, double eps) {
    Tape& t = *x.tape;
    const Matrix& xv = x.value();
    require(gain.value().rows == 1 && gain.value().cols == xv.cols, "layer_norm: gain shape");
    require(shift.value().rows == 1 && shift.value().cols == xv.cols, "layer_norm: shift shape");
    const int R = xv.rows, C = xv.cols;
    Matrix xhat(R, C);
    std::vector<double> inv_std(R);
    Matrix out(R, C);
    for (int i = 0; i < R; ++i) {
        const double* xi = xv.row(i);
        double mu = 0.0;
        for (int j = 0; j < C; ++j) mu += xi[j];
        mu /= C;
        double var = 0.0;
        for (int j = 0; j < C; ++j) var += (xi[j] - mu) * (xi[j] - mu);
        var /= C;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[i] = is;
        double* xh = xhat.row(i);
        double* o = out.row(i);
        for (int j = 0; j < C; ++j) {
            xh[j] = (xi[j] - mu) * is;
            o[j] = gain.value().a[j] * xh[j] + shift.value().a[j];
        }
    }
    bool rg = any_grad({x, gain, shift});
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg,
                     !rg ? Tape::BackFn{}
                         : [=, xh = std::move(xhat), is = std::move(inv_std)](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        const Matrix& gav = tp.value(gain.id);
        const int rows = g.rows, cols = g.cols;
        if (tp.wants_grad(gain.id)) {
            Matrix& gg = tp.grad_buf(gain.id);
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j) gg.a[j] += g.at(i, j) * xh.at(i, j);
        }
        if (tp.wants_grad(shift.id)) {
            Matrix& gs = tp.grad_buf(shift.id);
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j) gs.a[j] += g.at(i, j);
        }
        if (tp.wants_grad(x.id)) {
            Matrix& gx = tp.grad_buf(x.id);
            for (int i = 0; i < rows; ++i) {
                const double* gi = g.row(i);
                const double* xhi = xh.row(i);
                double m1 = 0.0, m2 = 0.0; // mean(dxhat), mean(dxhat*xhat)
                for (int j = 0; j < cols; ++j) {
                    const double dxh = gi[j] * gav.a[j];
                    m1 += dxh;
                    m2 += dxh * xhi[j];
                }
                m1 /= cols;
                m2 /= cols;
                double* o = gx.row(i);
                for (int j = 0; j < cols; ++j) {
                    const double dxh = gi[j] * gav.a[j];
                    o[j] += is[i] * (dxh - m1 - xhi[j] * m2);
                }
            }
        }
    });
}

Var gather_rows(Var a, std::vector<int> idx) {
    Tape& t = *a.tape;
    const Matrix& av = a.value();
    for (int i : idx) require(i >= 0 && i < av.rows, "gather_rows: index out of range");
    Matrix out(static_cast<int>(idx.size()), av.cols);
    for (size_t r = 0; r < idx.size(); ++r)
        for (int j = 0; j < av.cols; ++j) out.at(static_cast<int>(r), j) = av.at(idx[r], j);
    bool rg = t.wants_grad(a.id);
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=, ix = std::move(idx)](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        Matrix& ga = tp.grad_buf(a.id);
        for (size_t r = 0; r < ix.size(); ++r)
            for (int j = 0; j < g.cols; ++j) ga.at(ix[r], j) += g.at(static_cast<int>(r), j);
    });
}

Var concat_cols(Var a, Var b) {
    Tape& t = tape_of(a, b);
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    require(av.rows == bv.rows, "concat_cols: row mismatch");
    Matrix out(av.rows, av.cols + bv.cols);
    for (int i = 0; i < av.rows; ++i) {
        double* o = out.row(i);
        const double* x = av.row(i);
        const double* y = bv.row(i);
        for (int j = 0; j < av.cols; ++j) o[j] = x[j];
        for (int j = 0; j < bv.cols; ++j) o[av.cols + j] = y[j];
    }
    bool rg = any_grad({a, b});
    int oid = static_cast<int>(t.num_nodes());
    const int ac = av.cols, bc = bv.cols;
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        if (tp.wants_grad(a.id)) {
            Matrix& ga = tp.grad_buf(a.id);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < ac; ++j) ga.at(i, j) += g.at(i, j);
        }
        if (tp.wants_grad(b.id)) {
            Matrix& gb = tp.grad_buf(b.id);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < bc; ++j) gb.at(i, j) += g.at(i, ac + j);
        }
    });
}

Var vconcat(const std::vector<Var>& parts) {
    require(!parts.empty(), "vconcat: empty");
    Tape& t = *parts[0].tape;
    int rows = 0;
    const int cols = parts[0].value().cols;
    for (const Var& p : parts) {
        require(p.tape == &t, "vconcat: mixed tapes");
        require(p.value().cols == cols, "vconcat: column mismatch");
        rows += p.value().rows;
    }
    Matrix out(rows, cols);
    std::vector<int> offsets;
    std::vector<int> ids;
    int off = 0;
    bool rg = false;
    for (const Var& p : parts) {
        const Matrix& pv = p.value();
        for (int i = 0; i < pv.rows; ++i)
            for (int j = 0; j < cols; ++j) out.at(off + i, j) = pv.at(i, j);
        offsets.push_back(off);
        ids.push_back(p.id);
        off += pv.rows;
        rg = rg || t.wants_grad(p.id);
    }
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg,
                     !rg ? Tape::BackFn{}
                         : [oid, offsets = std::move(offsets), ids = std::move(ids)](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        for (size_t p = 0; p < ids.size(); ++p) {
            if (!tp.wants_grad(ids[p])) continue;
            Matrix& gp = tp.grad_buf(ids[p]);
            for (int i = 0; i < gp.rows; ++i)
                for (int j = 0; j < g.cols; ++j) gp.at(i, j) += g.at(offsets[p] + i, j);
        }
    });
}

Var slice_rows(Var a, int r0, int r1) {
    Tape& t = *a.tape;
    const Matrix& av = a.value();
    require(0 <= r0 && r0 < r1 && r1 <= av.rows, "slice_rows: bad range");
    Matrix out(r1 - r0, av.cols);
    for (int i = r0; i < r1; ++i)
        for (int j = 0; j < av.cols; ++j) out.at(i - r0, j) = av.at(i, j);
    bool rg = t.wants_grad(a.id);
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        Matrix& ga = tp.grad_buf(a.id);
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) ga.at(r0 + i, j) += g.at(i, j);
    });
}

Var adj_mix(Var adj, Var z, int n) {
    Tape& t = tape_of(adj, z);
    Matrix out;
    k::adj_mix(adj.value(), z.value(), n, out);
    bool rg = any_grad({adj, z});
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        if (tp.wants_grad(adj.id))
            k::adj_mix_outer_acc(g, tp.value(z.id), n, tp.grad_buf(adj.id));
        if (tp.wants_grad(z.id)) {
            Matrix tmp;
            k::adj_mix_t(tp.value(adj.id), g, n, tmp);
            k::axpy(1.0, tmp, tp.grad_buf(z.id));
        }
    });
}

Var gru_blend(Var u, Var a, Var b) {
    Tape& t = tape_of(u, a);
    require(a.tape == b.tape, "gru_blend: mixed tapes");
    const Matrix& uv = u.value();
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    require(uv.same_shape(av) && uv.same_shape(bv), "gru_blend: shape mismatch");
    Matrix out(uv.rows, uv.cols);
    for (size_t i = 0; i < out.size(); ++i)
        out.a[i] = uv.a[i] * av.a[i] + (1.0 - uv.a[i]) * bv.a[i];
    bool rg = any_grad({u, a, b});
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        const Matrix& U = tp.value(u.id);
        const Matrix& A = tp.value(a.id);
        const Matrix& B = tp.value(b.id);
        if (tp.wants_grad(u.id)) {
            Matrix& gu = tp.grad_buf(u.id);
            for (size_t i = 0; i < g.size(); ++i) gu.a[i] += g.a[i] * (A.a[i] - B.a[i]);
        }
        if (tp.wants_grad(a.id)) {
            Matrix& ga = tp.grad_buf(a.id);
            for (size_t i = 0; i < g.size(); ++i) ga.a[i] += g.a[i] * U.a[i];
        }
        if (tp.wants_grad(b.id)) {
            Matrix& gb = tp.grad_buf(b.id);
            for (size_t i = 0; i < g.size(); ++i) gb.a[i] += g.a[i] * (1.0 - U.a[i]);
        }
    });
}

Var one_minus(Var a) {
    Tape& t = *a.tape;
    Matrix out = a.value();
    for (double& v : out.a) v = 1.0 - v;
    bool rg = t.wants_grad(a.id);
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        k::axpy(-1.0, tp.grad_buf(oid), tp.grad_buf(a.id));
    });
}

Var scale_by(Var m, Var s) {
    Tape& t = tape_of(m, s);
    require(s.value().rows == 1 && s.value().cols == 1, "scale_by: scalar must be 1x1");
    const double sv = s.value().a[0];
    Matrix out = m.value();
    for (double& v : out.a) v *= sv;
    bool rg = any_grad({m, s});
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const Matrix& g = tp.grad_buf(oid);
        if (tp.wants_grad(m.id)) k::axpy(sv, g, tp.grad_buf(m.id));
        if (tp.wants_grad(s.id)) {
            const Matrix& mv = tp.value(m.id);
            double dot = 0.0;
            for (size_t i = 0; i < g.size(); ++i) dot += g.a[i] * mv.a[i];
            tp.grad_buf(s.id).a[0] += dot;
        }
    });
}

Var abs_mean(Var a) {
    Tape& t = *a.tape;
    const Matrix& av = a.value();
    require(!av.empty(), "abs_mean: empty input");
    double s = 0.0;
    for (double v : av.a) s += std::fabs(v);
    Matrix out(1, 1);
    out.a[0] = s / static_cast<double>(av.size());
    bool rg = t.wants_grad(a.id);
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const double g = tp.grad_buf(oid).a[0];
        const Matrix& x = tp.value(a.id);
        Matrix& ga = tp.grad_buf(a.id);
        const double w = g / static_cast<double>(x.size());
        for (size_t i = 0; i < x.size(); ++i)
            ga.a[i] += x.a[i] > 0.0 ? w : (x.a[i] < 0.0 ? -w : 0.0);
    });
}

Var mean_all(Var a) {
    Tape& t = *a.tape;
    const Matrix& av = a.value();
    require(!av.empty(), "mean_all: empty input");
    double s = 0.0;
    for (double v : av.a) s += v;
    Matrix out(1, 1);
    out.a[0] = s / static_cast<double>(av.size());
    bool rg = t.wants_grad(a.id);
    int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? Tape::BackFn{} : [=](Tape& tp) {
        const double g = tp.grad_buf(oid).a[0];
        Matrix& ga = tp.grad_buf(a.id);
        const double w = g / static_cast<double>(ga.size());
        for (double& v : ga.a) v += w;
    });
}

} // namespace hv::ad
