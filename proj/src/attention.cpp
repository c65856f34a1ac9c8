#include "hv/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hv::attn {

namespace {
void require(bool ok, const char* what) {
    if (!ok) throw ModelError(std::string("attention: ") + what);
}
} // namespace

int AttentionSpec::selected_count() const {
    if (exact_fallback) return seq_len;
    const int u = static_cast<int>(std::ceil(sampling_factor * std::log(seq_len)));
    return std::min(seq_len, std::max(0, u));
}

int AttentionSpec::head_dim(int dim) const {
    require(heads >= 1 && dim % heads == 0, "dim not divisible by heads");
    return dim / heads;
}

AttnPlan make_plan(const Matrix& q, const Matrix& k, const AttentionSpec& spec) {
    require(spec.seq_len >= 1 && spec.groups >= 1, "bad spec");
    require(q.rows == spec.seq_len * spec.groups, "Q rows != seq_len*groups");
    require(k.rows == q.rows && k.cols == q.cols, "K shape mismatch");
    const int dh = spec.head_dim(q.cols);
    const int T = spec.seq_len, G = spec.groups, H = spec.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    AttnPlan plan;
    plan.u = spec.selected_count();
    plan.groups = G;
    plan.heads = H;
    plan.seq_len = T;
    plan.m_scores.resize(static_cast<size_t>(G) * H * T);
    plan.selected.resize(static_cast<size_t>(G) * H * plan.u);
    plan.weights.resize(static_cast<size_t>(G) * H * plan.u * T);

#pragma omp parallel for schedule(static) if (G > 4)
    for (int g = 0; g < G; ++g) {
        std::vector<double> scores(static_cast<size_t>(T) * T);
        std::vector<int> order(T);
        for (int h = 0; h < H; ++h) {
            const int c0 = h * dh;
            for (int t1 = 0; t1 < T; ++t1) {
                const double* qr = q.row(t1 * G + g) + c0;
                double mx = -std::numeric_limits<double>::infinity();
                double sum = 0.0;
                for (int t2 = 0; t2 < T; ++t2) {
                    const double* kr = k.row(t2 * G + g) + c0;
                    double s = 0.0;
                    for (int j = 0; j < dh; ++j) s += qr[j] * kr[j];
                    s *= scale;
                    scores[static_cast<size_t>(t1) * T + t2] = s;
                    mx = std::max(mx, s);
                    sum += s;
                }
                plan.m_scores[(static_cast<size_t>(g) * H + h) * T + t1] = mx - sum / T;
            }
            // Top-u by M, ties to the smaller index; stored ascending.
            std::iota(order.begin(), order.end(), 0);
            const double* m = &plan.m_scores[(static_cast<size_t>(g) * H + h) * T];
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return m[a] > m[b]; });
            std::vector<int> sel(order.begin(), order.begin() + plan.u);
            std::sort(sel.begin(), sel.end());
            int* dst = &plan.selected[(static_cast<size_t>(g) * H + h) * plan.u];
            std::copy(sel.begin(), sel.end(), dst);
            for (int kk = 0; kk < plan.u; ++kk) {
                const int t1 = dst[kk];
                const double* srow = &scores[static_cast<size_t>(t1) * T];
                double* w = &plan.weights[((static_cast<size_t>(g) * H + h) * plan.u + kk) * T];
                double mx = srow[0];
                for (int t2 = 1; t2 < T; ++t2) mx = std::max(mx, srow[t2]);
                double z = 0.0;
                for (int t2 = 0; t2 < T; ++t2) {
                    w[t2] = std::exp(srow[t2] - mx);
                    z += w[t2];
                }
                for (int t2 = 0; t2 < T; ++t2) w[t2] /= z;
            }
        }
    }
    return plan;
}

ad::Var attention(ad::Var q, ad::Var k, ad::Var v, const AttentionSpec& spec) {
    require(q.tape == k.tape && q.tape == v.tape, "operands from different tapes");
    ad::Tape& t = *q.tape;
    require(v.value().same_shape(q.value()), "V shape mismatch");
    auto plan = std::make_shared<AttnPlan>(make_plan(q.value(), k.value(), spec));
    const int T = spec.seq_len, G = spec.groups, H = spec.heads;
    const int dh = spec.head_dim(q.value().cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    const Matrix& V = v.value();
    Matrix out(V.rows, V.cols);
#pragma omp parallel for schedule(static) if (G > 4)
    for (int g = 0; g < G; ++g) {
        std::vector<double> meanv(dh);
        std::vector<char> is_sel(T);
        for (int h = 0; h < H; ++h) {
            const int c0 = h * dh;
            std::fill(meanv.begin(), meanv.end(), 0.0);
            for (int t2 = 0; t2 < T; ++t2) {
                const double* vr = V.row(t2 * G + g) + c0;
                for (int j = 0; j < dh; ++j) meanv[j] += vr[j];
            }
            for (int j = 0; j < dh; ++j) meanv[j] /= T;
            std::fill(is_sel.begin(), is_sel.end(), 0);
            const int* sel = plan->selected_of(g, h);
            for (int kk = 0; kk < plan->u; ++kk) is_sel[sel[kk]] = 1;
            for (int t1 = 0; t1 < T; ++t1) {
                if (!is_sel[t1]) {
                    double* o = out.row(t1 * G + g) + c0;
                    for (int j = 0; j < dh; ++j) o[j] = meanv[j];
                }
            }
            for (int kk = 0; kk < plan->u; ++kk) {
                const int t1 = sel[kk];
                const double* w = plan->weights_of(g, h, kk);
                double* o = out.row(t1 * G + g) + c0;
                for (int j = 0; j < dh; ++j) o[j] = 0.0;
                for (int t2 = 0; t2 < T; ++t2) {
                    const double* vr = V.row(t2 * G + g) + c0;
                    for (int j = 0; j < dh; ++j) o[j] += w[t2] * vr[j];
                }
            }
        }
    }

    const bool rg = t.wants_grad(q.id) || t.wants_grad(k.id) || t.wants_grad(v.id);
    const int qid = q.id, kid = k.id, vid = v.id;
    const int oid = static_cast<int>(t.num_nodes());
    return t.emplace(std::move(out), rg, !rg ? ad::Tape::BackFn{} : [=](ad::Tape& tp) {
        const Matrix& g_out = tp.grad_buf(oid);
        const Matrix& Qv = tp.value(qid);
        const Matrix& Kv = tp.value(kid);
        const Matrix& Vv = tp.value(vid);
        const bool wq = tp.wants_grad(qid), wk = tp.wants_grad(kid), wv = tp.wants_grad(vid);
        Matrix* gq = wq ? &tp.grad_buf(qid) : nullptr;
        Matrix* gk = wk ? &tp.grad_buf(kid) : nullptr;
        Matrix* gv = wv ? &tp.grad_buf(vid) : nullptr;
#pragma omp parallel for schedule(static) if (G > 4)
        for (int g = 0; g < G; ++g) {
            std::vector<char> is_sel(T);
            std::vector<double> gmean(dh), dw(T), ds(T);
            for (int h = 0; h < H; ++h) {
                const int c0 = h * dh;
                const int* sel = plan->selected_of(g, h);
                std::fill(is_sel.begin(), is_sel.end(), 0);
                for (int kk = 0; kk < plan->u; ++kk) is_sel[sel[kk]] = 1;
                if (wv) {
                    // Non-selected queries emitted mean(V): spread their
                    // gradient uniformly over time.
                    std::fill(gmean.begin(), gmean.end(), 0.0);
                    for (int t1 = 0; t1 < T; ++t1) {
                        if (is_sel[t1]) continue;
                        const double* go = g_out.row(t1 * G + g) + c0;
                        for (int j = 0; j < dh; ++j) gmean[j] += go[j];
                    }
                    for (int t2 = 0; t2 < T; ++t2) {
                        double* gvr = gv->row(t2 * G + g) + c0;
                        for (int j = 0; j < dh; ++j) gvr[j] += gmean[j] / T;
                    }
                }
                for (int kk = 0; kk < plan->u; ++kk) {
                    const int t1 = sel[kk];
                    const double* w = plan->weights_of(g, h, kk);
                    const double* go = g_out.row(t1 * G + g) + c0;
                    double dd = 0.0;
                    for (int t2 = 0; t2 < T; ++t2) {
                        const double* vr = Vv.row(t2 * G + g) + c0;
                        double d = 0.0;
                        for (int j = 0; j < dh; ++j) d += go[j] * vr[j];
                        dw[t2] = d;
                        dd += d * w[t2];
                        if (wv) {
                            double* gvr = gv->row(t2 * G + g) + c0;
                            for (int j = 0; j < dh; ++j) gvr[j] += w[t2] * go[j];
                        }
                    }
                    if (!wq && !wk) continue;
                    for (int t2 = 0; t2 < T; ++t2) ds[t2] = w[t2] * (dw[t2] - dd);
                    if (wq) {
                        double* gqr = gq->row(t1 * G + g) + c0;
                        for (int t2 = 0; t2 < T; ++t2) {
                            const double* kr = Kv.row(t2 * G + g) + c0;
                            for (int j = 0; j < dh; ++j) gqr[j] += scale * ds[t2] * kr[j];
                        }
                    }
                    if (wk) {
                        const double* qr = Qv.row(t1 * G + g) + c0;
                        for (int t2 = 0; t2 < T; ++t2) {
                            double* gkr = gk->row(t2 * G + g) + c0;
                            for (int j = 0; j < dh; ++j) gkr[j] += scale * ds[t2] * qr[j];
                        }
                    }
                }
            }
        }
    });
}

} // namespace hv::attn
