#pragma once

// Central-difference verification of the end-to-end MAE-loss gradient on
// the micro-model, grouped by parameter family.

#include <cmath>
#include <map>
#include <string>

#include "micro.hpp"

namespace hvtest {

struct GroupResult {
    double max_rel_err = 0.0;
    size_t coords = 0;
};

inline std::string param_group(const std::string& name) {
    if (name.rfind("vit.", 0) == 0) return "vit";
    if (name.rfind("graph.", 0) == 0) return "embeddings";
    if (name.rfind("gcrn.", 0) == 0) return "gcrn_gates";
    if (name.rfind("attn.", 0) == 0) return "attention";
    return "head";
}

inline std::map<std::string, GroupResult> run_gradcheck(std::uint64_t fixture_seed,
                                                        double sampling_prob,
                                                        double* min_residual = nullptr,
                                                        double step = 1e-5) {
    auto micro = make_micro(fixture_seed);
    hv::HydroModel model = micro.make_model();
    hv::Batch batch = micro.batch(2);

    // With sampling_prob 0 or 1 the decode path is deterministic, so the
    // rng below never changes the branch taken across evaluations.
    hv::Rng rng(1);
    hv::Rng* rng_ptr = sampling_prob > 0.0 ? &rng : nullptr;

    auto loss_and_grads = [&](std::vector<hv::Matrix>* grads) {
        hv::ad::Tape tape;
        hv::BoundParams p = bind_params(tape, model.params());
        auto g = model.build_graphs(tape, p);
        auto fwd = model.forward(p, g.a_hat, batch, sampling_prob, rng_ptr);
        if (min_residual) {
            // Finite differences are invalid if a residual sits within the
            // step of the |.| kink; record the margin for the caller.
            for (size_t t = 0; t < fwd.preds.size(); ++t) {
                const hv::Matrix& pm = fwd.preds[t].value();
                for (size_t j = 0; j < pm.size(); ++j)
                    *min_residual = std::min(*min_residual,
                                             std::fabs(pm.a[j] - batch.targets[t].a[j]));
            }
        }
        const double loss = fwd.loss.value().a[0];
        if (grads) {
            tape.backward(fwd.loss);
            grads->clear();
            for (const auto& v : p.vars) grads->push_back(v.grad());
        }
        return loss;
    };

    std::vector<hv::Matrix> analytic;
    loss_and_grads(&analytic);

    std::map<std::string, GroupResult> results;
    auto& store = model.params();
    for (size_t e = 0; e < store.entries.size(); ++e) {
        auto& entry = store.entries[e];
        GroupResult& gr = results[param_group(entry.name)];
        for (size_t j = 0; j < entry.value.size(); ++j) {
            const double orig = entry.value.a[j];
            entry.value.a[j] = orig + step;
            const double fp = loss_and_grads(nullptr);
            entry.value.a[j] = orig - step;
            const double fm = loss_and_grads(nullptr);
            entry.value.a[j] = orig;
            const double fd = (fp - fm) / (2.0 * step);
            const double ad_g = analytic[e].a[j];
            const double denom = std::max({std::fabs(fd), std::fabs(ad_g), 1e-6});
            gr.max_rel_err = std::max(gr.max_rel_err, std::fabs(fd - ad_g) / denom);
            ++gr.coords;
        }
    }
    return results;
}

} // namespace hvtest
