#include <doctest.h>

#include <cmath>

#include "../common/gradcheck.hpp"

using namespace hv;
using hvtest::make_micro;
using hvtest::run_gradcheck;

// End-to-end gradient fidelity on the micro-model: d(MAE)/d(theta) from the
// tape must match central finite differences for every parameter group.

TEST_CASE("end-to-end MAE gradients match finite differences per parameter group") {
    double min_residual = 1e300;
    auto results = run_gradcheck(9001, 0.0, &min_residual);
    REQUIRE(min_residual > 1e-3); // safely away from the |.| kink

    REQUIRE(results.count("vit"));
    REQUIRE(results.count("embeddings"));
    REQUIRE(results.count("gcrn_gates"));
    REQUIRE(results.count("attention"));
    REQUIRE(results.count("head"));
    for (const auto& [group, res] : results) {
        INFO(group, ": ", res.coords, " coords, max rel err ", res.max_rel_err);
        CHECK(res.coords > 0);
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("teacher-forced gradients also match finite differences") {
    // sampling_prob = 1 exercises the ground-truth input path.
    auto results = run_gradcheck(9001, 1.0);
    for (const auto& [group, res] : results) {
        INFO(group, ": max rel err ", res.max_rel_err);
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("learnable-alpha gradient matches finite differences") {
    auto micro = make_micro(9002);
    micro.cfg.graph.alpha_learnable = true;
    HydroModel model = micro.make_model();
    Batch batch = micro.batch(2);

    auto loss_of = [&]() { return model.loss_on(batch); };
    ad::Tape tape;
    BoundParams p = bind_params(tape, model.params());
    auto g = model.build_graphs(tape, p);
    auto fwd = model.forward(p, g.a_hat, batch);
    tape.backward(fwd.loss);
    const double analytic = p["graph.alpha_raw"].grad().a[0];

    auto& raw = model.params().value("graph.alpha_raw");
    const double orig = raw.a[0], step = 1e-5;
    raw.a[0] = orig + step;
    const double fp = loss_of();
    raw.a[0] = orig - step;
    const double fm = loss_of();
    raw.a[0] = orig;
    const double fd = (fp - fm) / (2 * step);
    CHECK(std::fabs(fd - analytic) / std::max({std::fabs(fd), std::fabs(analytic), 1e-6}) <
          1e-4);
}
