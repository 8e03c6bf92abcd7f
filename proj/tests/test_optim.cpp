#include "doctest.h"
#include "nprnn/init.hpp"
#include "nprnn/optim.hpp"

using namespace nprnn;

namespace {

Gradients<double> constant_grads(double value) {
  Gradients<double> g;
  g.w_hx = MatrixD::Constant(2, 1, value);
  g.w_hh = MatrixD::Constant(2, 2, value);
  g.w_yh = MatrixD::Constant(1, 2, value);
  g.b_h = VectorD::Constant(2, value);
  g.b_y = VectorD::Constant(1, value);
  return g;
}

RnnParams<double> params_like(const Gradients<double>& g, double value) {
  RnnParams<double> p;
  static_cast<ParamArrays<double>&>(p) = g.zeros_like();
  p.for_each([value](auto& a) { a.setConstant(value); });
  return p;
}

}  // namespace

TEST_SUITE("optim") {
  TEST_CASE("clip_gradients") {
    // 11 entries of value v have norm v * sqrt(11)
    Gradients<double> g = constant_grads(20.0 / std::sqrt(11.0));
    CHECK(g.norm() == doctest::Approx(20.0));
    Gradients<double> clipped = clip_gradients(g, 10.0);
    CHECK(clipped.w_hh(0, 0) == doctest::Approx(g.w_hh(0, 0) / 2.0).epsilon(1e-14));
    CHECK(std::abs(clipped.norm() - 10.0) < 1e-12);

    Gradients<double> small = constant_grads(5.0 / std::sqrt(11.0));
    Gradients<double> same = clip_gradients(small, 10.0);
    CHECK(same.w_hx == small.w_hx);
    CHECK(same.b_y == small.b_y);
    CHECK_THROWS_AS(clip_gradients(small, 0.0), ContractViolation);
  }

  TEST_CASE("clip_gradients is idempotent and direction preserving") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
      auto p = build_network(InitScheme::g_rnn(), 2, 6, 1, rng);
      Gradients<double> g = p;
      g *= rng.uniform() * 40.0;
      const double ceiling = 1.0 + 9.0 * rng.uniform();
      Gradients<double> once = clip_gradients(g, ceiling);
      Gradients<double> twice = clip_gradients(once, ceiling);
      CHECK(std::abs(once.norm() - std::min(g.norm(), ceiling)) < 1e-12);
      CHECK((twice.w_hh - once.w_hh).cwiseAbs().maxCoeff() < 1e-15);
      const double k = once.norm() / g.norm();
      CHECK(k >= 0.0);
      CHECK((once.w_hh - k * g.w_hh).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("sgd_step") {
    Gradients<double> g = constant_grads(0.5);
    RnnParams<double> p = params_like(g, 1.0);
    auto same = sgd_step(p, g, 0.0);
    CHECK(same.w_hh == p.w_hh);

    // quadratic L = theta^2 / 2 has gradient theta
    RnnParams<double> theta = params_like(g, 1.0);
    auto next = sgd_step(theta, static_cast<const Gradients<double>&>(theta), 0.1);
    CHECK(next.w_hh(0, 0) == doctest::Approx(0.9));

    auto two = sgd_step(sgd_step(p, g, 0.1), g, 0.2);
    auto one = sgd_step(p, g, 0.3);
    CHECK((two.w_yh - one.w_yh).cwiseAbs().maxCoeff() < 1e-15);

    Gradients<double> wrong = g;
    wrong.b_h = VectorD::Zero(3);
    CHECK_THROWS_AS(sgd_step(p, wrong, 0.1), ContractViolation);
  }

  TEST_CASE("clipped sgd decreases a quadratic") {
    RnnParams<double> theta = params_like(constant_grads(0.0), 3.0);
    double prev = 0.5 * theta.squared_norm();
    for (int step = 0; step < 50; ++step) {
      Gradients<double> g = clip_gradients(static_cast<const Gradients<double>&>(theta), 1.0);
      theta = sgd_step(std::move(theta), g, 0.5);
      const double now = 0.5 * theta.squared_norm();
      CHECK(now < prev);
      prev = now;
    }
  }

  TEST_CASE("rmsprop_step") {
    OptimizerState<double> st;
    st.kind = OptimizerKind::RMSprop;
    st.lr0 = 1e-3;
    Gradients<double> g = constant_grads(0.0);
    g.w_hh << 2.0, -0.5, 1e-3, -7.0;
    RnnParams<double> p = params_like(g, 0.0);
    auto next = rmsprop_step(p, g, st);
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 2; ++j) {
        const double gij = g.w_hh(i, j);
        CHECK(st.rms_cache->w_hh(i, j) == doctest::Approx(0.1 * gij * gij));
        const double expected = -1e-3 * gij / (std::sqrt(0.1) * std::abs(gij) + 1e-8);
        CHECK(next.w_hh(i, j) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(std::abs(next.w_hh(i, j) + 1e-3 * (gij > 0 ? 1 : -1) / std::sqrt(0.1)) < 1e-6);
      }

    // zero gradient: no movement, cache decays
    const MatrixD cache_before = st.rms_cache->w_hh;
    auto still = rmsprop_step(next, g.zeros_like(), st);
    CHECK(still.w_hh == next.w_hh);
    CHECK((st.rms_cache->w_hh - 0.9 * cache_before).cwiseAbs().maxCoeff() < 1e-14);

    OptimizerState<double> sgd;
    CHECK_THROWS_AS(rmsprop_step(p, g, sgd), ContractViolation);
  }

  TEST_CASE("rmsprop update magnitude bound") {
    Rng rng(2);
    OptimizerState<double> st;
    st.kind = OptimizerKind::RMSprop;
    st.lr0 = 1e-2;
    RnnParams<double> p = build_network(InitScheme::np_rnn(), 2, 8, 1, rng);
    const double bound = st.lr0 / std::sqrt(1.0 - st.rms_decay) + 1e-12;
    for (int step = 0; step < 200; ++step) {
      Gradients<double> g = build_network(InitScheme::g_rnn(), 2, 8, 1, rng);
      g *= std::exp(6.0 * (rng.uniform() - 0.5));
      auto next = rmsprop_step(p, g, st);
      CHECK((next.w_hh - p.w_hh).cwiseAbs().maxCoeff() <= bound);
      p = std::move(next);
    }
  }

  TEST_CASE("rmsprop is deterministic for a fixed gradient sequence") {
    auto run = [] {
      Rng rng(3);
      OptimizerState<double> st;
      st.kind = OptimizerKind::RMSprop;
      RnnParams<double> p = build_network(InitScheme::np_rnn(), 2, 5, 1, rng);
      for (int step = 0; step < 20; ++step) p = rmsprop_step(p, build_network(InitScheme::g_rnn(), 2, 5, 1, rng), st);
      return p.w_hh;
    };
    CHECK(run() == run());
  }

  TEST_CASE("lr_at") {
    LrSchedule s{100, {{33, 10.0}, {66, 10.0}}};
    CHECK(lr_at(s, 1.0, 10) == 1.0);
    CHECK(lr_at(s, 1.0, 40) == doctest::Approx(0.1));
    CHECK(lr_at(s, 1.0, 80) == doctest::Approx(0.01));
    CHECK(lr_at(s, 1.0, 33) == doctest::Approx(0.1));
    CHECK_THROWS_AS(lr_at(s, 1.0, 100), ContractViolation);

    LrSchedule flat{5, {}};
    for (std::size_t e = 0; e < 5; ++e) CHECK(lr_at(flat, 0.3, e) == 0.3);

    auto eq = equal_interval_schedule(100);
    REQUIRE(eq.cooling_points.size() == 2);
    CHECK(eq.cooling_points[0].epoch == 33);
    CHECK(eq.cooling_points[1].epoch == 66);

    double prev = 1e300;
    for (std::size_t e = 0; e < 100; ++e) {
      CHECK(lr_at(eq, 2e-4, e) <= prev);
      prev = lr_at(eq, 2e-4, e);
    }

    LrSchedule bad{10, {{5, 10.0}, {5, 10.0}}};
    CHECK_THROWS_AS(bad.validate(), ContractViolation);
    LrSchedule bad_div{10, {{5, 0.5}}};
    CHECK_THROWS_AS(bad_div.validate(), ContractViolation);
  }
}
