#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "nprnn/init.hpp"

using namespace nprnn;

TEST_SUITE("init") {
  TEST_CASE("np_recurrent_init with n = 1 is exactly the identity") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      MatrixD w = np_recurrent_init(1, rng);
      CHECK(w(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    }
    Rng rng(0);
    CHECK_THROWS_AS(np_recurrent_init(0, rng), ContractViolation);
  }

  TEST_CASE("np_recurrent_init spectral invariants") {
    for (Eigen::Index n : {2, 10, 100}) {
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed * 7919 + static_cast<std::uint64_t>(n));
        MatrixD w = np_recurrent_init(n, rng);
        CHECK((w - w.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        auto eig = eigh_symmetric(w);
        CHECK(std::abs(eig.values(0) - 1.0) < 1e-8);
        CHECK(eig.values(n - 1) > 0.0);
        for (Eigen::Index k = 1; k < n; ++k) CHECK(eig.values(k) < 1.0);
        CHECK(spectrum_report(w).regime == RegimeClass::StableManifold);

        // operator-norm bound on random directions
        VectorD h = gaussian_matrix(n, 1, 0.0, 1.0, rng);
        CHECK((w * h).norm() <= h.norm() * (1.0 + 1e-12));
      }
    }
  }

  TEST_CASE("np_recurrent_init top eigenvalue agrees with Eigen's solver") {
    Rng rng(11);
    MatrixD w = np_recurrent_init(100, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(Eigen::MatrixXd(w), Eigen::EigenvaluesOnly);
    CHECK(std::abs(oracle.eigenvalues().maxCoeff() - 1.0) < 1e-8);
    CHECK(oracle.eigenvalues().minCoeff() > 0.0);
  }

  TEST_CASE("identity_init") {
    CHECK(identity_init(4, 1.0) == MatrixD::Identity(4, 4));
    MatrixD small = identity_init(3, 0.01);
    CHECK(small == 0.01 * MatrixD::Identity(3, 3));
    auto eig = eigh_symmetric(small);
    for (Eigen::Index k = 0; k < 3; ++k) CHECK(eig.values(k) == doctest::Approx(0.01));
    CHECK_THROWS_AS(identity_init(0, 1.0), ContractViolation);

    Rng rng(3);
    MatrixD a = gaussian_matrix(6, 6, 0.0, 1.0, rng);
    MatrixD s = identity_init(6, 0.37);
    CHECK((s * a - a * s).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("orthogonal_init") {
    {
      Rng draw(5), rng(5);
      const double g = draw.normal();
      MatrixD q = orthogonal_init(1, rng);
      CHECK(q(0, 0) == (g >= 0.0 ? 1.0 : -1.0));
    }
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
      MatrixD q = orthogonal_init(30, rng);
      auto eig = eigh_symmetric(MatrixD(q.transpose() * q));
      for (Eigen::Index k = 0; k < 30; ++k) CHECK(std::abs(std::sqrt(eig.values(k)) - 1.0) < 1e-9);
      VectorD x = gaussian_matrix(30, 1, 0.0, 1.0, rng);
      CHECK(std::abs((q * x).norm() - x.norm()) < 1e-10);
    }
  }

  TEST_CASE("gaussian_recurrent_init moments and spectral radius") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      MatrixD g = gaussian_recurrent_init(100, rng);
      const double rho = spectral_radius(g);
      CHECK(rho >= 0.8);
      CHECK(rho <= 1.3);
      const double var = g.array().square().mean();
      CHECK(std::abs(var - 0.01) < 0.2 * 0.01);
    }
    Rng a(9), b(9);
    CHECK(gaussian_recurrent_init(10, a) == gaussian_recurrent_init(10, b));
  }

  TEST_CASE("normalized_gaussian_init") {
    {
      Rng rng(1);
      MatrixD w = normalized_gaussian_init(1, rng);
      CHECK(std::abs(w(0, 0)) == doctest::Approx(1.0).epsilon(1e-15));
    }
    int with_complex_pairs = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(100 + seed);
      MatrixD w = normalized_gaussian_init(100, rng);
      CHECK(std::abs(spectral_radius(w) - 1.0) < 1e-6);
      int pairs = 0;
      for (const auto& lam : general_eigenvalues(w))
        if (lam.imag() != 0.0) ++pairs;
      if (pairs >= 2) ++with_complex_pairs;
    }
    CHECK(with_complex_pairs >= 18);
  }

  TEST_CASE("alpha input scaling") {
    CHECK(alpha(100) == doctest::Approx(1.43171).epsilon(1e-5));
    CHECK(alpha(6) == doctest::Approx(1.973694).epsilon(1e-6));
    CHECK(alpha(3) == alpha(6));
    CHECK(alpha(1) == alpha(6));
  }

  TEST_CASE("input and output weight moments") {
    Rng rng(12);
    MatrixD wx = input_weight_init(100, 100, rng);
    CHECK(wx.rows() == 100);
    CHECK(wx.cols() == 100);
    const double expected = alpha(100) * alpha(100) / 100.0;
    CHECK(std::abs(wx.array().square().mean() - expected) < 0.1 * expected);
    CHECK(input_weight_init(7, 2, rng).rows() == 7);

    MatrixD wy = output_weight_init(10, 100, rng);
    CHECK(wy.rows() == 10);
    CHECK(std::abs(wy.array().square().mean() - 2.0 / 110.0) < 0.2 * 2.0 / 110.0);

    // m = c = 1: variance 1, checked across many independent draws
    double sum_sq = 0;
    for (int i = 0; i < 20000; ++i) sum_sq += std::pow(output_weight_init(1, 1, rng)(0, 0), 2);
    CHECK(std::abs(sum_sq / 20000 - 1.0) < 0.05);

    Rng a(4), b(4);
    CHECK(input_weight_init(5, 3, a) == input_weight_init(5, 3, b));
    CHECK(output_weight_init(2, 5, a) == output_weight_init(2, 5, b));
  }

  TEST_CASE("build_network") {
    Rng rng(13);
    auto irnn = build_network(InitScheme::irnn(), 2, 20, 1, rng);
    CHECK(irnn.w_hh == MatrixD::Identity(20, 20));
    CHECK(irnn.b_h.isZero(0.0));
    CHECK(irnn.b_y.isZero(0.0));
    irnn.validate();

    auto np = build_network(InitScheme::np_rnn(), 2, 20, 1, rng);
    CHECK(spectrum_report(np.w_hh).regime == RegimeClass::StableManifold);
    CHECK(build_network(InitScheme::np_tanh_rnn(), 2, 5, 1, rng).activation == Activation::Tanh);

    for (const char* name : {"IRNN", "iRNN", "np-RNN", "np-tanhRNN", "nRNN", "oRNN", "gRNN", "sRNN"}) {
      Rng a(21), b(21);
      auto p = build_network(parse_scheme(name), 3, 12, 4, a, OutputKind::Softmax);
      auto q = build_network(parse_scheme(name), 3, 12, 4, b, OutputKind::Softmax);
      CHECK(p.w_hh == q.w_hh);
      CHECK(p.w_hx == q.w_hx);
      CHECK(p.w_yh == q.w_yh);
      CHECK(scheme_name(parse_scheme(name)) == name);
    }
    CHECK_THROWS_AS(parse_scheme("lstm"), ContractViolation);
    CHECK_THROWS_AS(build_network(InitScheme::irnn(), 0, 3, 1, rng), ContractViolation);
  }

  TEST_CASE("spectrum_report") {
    auto id = spectrum_report(MatrixD::Identity(100, 100));
    CHECK(id.regime == RegimeClass::NeutrallyStable);
    CHECK((id.eigenvalue_magnitudes.array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(id.is_symmetric);
    CHECK(id.is_positive_definite);
    CHECK(id.max_eig == id.eigenvalue_magnitudes(0));

    CHECK(spectrum_report(identity_init(10, 0.01)).regime == RegimeClass::GlobalStableOrigin);
    CHECK(spectrum_report(identity_init(10, 1.5)).regime == RegimeClass::Divergent);

    MatrixD rot(2, 2);
    rot << 0, -1, 1, 0;
    auto r = spectrum_report(rot);
    CHECK_FALSE(r.is_symmetric);
    CHECK(r.regime == RegimeClass::NeutrallyStable);
  }
}
