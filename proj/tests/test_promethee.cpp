#include <doctest.h>

#include <random>

#include "evdro/error.hpp"
#include "evdro/promethee.hpp"

using namespace evdro;
using namespace evdro::promethee;

TEST_CASE("v-shaped preference function") {
  PreferenceThresholds th{1.0, 3.0};
  CHECK(preference(0.5, th) == 0.0);
  CHECK(preference(2.0, th) == doctest::Approx(0.5));
  CHECK(preference(5.0, th) == 1.0);
  CHECK(preference(1.0, th) == 0.0);
  CHECK(preference(3.0, th) == 1.0);
}

TEST_CASE("preference rejects inverted thresholds") {
  CHECK_THROWS_AS(preference(1.0, PreferenceThresholds{2.0, 1.0}), Error);
  CHECK_THROWS_AS(preference(1.0, PreferenceThresholds{2.0, 2.0}), Error);
}

TEST_CASE("preference is continuous at both thresholds") {
  PreferenceThresholds th{0.5, 2.5};
  CHECK(std::abs(preference(0.5 + 1e-9, th) - 0.0) <= 1e-6);
  CHECK(std::abs(preference(0.5 - 1e-9, th) - 0.0) <= 1e-6);
  CHECK(std::abs(preference(2.5 - 1e-9, th) - 1.0) <= 1e-6);
  CHECK(std::abs(preference(2.5 + 1e-9, th) - 1.0) <= 1e-6);
}

TEST_CASE("preference is monotone in delta") {
  PreferenceThresholds th{0.2, 1.7};
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    double d1 = u(eng), d2 = u(eng);
    if (d1 > d2) std::swap(d1, d2);
    CHECK(preference(d1, th) <= preference(d2, th));
  }
}

TEST_CASE("preference index weights per-criterion values") {
  WeightVector w;
  w.w.resize(2);
  w.w << 0.6, 0.4;
  Eigen::VectorXd psi(2);
  psi << 1.0, 0.0;
  CHECK(preference_index(psi, w) == doctest::Approx(0.6));
  psi << 0.5, 0.5;
  w.w << 0.5, 0.5;
  CHECK(preference_index(psi, w) == doctest::Approx(0.5));
  psi.setZero();
  CHECK(preference_index(psi, w) == 0.0);
}

TEST_CASE("preference index rejects mismatched lengths") {
  WeightVector w;
  w.w = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  Eigen::VectorXd psi(2);
  psi << 0.1, 0.2;
  CHECK_THROWS_AS(preference_index(psi, w), Error);
}

TEST_CASE("outranking flows on a 2x2 example") {
  Eigen::MatrixXd pi(2, 2);
  pi << 0.0, 0.6, 0.2, 0.0;
  auto f = outranking_flows(pi);
  CHECK(f.phi(0) == doctest::Approx(0.4));
  CHECK(f.phi(1) == doctest::Approx(-0.4));
  CHECK(f.phi_plus(0) == doctest::Approx(0.6));
  CHECK(f.phi_minus(0) == doctest::Approx(0.2));
}

TEST_CASE("equal preferences give zero net flow") {
  Eigen::MatrixXd pi = Eigen::MatrixXd::Constant(3, 3, 0.4);
  pi.diagonal().setZero();
  auto f = outranking_flows(pi);
  CHECK(f.phi.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("net flows sum to zero on random instances") {
  std::mt19937_64 eng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> size(2, 8);
  for (int rep = 0; rep < 10000; ++rep) {
    int n = size(eng);
    Eigen::MatrixXd pi(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) pi(i, k) = i == k ? 0.0 : u(eng);
    auto f = outranking_flows(pi);
    CHECK(std::abs(f.phi.sum()) <= 1e-9);
    CHECK((f.phi_plus.array() >= -1e-12).all());
    CHECK((f.phi_plus.array() <= 1.0 + 1e-12).all());
  }
}

TEST_CASE("select_best follows the argmax and keeps habits on ties") {
  FlowResult f;
  f.phi.resize(2);
  f.phi << 0.4, -0.4;
  CHECK(select_best(f, 1) == 0);  // switch to the strict argmax

  f.phi = Eigen::VectorXd::Zero(4);
  CHECK(select_best(f, 2) == 2);  // tie keeps the current station

  f.phi.resize(3);
  f.phi << 0.1, 0.1, 0.2;
  CHECK(select_best(f, 0) == 2);  // unique max

  f.phi << 0.2, 0.1, 0.2;
  CHECK(select_best(f, 1) == 0);  // tie among others resolves to lowest index
}

TEST_CASE("select_best input validation") {
  FlowResult f;
  f.phi.resize(0);
  CHECK_THROWS_AS(select_best(f, 0), Error);
  f.phi = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(select_best(f, 5), Error);
}

TEST_CASE("argmax invariant under constant shifts of one criterion column") {
  CriteriaSet crit{{{"price", Direction::minimize},
                    {"wait", Direction::minimize},
                    {"bias", Direction::maximize}}};
  std::mt19937_64 eng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Scores and shifts live on a dyadic grid so the per-pair differences are
  // exact and the bit-identical contract is meaningful.
  auto grid = [&] { return static_cast<double>(eng() % 512) / 16.0; };
  for (int rep = 0; rep < 500; ++rep) {
    int n = 2 + static_cast<int>(eng() % 5);
    PerformanceTable t;
    t.g.resize(n, 3);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 3; ++j) t.g(i, j) = grid();
    std::vector<PreferenceThresholds> th{{0.1, 1.0}, {0.2, 2.0}, {0.0, 0.5}};
    WeightVector w;
    w.w.resize(3);
    w.w << u(eng) + 0.1, u(eng) + 0.1, u(eng) + 0.1;
    w.w /= w.w.sum();

    auto pi1 = preference_matrix(t, crit, th, w);
    PerformanceTable shifted = t;
    int col = static_cast<int>(eng() % 3);
    shifted.g.col(col).array() += 7.25;
    auto pi2 = preference_matrix(shifted, crit, th, w);
    CHECK((pi1 - pi2).cwiseAbs().maxCoeff() == 0.0);  // bit-identical

    auto f1 = outranking_flows(pi1);
    auto f2 = outranking_flows(pi2);
    int cur = static_cast<int>(eng() % n);
    CHECK(select_best(f1, cur) == select_best(f2, cur));
  }
}

TEST_CASE("scaling a criterion and its thresholds together leaves psi unchanged") {
  CriteriaSet crit{{{"c0", Direction::minimize}, {"c1", Direction::maximize}}};
  PerformanceTable t;
  t.g.resize(3, 2);
  t.g << 1.0, 4.0, 2.5, 1.0, 0.5, 2.0;
  std::vector<PreferenceThresholds> th{{0.1, 1.2}, {0.2, 0.9}};
  WeightVector w;
  w.w.resize(2);
  w.w << 0.5, 0.5;
  auto pi1 = preference_matrix(t, crit, th, w);

  const double factor = 3.5;
  PerformanceTable t2 = t;
  t2.g.col(0) *= factor;
  auto th2 = th;
  th2[0].tau_q *= factor;
  th2[0].tau_p *= factor;
  auto pi2 = preference_matrix(t2, crit, th2, w);
  CHECK((pi1 - pi2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("weight vector validation") {
  WeightVector w;
  w.w.resize(2);
  w.w << 0.5, 0.6;
  CHECK_THROWS_AS(w.validate(), Error);
  w.w << -0.1, 1.1;
  CHECK_THROWS_AS(w.validate(), Error);
  w.w << 0.25, 0.75;
  CHECK_NOTHROW(w.validate());
}
