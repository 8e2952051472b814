#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "perfctl/noise.hpp"
#include "perfctl/perturbation.hpp"

using namespace perfctl;

namespace {

PerturbationMap two_atom_map(int T, Scalar amplitude) {
  Matrix u0(2, 2);
  u0 << 0.3, -0.1, 0.2, 0.4;
  Matrix dir = Matrix::Ones(2, 4);
  return PerturbationMap::scaled_factor(T, std::vector<Scalar>(T, amplitude), dir, {u0, -u0},
                                        {0.5, 0.5});
}

Policy dense_policy(Scalar fill) {
  return Policy::dense(Matrix::Constant(2, 4, fill), 2, FeasibleSet::ball(10.0));
}

}  // namespace

TEST_CASE("discrete noise validates probabilities and mean") {
  Vector a(1), b(1);
  a << 1.0;
  b << -1.0;
  NoiseModel ok = NoiseModel::discrete({a, b}, {0.5, 0.5});
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.sigma2() == doctest::Approx(1.0));
  CHECK(ok.w_bound() == doctest::Approx(1.0));

  NoiseModel bad_probs = NoiseModel::discrete({a, b}, {0.5, 0.5 + 1e-9});
  CHECK_THROWS(bad_probs.validate());

  NoiseModel biased = NoiseModel::discrete({a, b}, {0.7, 0.3});
  CHECK_THROWS(biased.validate());
}

TEST_CASE("uniform box moments") {
  Vector lo = Vector::Constant(3, -0.5);
  Vector hi = Vector::Constant(3, 0.5);
  NoiseModel m = NoiseModel::uniform_box(lo, hi);
  CHECK(m.mean().norm() == 0.0);
  CHECK(m.sigma2() == doctest::Approx(1.0 / 12.0));
  CHECK(m.w_bound() == doctest::Approx(std::sqrt(3.0) * 0.5));

  Rng rng(SeedPair{5, 0}, Stream::Noise);
  for (int i = 0; i < 1000; ++i) CHECK(m.sample(rng).norm() <= m.w_bound() + 1e-12);
}

TEST_CASE("stacked stock noise reports its shifted mean and singular floor") {
  NoiseModel m = NoiseModel::stacked_uniform(2, 0.0, 1.0);
  const Vector mu = m.mean();
  CHECK(mu.head(2).norm() == 0.0);
  CHECK(mu.tail(2).isApprox(Vector::Constant(2, 0.5)));
  CHECK(m.sigma2() == 0.0);
  CHECK_FALSE(m.zero_mean_declared());

  Rng rng(SeedPair{6, 0}, Stream::Noise);
  for (int i = 0; i < 500; ++i) {
    const Vector w = m.sample(rng);
    CHECK(w.head(2).isApprox(w.tail(2) - Vector::Constant(2, 0.5)));
    CHECK(w.norm() <= m.w_bound() + 1e-12);
  }
}

TEST_CASE("empirical second moment matches the closed form") {
  NoiseModel m = NoiseModel::stacked_uniform(2, 0.0, 1.0);
  Rng rng(SeedPair{7, 0}, Stream::Noise);
  Matrix acc = Matrix::Zero(4, 4);
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const Vector w = m.sample(rng);
    acc += w * w.transpose();
  }
  acc /= n;
  CHECK((acc - m.second_moment()).norm() <= 0.01);
}

TEST_CASE("scaled-factor samples respect the declared support bound") {
  PerturbationMap map = two_atom_map(4, 0.7);
  map.validate();
  Policy deploy = dense_policy(0.3);
  Rng rng(SeedPair{8, 0}, Stream::Perturbation);
  for (int t = 0; t < 4; ++t)
    for (int i = 0; i < 2000; ++i)
      CHECK(spectral_norm(map.sample(t, deploy, rng)) <= map.xi[t] + 1e-12);
}

TEST_CASE("scaled-factor empirical mean is statistically zero") {
  PerturbationMap map = two_atom_map(1, 0.5);
  Policy deploy = dense_policy(0.2);
  Rng rng(SeedPair{9, 0}, Stream::Perturbation);
  const int n = 100000;
  Matrix mean = Matrix::Zero(2, 2);
  Scalar sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Matrix d = map.sample(0, deploy, rng);
    mean += d;
    sq += d.squaredNorm();
  }
  mean /= n;
  const Scalar sample_std = std::sqrt(sq / n);
  CHECK(mean.norm() <= 5.0 * sample_std / std::sqrt(static_cast<Scalar>(n)));
}

TEST_CASE("scaled-factor Wasserstein sensitivity via the identity coupling") {
  // E||Delta(M) - Delta(M')||_F under the common-U coupling must be bounded
  // by eps_t ||M - M'||_F; this is the construction that makes the declared
  // eps valid.
  PerturbationMap map = two_atom_map(1, 0.9);
  Policy m1 = dense_policy(0.05);
  Policy m2 = dense_policy(0.35);
  const Scalar dist = (m1.full() - m2.full()).norm();
  Scalar coupled = 0.0;
  const auto s1 = map.support(0, m1);
  const auto s2 = map.support(0, m2);
  for (std::size_t k = 0; k < s1.size(); ++k)
    coupled += s1[k].second * (s1[k].first - s2[k].first).norm();
  CHECK(coupled <= map.eps[0] * dist + 1e-12);
}

TEST_CASE("zero amplitude collapses the support to the null atom") {
  PerturbationMap map = two_atom_map(2, 0.0);
  Policy deploy = dense_policy(0.3);
  const auto atoms = map.support(0, deploy);
  REQUIRE(atoms.size() == 1);
  CHECK(atoms[0].first.norm() == 0.0);
  CHECK(atoms[0].second == 1.0);
}

TEST_CASE("second-moment operators agree with atom enumeration") {
  PerturbationMap map = two_atom_map(1, 0.8);
  Policy deploy = dense_policy(-0.2);
  Matrix X(2, 2);
  X << 1.0, 0.3, 0.3, 2.0;
  Matrix direct = Matrix::Zero(2, 2);
  Matrix direct_t = Matrix::Zero(2, 2);
  for (const auto& [d, p] : map.support(0, deploy)) {
    direct += p * d * X * d.transpose();
    direct_t += p * d.transpose() * X * d;
  }
  CHECK((map.e_delta_x_deltaT(0, deploy, X) - direct).norm() <= 1e-12);
  CHECK((map.e_deltaT_x_delta(0, deploy, X) - direct_t).norm() <= 1e-12);
}

TEST_CASE("clipped gaussian quadrature matches Monte Carlo") {
  const Scalar mean = -0.4, sd = 0.3, clip = 0.6;
  const auto f = [](Scalar v) { return std::exp(0.8 * v); };
  const Scalar quad = clipped_gaussian_expectation(f, mean, sd, clip);
  Rng rng(SeedPair{10, 0}, Stream::Eval);
  const int n = 400000;
  Scalar acc = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    Scalar v = mean + sd * rng.normal();
    v = std::min(clip, std::max(-clip, v));
    const Scalar y = f(v);
    acc += y;
    sq += y * y;
  }
  acc /= n;
  const Scalar se = std::sqrt((sq / n - acc * acc) / n);
  CHECK(std::abs(quad - acc) <= 4.0 * se + 1e-9);
}

TEST_CASE("degenerate point-mass expectation") {
  const auto f = [](Scalar v) { return v * v; };
  CHECK(clipped_gaussian_expectation(f, -5.0, 0.0, 0.6) == doctest::Approx(0.36));
  CHECK(clipped_gaussian_expectation(f, 0.25, 0.0, 0.6) == doctest::Approx(0.0625));
}
