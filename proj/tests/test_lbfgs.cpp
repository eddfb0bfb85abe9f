#include "pnct/lbfgs.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>

using namespace pnct;

namespace {

Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) m.col(i) = random_vector(n, rng);
  return m * m.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

// Dense BFGS recursion from B0 = theta I over the given pairs.
Eigen::MatrixXd dense_bfgs(const std::vector<std::pair<Vector, Vector>>& pairs, double theta) {
  const auto n = pairs.front().first.size();
  Eigen::MatrixXd b = theta * Eigen::MatrixXd::Identity(n, n);
  for (const auto& [s, y] : pairs) {
    const Vector bs = b * s;
    b += y * y.transpose() / y.dot(s) - bs * bs.transpose() / s.dot(bs);
  }
  return b;
}

Eigen::MatrixXd materialize(const LbfgsState& st, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) m.col(i) = st.apply(Vector::Unit(n, i));
  return m;
}

}  // namespace

TEST_CASE("empty memory acts as the identity") {
  const LbfgsState st;
  std::mt19937_64 rng(1);
  const Vector v = random_vector(7, rng);
  CHECK(lbfgs_apply(st, v) == v);
  CHECK(st.size() == 0);
  CHECK(st.capacity() == 50);
}

TEST_CASE("one pair matches the closed-form update") {
  std::mt19937_64 rng(2);
  const int n = 6;
  const Vector s = random_vector(n, rng);
  const Eigen::MatrixXd q = random_spd(n, rng);
  const Vector y = q * s;
  const LbfgsState st = lbfgs_update(LbfgsState(5), s, y);
  REQUIRE(st.size() == 1);
  const double theta = y.squaredNorm() / s.dot(y);
  CHECK(st.theta() == doctest::Approx(theta).epsilon(1e-14));

  const Eigen::MatrixXd ref = theta * Eigen::MatrixXd::Identity(n, n) -
                              theta * s * s.transpose() / s.squaredNorm() +
                              y * y.transpose() / y.dot(s);
  const Eigen::MatrixXd b = materialize(st, n);
  CHECK((b - ref).norm() <= 1e-12 * ref.norm());
  // Secant condition.
  CHECK((st.apply(s) - y).norm() <= 1e-12 * y.norm());
}

TEST_CASE("compact form equals the dense BFGS recursion") {
  std::mt19937_64 rng(3);
  const int n = 8;
  const Eigen::MatrixXd q = random_spd(n, rng);
  LbfgsState st(4);
  std::vector<std::pair<Vector, Vector>> pairs;
  for (int k = 0; k < 7; ++k) {
    const Vector s = random_vector(n, rng);
    const Vector y = q * s + 0.1 * random_vector(n, rng).cwiseAbs().asDiagonal() * s;
    if (!st.update(s, y)) continue;
    pairs.emplace_back(s, y);
    if (pairs.size() > 4) pairs.erase(pairs.begin());
    const Eigen::MatrixXd ref = dense_bfgs(pairs, st.theta());
    CHECK((materialize(st, n) - ref).norm() <= 1e-10 * ref.norm());
  }
  CHECK(st.size() == 4);
}

TEST_CASE("curvature condition rejects pairs with s^T y <= 0") {
  LbfgsState st(3);
  const Vector s = Vector::Unit(3, 0);
  CHECK_FALSE(st.update(s, -s));
  CHECK_FALSE(st.update(s, Vector::Unit(3, 1)));
  CHECK(st.size() == 0);
  CHECK(st.rejected() == 2);
  CHECK(st.update(s, 2 * s));
  CHECK(st.size() == 1);
  CHECK_THROWS_AS(st.update(Vector::Ones(2), Vector::Ones(3)), std::invalid_argument);
}

TEST_CASE("capacity 2 evicts the oldest pair") {
  LbfgsState st(2);
  std::mt19937_64 rng(4);
  std::vector<Vector> ss;
  for (int k = 0; k < 3; ++k) {
    const Vector s = random_vector(5, rng);
    ss.push_back(s);
    REQUIRE(st.update(s, (k + 1.0) * s));
  }
  CHECK(st.size() == 2);
  CHECK(st.s(0) == ss[1]);
  CHECK(st.s(1) == ss[2]);
  CHECK(st.y(1) == 3.0 * ss[2]);
}

TEST_CASE("conjugate steps on a quadratic recover the Hessian") {
  std::mt19937_64 rng(5);
  const int n = 4;
  const Eigen::MatrixXd q = random_spd(n, rng);
  // Q-conjugate directions from the eigenvectors of Q.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
  LbfgsState st(10);
  for (int i = 0; i < n; ++i) {
    const Vector s = (i + 1.0) * eig.eigenvectors().col(i);
    REQUIRE(st.update(s, q * s));
  }
  for (int trial = 0; trial < 5; ++trial) {
    const Vector v = random_vector(n, rng);
    CHECK((st.apply(v) - q * v).norm() <= 1e-8 * (q * v).norm());
  }
}

TEST_CASE("B stays symmetric positive definite") {
  std::mt19937_64 rng(6);
  const int n = 10;
  const Eigen::MatrixXd q = random_spd(n, rng);
  LbfgsState st(5);
  for (int k = 0; k < 12; ++k) {
    const Vector s = random_vector(n, rng);
    st.update(s, q * s);
    const Eigen::MatrixXd b = materialize(st, n);
    CHECK((b - b.transpose()).norm() <= 1e-10 * b.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (b + b.transpose()));
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

namespace {

class Quadratic final : public SmoothTerm {
 public:
  explicit Quadratic(Eigen::MatrixXd q) : q_(std::move(q)) {}
  Eigen::Index dimension() const override { return q_.rows(); }
  double value(const Vector& x) override {
    ++c_.value_evals;
    return 0.5 * x.dot(q_ * x);
  }
  double value_and_gradient(const Vector& x, Vector& g) override {
    ++c_.gradient_evals;
    g = q_ * x;
    return 0.5 * x.dot(g);
  }
  OracleCounters counters() const override { return c_; }

 private:
  Eigen::MatrixXd q_;
  OracleCounters c_;
};

}  // namespace

TEST_CASE("LbfgsHessian: probe pair at the first iterate, then successive pairs") {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd q = 1e6 * random_spd(4, rng);
  Quadratic f(q);
  LbfgsHessian model(f, 3);
  Vector x = random_vector(4, rng), g;
  f.value_and_gradient(x, g);
  model.update(x, g);
  CHECK(f.counters().gradient_evals == 2);
  CHECK(model.state().size() == 1);
  // The probe pair fixes the scale of B to that of Q.
  const Vector s = model.state().s(0);
  CHECK((model.apply(s) - q * s).norm() <= 1e-8 * (q * s).norm());
  CHECK(model.applies() == 1);

  const Vector x2 = x - 1e-7 * g;
  Vector g2;
  f.value_and_gradient(x2, g2);
  model.update(x2, g2);
  CHECK(f.counters().gradient_evals == 3);
  CHECK(model.state().size() == 2);

  LbfgsHessian plain(f, 3, false);
  plain.update(x, g);
  CHECK(plain.state().size() == 0);
}
