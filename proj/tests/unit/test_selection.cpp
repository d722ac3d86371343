#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "esr/selection.hpp"

using namespace esr;

namespace {

// Dense matrix with the same interface as PixelFeatureMatrix; lets tests
// build arbitrary pixel columns directly.
struct DenseMatrix {
  std::size_t n = 0, p = 0;
  std::vector<double> v;  // row major

  DenseMatrix(std::size_t n_, std::size_t p_) : n(n_), p(p_), v(n_ * p_, 0.0) {}
  std::size_t rows() const { return n; }
  std::size_t cols() const { return p; }
  double at(std::size_t i, std::size_t j) const { return v[i * p + j]; }
  double& ref(std::size_t i, std::size_t j) { return v[i * p + j]; }
};

// Wrapper that counts how often each column is read.
struct CountingMatrix {
  const DenseMatrix* inner;
  mutable std::vector<std::size_t> col_reads;

  explicit CountingMatrix(const DenseMatrix& m) : inner(&m), col_reads(m.cols(), 0) {}
  std::size_t rows() const { return inner->rows(); }
  std::size_t cols() const { return inner->cols(); }
  double at(std::size_t i, std::size_t j) const {
    ++col_reads[j];
    return inner->at(i, j);
  }
};

static_assert(PixelMatrixLike<DenseMatrix>);
static_assert(PixelMatrixLike<CountingMatrix>);

DenseMatrix random_matrix(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  DenseMatrix m(n, p);
  for (double& x : m.v) x = u(rng);
  return m;
}

std::vector<std::vector<double>> random_targets(std::size_t n, std::size_t dim,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> y(n, std::vector<double>(dim));
  for (auto& row : y)
    for (double& x : row) x = g(rng);
  return y;
}

double naive_cov(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(n);
  mb /= double(n);
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / double(n - 1);
}

double naive_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  return naive_cov(a, b) / std::sqrt(naive_cov(a, a) * naive_cov(b, b));
}

std::vector<double> column(const DenseMatrix& m, std::size_t j) {
  std::vector<double> c(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) c[i] = m.at(i, j);
  return c;
}

std::vector<double> diff_column(const DenseMatrix& m, std::size_t a, std::size_t b) {
  std::vector<double> c(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) c[i] = m.at(i, a) - m.at(i, b);
  return c;
}

}  // namespace

TEST_CASE("covariance cache matches a direct computation", "[selection]") {
  const DenseMatrix m = random_matrix(40, 7, 31);
  const CovarianceCache cache = precompute_pixel_covariance(m);
  REQUIRE(cache.n_pixels == 7);
  REQUIRE(cache.sample_count == 40);
  for (std::size_t a = 0; a < 7; ++a)
    for (std::size_t b = 0; b < 7; ++b)
      CHECK(cache.cov(a, b) ==
            Catch::Approx(naive_cov(column(m, a), column(m, b))).margin(1e-9));

  const DenseMatrix tiny(1, 3);
  CHECK_THROWS_AS(precompute_pixel_covariance(tiny), UsageError);
}

TEST_CASE("projections are replayable from the same engine state", "[selection]") {
  const auto y = random_targets(30, 8, 32);
  Rng rng_a(99), rng_b(99);
  const ProjectedTarget proj = project_targets(y, rng_a);

  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(8);
  for (double& c : v) c = g(rng_b);
  CHECK(rng_a == rng_b);  // same engine consumption

  for (std::size_t i = 0; i < y.size(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 8; ++j) s += y[i][j] * v[j];
    CHECK(proj.y_prob[i] == Catch::Approx(s).margin(1e-12));
  }
  CHECK(proj.variance ==
        Catch::Approx(naive_cov(proj.y_prob, proj.y_prob)).margin(1e-9));
}

TEST_CASE("cached correlation equals the materialized Pearson correlation", "[selection]") {
  const DenseMatrix m = random_matrix(60, 9, 33);
  const auto y = random_targets(60, 4, 34);
  const CovarianceCache cache = precompute_pixel_covariance(m);
  Rng rng(35);
  const ProjectedTarget proj = project_targets(y, rng);
  const auto tp_cov = target_pixel_covariance(proj, m, cache);

  for (std::size_t j = 0; j < 9; ++j)
    CHECK(tp_cov[j] == Catch::Approx(naive_cov(proj.y_prob, column(m, j))).margin(1e-9));

  for (std::size_t a = 0; a < 9; ++a)
    for (std::size_t b = 0; b < 9; ++b) {
      if (a == b) continue;
      const auto corr = correlation_with_difference(proj, cache, tp_cov, a, b);
      REQUIRE(corr.has_value());
      CHECK(*corr ==
            Catch::Approx(naive_pearson(proj.y_prob, diff_column(m, a, b))).margin(1e-9));
    }
}

TEST_CASE("selection agrees with an exhaustive rescan", "[selection]") {
  const std::size_t n = 50, p = 6, f = 3;
  const DenseMatrix m = random_matrix(n, p, 36);
  auto y = random_targets(n, 10, 37);
  const CovarianceCache cache = precompute_pixel_covariance(m);

  Rng rng_fast(123);
  const auto pairs = select_features(y, m, cache, f, rng_fast);
  REQUIRE(pairs.size() == f);

  Rng rng_slow(123);
  for (std::size_t round = 0; round < f; ++round) {
    const ProjectedTarget proj = project_targets(y, rng_slow);
    bool found = false;
    std::size_t bm = 0, bn = 0;
    double best = 0;
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) {
        if (a == b) continue;
        const auto d = diff_column(m, a, b);
        if (naive_cov(d, d) <= 0.0) continue;
        const double corr = naive_pearson(proj.y_prob, d);
        if (!found || corr > best) {
          found = true;
          best = corr;
          bm = a;
          bn = b;
        }
      }
    REQUIRE(found);
    CHECK(pairs[round].m == bm);
    CHECK(pairs[round].n == bn);
  }
}

TEST_CASE("ties pick the lexicographically smallest pair", "[selection]") {
  // Columns 2 and 3 duplicate columns 0 and 1, creating exact ties.
  const std::size_t n = 24;
  DenseMatrix m(n, 4);
  std::mt19937_64 rng(38);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.ref(i, 0) = u(rng);
    m.ref(i, 1) = u(rng);
    m.ref(i, 2) = m.at(i, 0);
    m.ref(i, 3) = m.at(i, 1);
  }
  // Single-coordinate targets equal to the (0,1) difference feature:
  // corr(+/-1) is attained by the duplicated pairs simultaneously.
  std::vector<std::vector<double>> y(n, std::vector<double>(1));
  for (std::size_t i = 0; i < n; ++i) y[i][0] = m.at(i, 0) - m.at(i, 1);

  const CovarianceCache cache = precompute_pixel_covariance(m);
  Rng srng(39);
  const auto pairs = select_features(y, m, cache, 1, srng);
  REQUIRE(pairs.size() == 1);
  // Either sign of the projection makes some duplicated family optimal;
  // the winner must be that family's lexicographically first member.
  const bool lex_first = (pairs[0].m == 0 && pairs[0].n == 1) ||
                         (pairs[0].m == 1 && pairs[0].n == 0);
  CHECK(lex_first);
}

TEST_CASE("degenerate candidates are skipped or rejected", "[selection]") {
  const std::size_t n = 20;
  DenseMatrix m(n, 3);
  std::mt19937_64 rng(40);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.ref(i, 0) = u(rng);  // informative
    m.ref(i, 1) = 5.0;     // constant
    m.ref(i, 2) = 9.0;     // constant
  }
  const auto y = random_targets(n, 2, 41);
  const CovarianceCache cache = precompute_pixel_covariance(m);
  Rng srng(42);
  const auto pairs = select_features(y, m, cache, 2, srng);
  for (const auto& pr : pairs)
    CHECK((pr.m == 0 || pr.n == 0));  // the constant-constant pair never wins

  DenseMatrix all_const(n, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < 3; ++j) all_const.ref(i, j) = double(j);
  const CovarianceCache cache2 = precompute_pixel_covariance(all_const);
  Rng srng2(43);
  CHECK_THROWS_AS(select_features(y, all_const, cache2, 1, srng2), DegenerateError);
}

TEST_CASE("selection reads each pixel column a bounded number of times", "[selection]") {
  const std::size_t n = 80, p = 12, f = 5;
  const DenseMatrix m = random_matrix(n, p, 44);
  const auto y = random_targets(n, 6, 45);
  const CovarianceCache cache = precompute_pixel_covariance(m);

  const CountingMatrix counted(m);
  Rng rng(46);
  const auto pairs = select_features(y, counted, cache, f, rng);
  REQUIRE(pairs.size() == f);
  for (std::size_t j = 0; j < p; ++j) {
    CHECK(counted.col_reads[j] >= 1);
    // One pass per projection round; anything quadratic in p would blow
    // well past this bound.
    CHECK(counted.col_reads[j] <= 2 * f * n);
  }
}
