#include <doctest.h>

#include <cmath>
#include <vector>

#include "splitbench/rng.hpp"
#include "splitbench/tensor.hpp"

using namespace splitbench;

namespace {

// Brute-force sample distance correlation over explicit distance matrices,
// written independently of the library path it checks.
double dcor_oracle(const std::vector<std::vector<double>>& x,
                   const std::vector<std::vector<double>>& z) {
  const int n = static_cast<int>(x.size());
  auto dist_matrix = [n](const std::vector<std::vector<double>>& v) {
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < v[i].size(); ++k) {
          acc += (v[i][k] - v[j][k]) * (v[i][k] - v[j][k]);
        }
        d[i][j] = std::sqrt(acc);
      }
    }
    return d;
  };
  auto center = [n](std::vector<std::vector<double>> d) {
    std::vector<double> row(n, 0.0), col(n, 0.0);
    double grand = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        row[i] += d[i][j];
        col[j] += d[i][j];
        grand += d[i][j];
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        d[i][j] += grand / (n * n) - row[i] / n - col[j] / n;
      }
    }
    return d;
  };
  const auto a = center(dist_matrix(x));
  const auto b = center(dist_matrix(z));
  double dcov2 = 0.0, dvarx2 = 0.0, dvarz2 = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      dcov2 += a[i][j] * b[i][j];
      dvarx2 += a[i][j] * a[i][j];
      dvarz2 += b[i][j] * b[i][j];
    }
  }
  dcov2 /= n * n;
  dvarx2 /= n * n;
  dvarz2 /= n * n;
  if (dvarx2 <= 0.0 || dvarz2 <= 0.0) return 0.0;
  return std::sqrt(std::max(dcov2, 0.0)) / std::sqrt(std::sqrt(dvarx2) * std::sqrt(dvarz2));
}

Tensor to_tensor(const std::vector<std::vector<double>>& v) {
  const int n = static_cast<int>(v.size());
  const int k = static_cast<int>(v[0].size());
  std::vector<double> flat;
  for (const auto& row : v) flat.insert(flat.end(), row.begin(), row.end());
  return Tensor({n, k}, std::move(flat));
}

}  // namespace

TEST_CASE("dcor(x, x) is 1 for non-constant x") {
  Tensor x({3, 2}, {0, 0, 1, 2, -1, 3});
  CHECK(distance_correlation(x, x).item() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dcor against a constant argument is 0 by convention") {
  Tensor x({3, 2}, {0, 0, 1, 2, -1, 3});
  Tensor z({3, 2}, {5, 5, 5, 5, 5, 5});
  CHECK(distance_correlation(x, z).item() == 0.0);
}

TEST_CASE("dcor needs at least two samples") {
  Tensor x({1, 2}, {0, 1});
  CHECK_THROWS_AS(distance_correlation(x, x), std::invalid_argument);
}

TEST_CASE("dcor matches the brute-force oracle on a 4-sample 2-d instance") {
  std::vector<std::vector<double>> x = {{0.2, -1.0}, {1.5, 0.3}, {-0.7, 0.9}, {0.0, 2.0}};
  std::vector<std::vector<double>> z = {{1.0, 0.0}, {0.5, -0.5}, {2.0, 1.0}, {-1.0, 0.2}};
  const double got = distance_correlation(to_tensor(x), to_tensor(z)).item();
  CHECK(got == doctest::Approx(dcor_oracle(x, z)).epsilon(1e-8));
}

TEST_CASE("dcor matches the oracle on 200 random small instances") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.index(5));
    const int kx = 1 + static_cast<int>(rng.index(4));
    const int kz = 1 + static_cast<int>(rng.index(4));
    std::vector<std::vector<double>> x(n, std::vector<double>(kx));
    std::vector<std::vector<double>> z(n, std::vector<double>(kz));
    for (auto& row : x) {
      for (double& v : row) v = rng.uniform(-2.0, 2.0);
    }
    for (auto& row : z) {
      for (double& v : row) v = rng.uniform(-2.0, 2.0);
    }
    const double want = dcor_oracle(x, z);
    const double got = distance_correlation(to_tensor(x), to_tensor(z)).item();
    REQUIRE(got == doctest::Approx(want).epsilon(1e-8));
    REQUIRE(got >= 0.0);
    REQUIRE(got <= 1.0 + 1e-12);
  }
}

TEST_CASE("property: dcor is symmetric and translation invariant") {
  Rng rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.index(3));
    std::vector<double> xv(n * 2), zv(n * 3);
    for (double& v : xv) v = rng.uniform(-1, 1);
    for (double& v : zv) v = rng.uniform(-1, 1);
    Tensor x({n, 2}, xv);
    Tensor z({n, 3}, zv);
    const double a = distance_correlation(x, z).item();
    const double b = distance_correlation(z, x).item();
    CHECK(a == doctest::Approx(b).epsilon(1e-12));

    const double shift = rng.uniform(-5, 5);
    std::vector<double> shifted = zv;
    for (double& v : shifted) v += shift;
    Tensor z2({n, 3}, shifted);
    CHECK(distance_correlation(x, z2).item() == doctest::Approx(a).epsilon(1e-9));
  }
}

TEST_CASE("dcor is differentiable w.r.t. its second argument") {
  Rng rng(41);
  std::vector<double> xv(4 * 2), zv(4 * 2);
  for (double& v : xv) v = rng.uniform(-1, 1);
  for (double& v : zv) v = rng.uniform(-1, 1);
  Tensor x({4, 2}, xv);
  Tensor z({4, 2}, zv, true);

  Tensor loss = distance_correlation(x, z);
  loss.backward();
  REQUIRE(z.has_grad());
  const std::vector<double> ad = z.grad();

  const double h = 1e-5;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double orig = z.values()[i];
    z.values()[i] = orig + h;
    const double up = distance_correlation(x, z).item();
    z.values()[i] = orig - h;
    const double dn = distance_correlation(x, z).item();
    z.values()[i] = orig;
    const double fd = (up - dn) / (2 * h);
    CHECK(std::abs(ad[i] - fd) <= 1e-4 * std::max({std::abs(fd), std::abs(ad[i]), 1e-3}));
  }
}
