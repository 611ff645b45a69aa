#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scatter/distributions.hpp"
#include "scatter/linalg.hpp"
#include "oracles.hpp"

using namespace scatter;

TEST_CASE("sample_gaussian moments") {
  Rng rng(42);
  Matrix x = sample_gaussian(rng, Vec(2, 0.0), SymMatrix::identity(2), 4096);
  Vec mu = oracle::column_means(x);
  for (double m : mu) CHECK(std::abs(m) <= 4.0 / std::sqrt(4096.0));

  SymMatrix d(2);
  d.set(0, 0, 4.0);
  d.set(1, 1, 1.0);
  Rng rng2(43);
  Matrix y = sample_gaussian(rng2, Vec(2, 0.0), d, 4096);
  SymMatrix cov = oracle::sample_cov(y);
  CHECK(cov(0, 0) >= 3.5);
  CHECK(cov(0, 0) <= 4.5);

  Rng rng3(1);
  Matrix empty = sample_gaussian(rng3, Vec(2, 0.0), SymMatrix::identity(2), 0);
  CHECK(empty.rows() == 0);
}

TEST_CASE("sample_sphere geometry") {
  Rng rng(7);
  Matrix u = sample_sphere(rng, 3, 500);
  for (int i = 0; i < u.rows(); ++i) {
    double n2 = 0.0;
    for (int j = 0; j < 3; ++j) n2 += u(i, j) * u(i, j);
    CHECK(std::abs(std::sqrt(n2) - 1.0) <= 1e-12);
  }

  Rng rng1(8);
  Matrix s1 = sample_sphere(rng1, 1, 4096);
  int pos = 0;
  for (int i = 0; i < s1.rows(); ++i) {
    CHECK(std::abs(std::abs(s1(i, 0)) - 1.0) <= 1e-12);
    if (s1(i, 0) > 0.0) ++pos;
  }
  CHECK(std::abs(pos / 4096.0 - 0.5) <= 0.05);

  Rng rng2(9);
  int big = 8192, r = 4;
  Matrix m = sample_sphere(rng2, r, big);
  Vec mean = oracle::column_means(m);
  CHECK(norm2(mean) <= 4.0 * std::sqrt(static_cast<double>(r)) / std::sqrt(static_cast<double>(big)));
}

TEST_CASE("sample_elliptical constant xi lands on the sphere") {
  Rng rng(11);
  EllipticalModel model = EllipticalModel::custom(Vec(3, 0.0), Matrix::identity(3),
                                                  std::vector<double>(64, 1.0));
  Matrix x = sample_elliptical(rng, model, 64);
  for (int i = 0; i < x.rows(); ++i) {
    double n2 = 0.0;
    for (int j = 0; j < 3; ++j) n2 += x(i, j) * x(i, j);
    CHECK(std::abs(std::sqrt(n2) - 1.0) <= 1e-12);
  }

  Rng rng2(12);
  EllipticalModel bad = EllipticalModel::custom(Vec(2, 0.0), Matrix::identity(2), {1.0, -0.5});
  CHECK_THROWS(sample_elliptical(rng2, bad, 2));
}

TEST_CASE("gaussian-implied elliptical matches the normal law") {
  Rng rng(13);
  EllipticalModel model = EllipticalModel::gaussian(Vec(2, 0.0), Matrix::identity(2));
  Matrix x = sample_elliptical(rng, model, 8192);
  SymMatrix cov = oracle::sample_cov(x);
  CHECK(std::abs(cov(0, 0) - 1.0) <= 0.1);
  CHECK(std::abs(cov(1, 1) - 1.0) <= 0.1);
}

TEST_CASE("t-implied elliptical has t marginals") {
  Rng rng(14);
  EllipticalModel model = EllipticalModel::student_t(Vec(2, 0.0), Matrix::identity(2), 4.0);
  Matrix x = sample_elliptical(rng, model, 20000);
  Vec proj(x.rows());
  for (int i = 0; i < x.rows(); ++i) proj[i] = x(i, 0);
  std::sort(proj.begin(), proj.end());
  double q1 = proj[proj.size() / 4], q3 = proj[3 * proj.size() / 4];
  CHECK(std::abs(q1 - oracle::t_quantile(4.0, 0.25)) <= 0.05);
  CHECK(std::abs(q3 - oracle::t_quantile(4.0, 0.75)) <= 0.05);
}

TEST_CASE("multivariate t basics") {
  Rng rng(15);
  SymMatrix scatter(3);
  scatter.set(0, 0, 2.0);
  scatter.set(1, 1, 1.0);
  scatter.set(2, 2, 0.5);
  scatter.set(0, 1, 0.3);
  Matrix x = sample_mvt(rng, 1e6, Vec(3, 0.0), scatter, 8192);
  SymMatrix cov = oracle::sample_cov(x);
  Matrix diff = cov.to_matrix() - scatter.to_matrix();
  CHECK(operator_norm(SymMatrix::from_full(diff)) <= 0.1);

  Rng rng2(16);
  Matrix y = sample_mvt(rng2, 3.0, Vec(1, 0.0), SymMatrix::identity(1), 50000);
  int exceed = 0;
  for (int i = 0; i < y.rows(); ++i)
    if (std::abs(y(i, 0)) > 3.182) ++exceed;
  CHECK(std::abs(exceed / 50000.0 - 0.05) <= 0.01);

  Rng rng3(17);
  Matrix one = sample_mvt(rng3, 2.5, Vec(2, 1.0), SymMatrix::identity(2), 1);
  CHECK(one.rows() == 1);
  CHECK(std::isfinite(one(0, 0)));
  CHECK(std::isfinite(one(0, 1)));
}

TEST_CASE("contamination mixture") {
  ContaminationScenario clean;
  clean.clean = Component::gaussian(Vec(2, 0.0), SymMatrix::identity(2));
  clean.contaminant = Component::dirac(Vec(2, 5.0));
  clean.epsilon = 0.0;
  Rng rng(18);
  ContaminatedSample s = sample_contaminated(rng, clean, 200);
  for (uint8_t l : s.labels) CHECK(l == 0);

  ContaminationScenario mix = clean;
  mix.epsilon = 0.2;
  Rng rng2(19);
  ContaminatedSample t = sample_contaminated(rng2, mix, 10000);
  int bad = 0;
  for (size_t i = 0; i < t.labels.size(); ++i) {
    if (t.labels[i]) {
      ++bad;
      CHECK(t.data(static_cast<int>(i), 0) == 5.0);
      CHECK(t.data(static_cast<int>(i), 1) == 5.0);
    }
  }
  CHECK(bad >= 1800);
  CHECK(bad <= 2200);
}

TEST_CASE("pair differences cancel the location") {
  Rng rng(20);
  Matrix x = sample_gaussian(rng, Vec(5, 3.0), SymMatrix::identity(5), 2000);
  Rng rng2(21);
  Matrix d = pair_difference_transform(x, rng2, 20000);
  CHECK(d.rows() == 20000);
  SymMatrix cov = oracle::sample_cov(d);
  Matrix gap = cov.to_matrix() - Matrix::identity(5);
  CHECK(operator_norm(SymMatrix::from_full(gap)) <= 0.1);

  Matrix two(2, 2);
  two(0, 0) = 1.0;
  two(0, 1) = 2.0;
  two(1, 0) = 5.0;
  two(1, 1) = -1.0;
  Rng rng3(22);
  Matrix single = pair_difference_transform(two, rng3, 100);
  CHECK(single.rows() == 1);
  CHECK(single(0, 0) == doctest::Approx((1.0 - 5.0) / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(single(0, 1) == doctest::Approx((2.0 + 1.0) / std::sqrt(2.0)).epsilon(1e-15));

  Rng rng4(23);
  Matrix capped = pair_difference_transform(two, rng4, 0);
  CHECK(capped.rows() == 0);

  Rng rng5(24);
  Matrix x100 = sample_gaussian(rng5, Vec(2, 0.0), SymMatrix::identity(2), 100);
  Rng rng6(25);
  Matrix ten = pair_difference_transform(x100, rng6, 10);
  CHECK(ten.rows() == 10);

  Matrix one_row(1, 2);
  Rng rng7(26);
  CHECK_THROWS(pair_difference_transform(one_row, rng7, 10));
}

TEST_CASE("projections of a gaussian-implied elliptical pass a KS check") {
  Rng rng(27);
  Matrix a(3, 3);
  for (double& v : a.data()) v = rng.normal();
  EllipticalModel model = EllipticalModel::gaussian(Vec(3, 0.5), a);
  Rng rng2(28);
  Matrix x = sample_elliptical(rng2, model, 20000);
  SymMatrix aat = gram(a);
  Rng urng(29);
  for (int rep = 0; rep < 5; ++rep) {
    Vec u(3);
    for (double& v : u) v = urng.normal();
    double s2 = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s2 += u[i] * aat(i, j) * u[j];
    double sd = std::sqrt(s2);
    std::vector<double> proj(x.rows());
    for (int i = 0; i < x.rows(); ++i) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j) s += u[j] * (x(i, j) - 0.5);
      proj[i] = s;
    }
    double d = oracle::ks_distance(proj, [sd](double v) { return oracle::normal_cdf(v / sd); });
    CHECK(d < 0.02);
  }
}

TEST_CASE("identical seeds give identical samples") {
  ContaminationScenario sc;
  sc.clean = Component::gaussian(Vec(3, 0.0), SymMatrix::identity(3));
  sc.contaminant = Component::mvt(3.0, Vec(3, 5.0), SymMatrix::identity(3));
  sc.epsilon = 0.1;
  Rng a(999), b(999);
  ContaminatedSample sa = sample_contaminated(a, sc, 500);
  ContaminatedSample sb = sample_contaminated(b, sc, 500);
  CHECK(sa.data.data() == sb.data.data());
  CHECK(sa.labels == sb.labels);
}

TEST_CASE("relu and sigmoid moment identities (population oracle checks)") {
  Rng rng(30);
  const int n = 200000;
  double gamma = 1.7;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += std::max(0.0, gamma * rng.normal());
  acc /= n;
  double closed = gamma / std::sqrt(2.0 * 3.14159265358979323846);
  double se = gamma * 0.6 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(acc - closed) <= 3.0 * se);

  Rng rng2(31);
  double sig = 0.0;
  for (int i = 0; i < n; ++i) sig += 1.0 / (1.0 + std::exp(-2.3 * rng2.normal()));
  sig /= n;
  CHECK(std::abs(sig - 0.5) <= 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("csv export writes a header and one row per observation") {
  Rng rng(32);
  Matrix x = sample_gaussian(rng, Vec(3, 0.0), SymMatrix::identity(3), 7);
  std::string path = "test_distributions_export.csv";
  write_csv(x, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "x0,x1,x2");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 7);
  in.close();
  std::remove(path.c_str());
}
