#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "scatter/linalg.hpp"
#include "scatter/nets.hpp"
#include "scatter/rng.hpp"

using namespace scatter;

namespace {

Layer make_test_layer(int in, int out, bool bias, Act act) {
  Layer l;
  l.in = in;
  l.out = out;
  l.has_bias = bias;
  l.act = act;
  l.w = Matrix(out, in);
  if (bias) l.b = Vec(out, 0.0);
  return l;
}

void randomize(Rng& rng, MlpNet& net, double scale) {
  for (Layer& l : net.layers) {
    for (double& w : l.w.data()) w = scale * (2.0 * rng.uniform() - 1.0);
    for (double& b : l.b) b = scale * (2.0 * rng.uniform() - 1.0);
  }
  ++net.version;
}

int act_code(Act a) {
  switch (a) {
    case Act::sigmoid: return 0;
    case Act::relu: return 1;
    case Act::leaky_relu: return 2;
    case Act::ramp: return 3;
    case Act::identity: return 4;
  }
  return 4;
}

std::vector<oracle::NaiveLayer> to_naive(const MlpNet& net) {
  std::vector<oracle::NaiveLayer> out;
  for (const Layer& l : net.layers) {
    oracle::NaiveLayer nl;
    nl.w = l.w;
    if (l.has_bias) nl.b = l.b;
    nl.act = act_code(l.act);
    out.push_back(std::move(nl));
  }
  return out;
}

Vec row_vec(const Matrix& m, int i) {
  Vec v(m.cols());
  for (int j = 0; j < m.cols(); ++j) v[j] = m(i, j);
  return v;
}

double scalar_output(const MlpNet& net, const Vec& x) {
  Matrix in(1, static_cast<int>(x.size()));
  for (size_t j = 0; j < x.size(); ++j) in(0, static_cast<int>(j)) = x[j];
  return forward(net, in).output()(0, 0);
}

// Collects every parameter of the net as (layer, is_bias, index) triples so
// finite-difference loops can walk them uniformly.
struct ParamRef {
  int layer;
  bool bias;
  int index;
};

std::vector<ParamRef> all_params(const MlpNet& net) {
  std::vector<ParamRef> refs;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    for (size_t i = 0; i < net.layers[l].w.data().size(); ++i)
      refs.push_back({static_cast<int>(l), false, static_cast<int>(i)});
    if (net.layers[l].has_bias)
      for (size_t i = 0; i < net.layers[l].b.size(); ++i)
        refs.push_back({static_cast<int>(l), true, static_cast<int>(i)});
  }
  return refs;
}

double& param_at(MlpNet& net, const ParamRef& r) {
  return r.bias ? net.layers[r.layer].b[r.index] : net.layers[r.layer].w.data()[r.index];
}

// Solve A x = b for small dense A by Gaussian elimination with partial
// pivoting; independent of the library's factorizations.
Vec dense_solve(Matrix a, Vec b) {
  const int n = a.rows();
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (piv != c) {
      for (int j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
      std::swap(b[c], b[piv]);
    }
    for (int r = c + 1; r < n; ++r) {
      double f = a(r, c) / a(c, c);
      for (int j = c; j < n; ++j) a(r, j) -= f * a(c, j);
      b[r] -= f * b[c];
    }
  }
  Vec x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int j = r + 1; j < n; ++j) s -= a(r, j) * x[j];
    x[r] = s / a(r, r);
  }
  return x;
}

}  // namespace

TEST_CASE("zero-parameter sigmoid nets output exactly one half") {
  for (auto preset : {DiscriminatorPreset::t1(3, 5), DiscriminatorPreset::t3(4, 6),
                      DiscriminatorPreset::practical(4)}) {
    MlpNet net = build_discriminator(preset);
    Matrix x(3, preset.p);
    Rng rng(2);
    for (double& v : x.data()) v = rng.normal();
    ForwardCache c = forward(net, x);
    for (int i = 0; i < 3; ++i) CHECK(c.output()(i, 0) == 0.5);
  }
}

TEST_CASE("single hidden sigmoid unit matches the closed form") {
  MlpNet net;
  net.layers.push_back(make_test_layer(2, 1, true, Act::sigmoid));
  net.layers.push_back(make_test_layer(1, 1, false, Act::sigmoid));
  net.layers[0].w(0, 0) = 0.7;
  net.layers[0].w(0, 1) = -1.1;
  net.layers[0].b[0] = 0.3;
  net.layers[1].w(0, 0) = 2.5;

  const double x0 = 0.4, x1 = -0.9;
  double inner = 1.0 / (1.0 + std::exp(-(0.7 * x0 - 1.1 * x1 + 0.3)));
  double expected = 1.0 / (1.0 + std::exp(-2.5 * inner));
  CHECK(scalar_output(net, {x0, x1}) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("forward agrees with a naive per-row reimplementation") {
  Rng rng(314);
  std::vector<DiscriminatorPreset> presets = {
      DiscriminatorPreset::t1(4, 7, 2.0),
      DiscriminatorPreset::t2(5, 6, 1.5, true),
      DiscriminatorPreset::t3(3, 8),
      DiscriminatorPreset::t4(4, 6, 3, 2.0, 1.0, true),
      DiscriminatorPreset::deep(4, 10, 2, 5.0, 3.0, false),
      DiscriminatorPreset::deep(3, 6, 1, 4.0, 2.0, true),
      DiscriminatorPreset::practical(5),
  };
  for (const auto& preset : presets) {
    MlpNet net = init_net(rng, preset, 0.4);
    auto naive = to_naive(net);
    Matrix x(6, preset.p);
    for (double& v : x.data()) v = 2.0 * rng.normal();
    ForwardCache c = forward(net, x);
    for (int i = 0; i < x.rows(); ++i) {
      Vec ref = oracle::naive_forward(naive, row_vec(x, i));
      REQUIRE(ref.size() == 1);
      CHECK(c.output()(i, 0) == doctest::Approx(ref[0]).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward rejects mismatched input width") {
  MlpNet net = build_discriminator(DiscriminatorPreset::t1(3, 4));
  CHECK_THROWS_AS(forward(net, Matrix(2, 4)), std::invalid_argument);
}

TEST_CASE("backward matches finite differences on a mixed-activation net") {
  MlpNet net;
  net.layers.push_back(make_test_layer(3, 4, true, Act::leaky_relu));
  net.layers.push_back(make_test_layer(4, 2, true, Act::sigmoid));
  net.layers.push_back(make_test_layer(2, 1, false, Act::sigmoid));
  Rng rng(99);
  randomize(rng, net, 0.8);

  Matrix x(4, 3);
  for (double& v : x.data()) v = rng.normal();
  // Weighted sum of outputs keeps the upstream per-row structure non-trivial.
  Vec weights = {1.0, -0.5, 2.0, 0.25};
  auto objective = [&](const MlpNet& n) {
    ForwardCache c = forward(n, x);
    double s = 0.0;
    for (int i = 0; i < x.rows(); ++i) s += weights[i] * c.output()(i, 0);
    return s;
  };

  ForwardCache cache = forward(net, x);
  Matrix upstream(x.rows(), 1);
  for (int i = 0; i < x.rows(); ++i) upstream(i, 0) = weights[i];
  NetGrads g = backward(net, cache, upstream);

  const double h = 1e-5;
  for (const ParamRef& r : all_params(net)) {
    MlpNet plus = net, minus = net;
    param_at(plus, r) += h;
    param_at(minus, r) -= h;
    double fd = (objective(plus) - objective(minus)) / (2.0 * h);
    double an = r.bias ? g.b[r.layer][r.index] : g.w[r.layer].data()[r.index];
    CHECK(an == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
  }

  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) {
      Matrix xp = x, xm = x;
      xp(i, j) += h;
      xm(i, j) -= h;
      auto eval = [&](const Matrix& xx) {
        ForwardCache c = forward(net, xx);
        double s = 0.0;
        for (int r = 0; r < xx.rows(); ++r) s += weights[r] * c.output()(r, 0);
        return s;
      };
      double fd = (eval(xp) - eval(xm)) / (2.0 * h);
      CHECK(g.input(i, j) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("input gradient of a linear layer is w transpose times upstream") {
  MlpNet net;
  net.layers.push_back(make_test_layer(3, 2, false, Act::identity));
  Rng rng(7);
  randomize(rng, net, 1.0);
  Matrix x(1, 3);
  for (double& v : x.data()) v = rng.normal();
  ForwardCache c = forward(net, x);
  Matrix upstream(1, 2);
  upstream(0, 0) = 1.5;
  upstream(0, 1) = -2.0;
  NetGrads g = backward(net, c, upstream);
  for (int j = 0; j < 3; ++j) {
    double expect = upstream(0, 0) * net.layers[0].w(0, j) + upstream(0, 1) * net.layers[0].w(1, j);
    CHECK(g.input(0, j) == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("leaky relu backward applies the 0.2 slope on negative preactivations") {
  MlpNet net;
  net.layers.push_back(make_test_layer(1, 1, false, Act::leaky_relu));
  net.layers[0].w(0, 0) = 1.0;
  Matrix x(2, 1);
  x(0, 0) = -3.0;
  x(1, 0) = 2.0;
  ForwardCache c = forward(net, x);
  CHECK(c.output()(0, 0) == doctest::Approx(-0.6));
  CHECK(c.output()(1, 0) == doctest::Approx(2.0));
  Matrix upstream(2, 1);
  upstream(0, 0) = 1.0;
  upstream(1, 0) = 1.0;
  NetGrads g = backward(net, c, upstream);
  CHECK(g.input(0, 0) == doctest::Approx(0.2));
  CHECK(g.input(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("backward rejects a stale cache after parameters change") {
  MlpNet net = build_discriminator(DiscriminatorPreset::t1(2, 3));
  Rng rng(5);
  randomize(rng, net, 0.5);
  Matrix x(2, 2);
  for (double& v : x.data()) v = rng.normal();
  ForwardCache c = forward(net, x);
  randomize(rng, net, 0.5);
  CHECK_THROWS_AS(backward(net, c, Matrix(2, 1)), std::runtime_error);
}

TEST_CASE("apply_update adds step times gradients and bumps the version") {
  MlpNet net;
  net.layers.push_back(make_test_layer(2, 2, true, Act::identity));
  Rng rng(21);
  randomize(rng, net, 1.0);
  MlpNet before = net;

  NetGrads g;
  g.w.resize(1);
  g.b.resize(1);
  g.w[0] = Matrix(2, 2);
  g.w[0](0, 0) = 1.0;
  g.w[0](1, 1) = -2.0;
  g.b[0] = {0.5, 0.25};
  uint64_t v0 = net.version;
  apply_update(net, g, -0.1);
  CHECK(net.version == v0 + 1);
  CHECK(net.layers[0].w(0, 0) == doctest::Approx(before.layers[0].w(0, 0) - 0.1));
  CHECK(net.layers[0].w(1, 1) == doctest::Approx(before.layers[0].w(1, 1) + 0.2));
  CHECK(net.layers[0].w(0, 1) == before.layers[0].w(0, 1));
  CHECK(net.layers[0].b[0] == doctest::Approx(before.layers[0].b[0] - 0.05));
  CHECK(net.layers[0].b[1] == doctest::Approx(before.layers[0].b[1] - 0.025));
}

TEST_CASE("init_params layer statistics and determinism") {
  const double sigma1 = 0.05;
  DiscriminatorPreset preset = DiscriminatorPreset::practical(20);
  Rng seed_a(88);
  MlpNet net = init_net(seed_a, preset, sigma1);

  // First layer: mean near zero, sample variance near sigma1^2 (800 draws).
  const auto& w0 = net.layers[0].w.data();
  double mean = 0.0, var = 0.0;
  for (double w : w0) mean += w;
  mean /= static_cast<double>(w0.size());
  for (double w : w0) var += (w - mean) * (w - mean);
  var /= static_cast<double>(w0.size() - 1);
  CHECK(std::abs(mean) <= 4.0 * sigma1 / std::sqrt(static_cast<double>(w0.size())));
  CHECK(var >= 0.80 * sigma1 * sigma1);
  CHECK(var <= 1.25 * sigma1 * sigma1);

  // Later layers: Xavier uniform, bounded by sqrt(6/(fan_in+fan_out)) and not
  // degenerate; all biases zero at init.
  for (size_t l = 1; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    double bound = std::sqrt(6.0 / (layer.in + layer.out));
    double maxabs = 0.0;
    for (double w : layer.w.data()) {
      CHECK(std::abs(w) <= bound);
      maxabs = std::max(maxabs, std::abs(w));
    }
    CHECK(maxabs > 0.5 * bound);
  }
  for (const Layer& layer : net.layers)
    if (layer.has_bias)
      for (double b : layer.b) CHECK(b == 0.0);

  Rng seed_b(88);
  MlpNet again = init_net(seed_b, preset, sigma1);
  for (size_t l = 0; l < net.layers.size(); ++l)
    for (size_t i = 0; i < net.layers[l].w.data().size(); ++i)
      CHECK(net.layers[l].w.data()[i] == again.layers[l].w.data()[i]);
}

TEST_CASE("discriminator skeletons have the documented shapes") {
  MlpNet t1 = build_discriminator(DiscriminatorPreset::t1(3, 5, 2.0));
  REQUIRE(t1.layers.size() == 2);
  CHECK(t1.layers[0].in == 3);
  CHECK(t1.layers[0].out == 5);
  CHECK(t1.layers[0].act == Act::sigmoid);
  CHECK_FALSE(t1.layers[0].has_bias);
  CHECK(t1.layers[1].out == 1);
  CHECK(t1.layers[1].act == Act::sigmoid);
  CHECK(t1.layers[1].constraint == ConstraintKind::l1_rows);
  CHECK(t1.layers[1].cap == 2.0);

  MlpNet t2 = build_discriminator(DiscriminatorPreset::t2(4, 6, 1.5, true));
  REQUIRE(t2.layers.size() == 2);
  CHECK(t2.layers[0].act == Act::relu);
  CHECK(t2.layers[0].constraint == ConstraintKind::l2_rows);
  CHECK(t2.layers[0].cap == 1.0);
  CHECK_FALSE(t2.layers[0].has_bias);

  MlpNet t3 = build_discriminator(DiscriminatorPreset::t3(4, 6));
  CHECK(t3.layers[0].has_bias);
  CHECK(t3.layers[0].act == Act::sigmoid);
  CHECK(t3.layers[1].constraint == ConstraintKind::none);

  MlpNet t4 = build_discriminator(DiscriminatorPreset::t4(4, 7, 3, 2.0, 1.0, true));
  REQUIRE(t4.layers.size() == 3);
  CHECK(t4.layers[0].act == Act::relu);
  CHECK(t4.layers[0].out == 7);
  CHECK(t4.layers[1].act == Act::sigmoid);
  CHECK(t4.layers[1].out == 3);
  CHECK(t4.layers[1].constraint == ConstraintKind::l1_rows);
  CHECK(t4.layers[2].out == 1);
  CHECK_THROWS_AS(DiscriminatorPreset::t4(4, 7, 1, 2.0, 1.0, true), std::invalid_argument);

  MlpNet deep = build_discriminator(DiscriminatorPreset::deep(5, 8, 3, 4.0, 2.0, true));
  REQUIRE(deep.layers.size() == 5);
  CHECK(deep.layers[0].act == Act::ramp);
  CHECK(deep.layers[0].has_bias);
  for (int l = 1; l <= 3; ++l) CHECK(deep.layers[l].act == Act::relu);
  CHECK(deep.layers[4].act == Act::sigmoid);
  CHECK_THROWS_AS(DiscriminatorPreset::deep(5, 8, 0, 4.0, 2.0, false), std::invalid_argument);

  MlpNet pr = build_discriminator(DiscriminatorPreset::practical(7));
  REQUIRE(pr.layers.size() == 3);
  CHECK(pr.layers[0].out == 14);
  CHECK(pr.layers[0].act == Act::leaky_relu);
  CHECK(pr.layers[1].out == 3);
  CHECK(pr.layers[1].act == Act::sigmoid);
  CHECK(pr.layers[2].out == 1);
  for (const Layer& l : pr.layers) CHECK(l.has_bias);

  MlpNet pr1 = build_discriminator(DiscriminatorPreset::practical(1));
  CHECK(pr1.layers[1].out == 1);

  MlpNet xi = build_xi_net(48);
  REQUIRE(xi.layers.size() == 4);
  CHECK(xi.layers[0].in == 48);
  CHECK(xi.layers[0].out == 32);
  CHECK(xi.layers[1].out == 24);
  CHECK(xi.layers[2].out == 12);
  CHECK(xi.layers[3].out == 1);
  for (int l = 0; l < 3; ++l) CHECK(xi.layers[l].act == Act::leaky_relu);
  CHECK(xi.layers[3].act == Act::identity);
  for (const Layer& l : xi.layers) CHECK(l.has_bias);
}

TEST_CASE("l1 ball projection matches a dense 2-d search") {
  Vec inside = {0.5, -0.8};
  Vec kept = project_l1_ball(inside, 2.0);
  CHECK(kept[0] == inside[0]);
  CHECK(kept[1] == inside[1]);

  Vec projected = project_l1_ball({3.0, -1.0}, 2.0);
  Vec ref = oracle::brute_l1_project_2d({3.0, -1.0}, 2.0);
  CHECK(projected[0] == doctest::Approx(ref[0]).epsilon(1e-4));
  CHECK(projected[1] == doctest::Approx(ref[1]).scale(1.0).epsilon(1e-4));
  CHECK(projected[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(projected[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

  Rng rng(606);
  for (int rep = 0; rep < 3; ++rep) {
    Vec v = {3.0 * rng.normal(), 3.0 * rng.normal()};
    Vec got = project_l1_ball(v, 1.7);
    Vec want = oracle::brute_l1_project_2d(v, 1.7);
    CHECK(got[0] == doctest::Approx(want[0]).scale(1.0).epsilon(2e-5));
    CHECK(got[1] == doctest::Approx(want[1]).scale(1.0).epsilon(2e-5));
  }
}

TEST_CASE("l1 ball projection satisfies the soft-threshold structure") {
  Rng rng(909);
  const double radius = 1.3;
  for (int rep = 0; rep < 20; ++rep) {
    Vec v(6);
    for (double& x : v) x = 2.0 * rng.normal();
    double l1 = 0.0;
    for (double x : v) l1 += std::abs(x);
    Vec w = project_l1_ball(v, radius);

    double wl1 = 0.0;
    for (double x : w) wl1 += std::abs(x);
    CHECK(wl1 <= radius + 1e-9);
    if (l1 <= radius) {
      for (size_t j = 0; j < v.size(); ++j) CHECK(w[j] == v[j]);
      continue;
    }
    CHECK(wl1 == doctest::Approx(radius).epsilon(1e-9));

    // Recover the threshold from any surviving coordinate and check every
    // coordinate against sign(v) * max(|v| - theta, 0).
    double theta = -1.0;
    for (size_t j = 0; j < v.size(); ++j)
      if (w[j] != 0.0) theta = std::abs(v[j]) - std::abs(w[j]);
    REQUIRE(theta >= -1e-12);
    for (size_t j = 0; j < v.size(); ++j) {
      double expect = std::abs(v[j]) > theta ? std::abs(v[j]) - theta : 0.0;
      CHECK(std::abs(w[j]) == doctest::Approx(expect).scale(1.0).epsilon(1e-9));
      if (w[j] != 0.0) CHECK(w[j] * v[j] > 0.0);
    }
  }
}

TEST_CASE("project_constraints caps rows and is idempotent") {
  MlpNet net;
  net.layers.push_back(make_test_layer(2, 2, false, Act::identity));
  net.layers.push_back(make_test_layer(2, 1, false, Act::identity));
  net.layers[0].constraint = ConstraintKind::l2_rows;
  net.layers[0].cap = 1.0;
  net.layers[1].constraint = ConstraintKind::l1_rows;
  net.layers[1].cap = 2.0;

  net.layers[0].w(0, 0) = 1.2;
  net.layers[0].w(0, 1) = -1.6;  // norm 2, over the unit cap
  net.layers[0].w(1, 0) = 0.3;
  net.layers[0].w(1, 1) = 0.4;  // norm 0.5, already feasible
  net.layers[1].w(0, 0) = 3.0;
  net.layers[1].w(0, 1) = -1.0;

  project_constraints(net);
  CHECK(net.layers[0].w(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(net.layers[0].w(0, 1) == doctest::Approx(-0.8).epsilon(1e-12));
  CHECK(net.layers[0].w(1, 0) == 0.3);
  CHECK(net.layers[0].w(1, 1) == 0.4);
  CHECK(net.layers[1].w(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(net.layers[1].w(0, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

  MlpNet once = net;
  project_constraints(net);
  for (size_t l = 0; l < net.layers.size(); ++l)
    for (size_t i = 0; i < net.layers[l].w.data().size(); ++i)
      CHECK(net.layers[l].w.data()[i] == once.layers[l].w.data()[i]);
}

TEST_CASE("linear generator with identity scale reproduces its noise") {
  Matrix a = Matrix::identity(3);
  GeneratorPreset gen = GeneratorPreset::g1(a);
  Rng rng(41);
  GenerateCache cache;
  Matrix x = generate(gen, rng, 50, cache);
  REQUIRE(cache.z.rows() == 50);
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < 3; ++j) CHECK(x(i, j) == cache.z(i, j));
}

TEST_CASE("location generator with zero scale emits the location") {
  Matrix a(2, 2);
  Vec theta = {1.5, -2.0};
  GeneratorPreset gen = GeneratorPreset::g3(a, theta);
  Rng rng(42);
  GenerateCache cache;
  Matrix x = generate(gen, rng, 10, cache);
  for (int i = 0; i < x.rows(); ++i) {
    CHECK(x(i, 0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(x(i, 1) == doctest::Approx(-2.0).epsilon(1e-15));
  }
}

TEST_CASE("student t base produces heavier tails than gaussian base") {
  Matrix a = Matrix::identity(1);
  GeneratorPreset gg = GeneratorPreset::g1(a);
  GeneratorPreset gt = GeneratorPreset::g1(a, GeneratorPreset::Base::student_t, 2.0);
  Rng r1(7), r2(7);
  GenerateCache c1, c2;
  Matrix xg = generate(gg, r1, 20000, c1);
  Matrix xt = generate(gt, r2, 20000, c2);
  auto frac_above = [](const Matrix& m, double cut) {
    int k = 0;
    for (int i = 0; i < m.rows(); ++i)
      if (std::abs(m(i, 0)) > cut) ++k;
    return static_cast<double>(k) / m.rows();
  };
  CHECK(frac_above(xt, 4.0) > 3.0 * frac_above(xg, 4.0) + 0.005);
}

TEST_CASE("elliptical generator with frozen unit radial lands on the ellipsoid") {
  Rng seed(1234);
  Matrix a(3, 3);
  Rng arng(555);
  for (double& v : a.data()) v = arng.normal();
  for (int j = 0; j < 3; ++j) a(j, j) += 3.0;

  GeneratorPreset gen = GeneratorPreset::g2(a, seed);
  // Freeze the radial net at constant output 1: single identity layer with
  // zero weights and unit bias.
  MlpNet frozen;
  frozen.layers.push_back(make_test_layer(gen.xi_input_dim, 1, true, Act::identity));
  frozen.layers[0].b[0] = 1.0;
  gen.xi_net = frozen;

  Rng rng(77);
  GenerateCache cache;
  Matrix x = generate(gen, rng, 40, cache);
  for (int i = 0; i < x.rows(); ++i) {
    CHECK(cache.xi[i] == 1.0);
    Vec u = dense_solve(a, row_vec(x, i));
    double n2 = 0.0;
    for (double v : u) n2 += v * v;
    CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("elliptical generator radials are nonnegative") {
  Rng seed(31);
  GeneratorPreset gen = GeneratorPreset::g2(Matrix::identity(4), seed);
  Rng rng(32);
  GenerateCache cache;
  generate(gen, rng, 200, cache);
  REQUIRE(cache.xi.size() == 200);
  for (double v : cache.xi) CHECK(v >= 0.0);
}

TEST_CASE("linear generator gradient is the sum of outer products") {
  Matrix a(2, 2);
  a(0, 0) = 1.0;
  a(0, 1) = 0.5;
  a(1, 0) = -0.25;
  a(1, 1) = 2.0;
  GeneratorPreset gen = GeneratorPreset::g1(a);
  Rng rng(11);
  GenerateCache cache;
  generate(gen, rng, 5, cache);

  Matrix upstream(5, 2);
  Rng urng(12);
  for (double& v : upstream.data()) v = urng.normal();
  GeneratorGrads g = generator_backward(gen, cache, upstream);

  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      double expect = 0.0;
      for (int i = 0; i < 5; ++i) expect += upstream(i, r) * cache.z(i, c);
      CHECK(g.a(r, c) == doctest::Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("location gradient is the column sum of upstream") {
  Matrix a = Matrix::identity(3);
  GeneratorPreset gen = GeneratorPreset::g3(a, Vec{0.1, 0.2, 0.3});
  Rng rng(13);
  GenerateCache cache;
  generate(gen, rng, 7, cache);
  Matrix upstream(7, 3);
  Rng urng(14);
  for (double& v : upstream.data()) v = urng.normal();
  GeneratorGrads g = generator_backward(gen, cache, upstream);
  for (int j = 0; j < 3; ++j) {
    double expect = 0.0;
    for (int i = 0; i < 7; ++i) expect += upstream(i, j);
    CHECK(g.theta[j] == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("elliptical generator gradients match finite differences") {
  // Reconstructs the generated sample from the cache as a deterministic
  // function of (a, xi parameters), so central differences are exact.
  Rng seed(222);
  Matrix a(2, 2);
  a(0, 0) = 1.5;
  a(0, 1) = 0.3;
  a(1, 0) = -0.2;
  a(1, 1) = 0.9;
  Vec theta = {0.4, -0.7};
  GeneratorPreset gen = GeneratorPreset::g4(a, theta, seed);

  Rng rng(223);
  GenerateCache cache;
  generate(gen, rng, 6, cache);

  Matrix upstream(6, 2);
  Rng urng(224);
  for (double& v : upstream.data()) v = urng.normal();
  GeneratorGrads g = generator_backward(gen, cache, upstream);

  auto objective = [&](const GeneratorPreset& gg) {
    ForwardCache f = forward(gg.xi_net, cache.xi_input);
    double s = 0.0;
    for (int i = 0; i < 6; ++i) {
      double xi = std::abs(f.output()(i, 0));
      for (int r = 0; r < 2; ++r) {
        double val = gg.theta[r];
        for (int c = 0; c < 2; ++c) val += xi * gg.a(r, c) * cache.u(i, c);
        s += upstream(i, r) * val;
      }
    }
    return s;
  };

  const double h = 1e-6;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      GeneratorPreset plus = gen, minus = gen;
      plus.a(r, c) += h;
      minus.a(r, c) -= h;
      double fd = (objective(plus) - objective(minus)) / (2.0 * h);
      CHECK(g.a(r, c) == doctest::Approx(fd).epsilon(2e-4).scale(1.0));
    }
  for (int j = 0; j < 2; ++j) {
    GeneratorPreset plus = gen, minus = gen;
    plus.theta[j] += h;
    minus.theta[j] -= h;
    double fd = (objective(plus) - objective(minus)) / (2.0 * h);
    CHECK(g.theta[j] == doctest::Approx(fd).epsilon(2e-4).scale(1.0));
  }
  for (size_t l = 0; l < gen.xi_net.layers.size(); ++l) {
    const auto& wdata = gen.xi_net.layers[l].w.data();
    size_t stride = std::max<size_t>(1, wdata.size() / 7);
    for (size_t i = 0; i < wdata.size(); i += stride) {
      GeneratorPreset plus = gen, minus = gen;
      plus.xi_net.layers[l].w.data()[i] += h;
      ++plus.xi_net.version;
      minus.xi_net.layers[l].w.data()[i] -= h;
      ++minus.xi_net.version;
      double fd = (objective(plus) - objective(minus)) / (2.0 * h);
      CHECK(g.xi.w[l].data()[i] == doctest::Approx(fd).epsilon(5e-4).scale(1e-3));
    }
  }
}

TEST_CASE("generator_backward rejects a cache of the wrong batch size") {
  GeneratorPreset gen = GeneratorPreset::g1(Matrix::identity(2));
  Rng rng(3);
  GenerateCache cache;
  generate(gen, rng, 4, cache);
  CHECK_THROWS_AS(generator_backward(gen, cache, Matrix(5, 2)), std::runtime_error);
}

TEST_CASE("apply_generator_update touches scale, location, and radial net") {
  Rng seed(404);
  GeneratorPreset gen = GeneratorPreset::g4(Matrix::identity(2), Vec{0.0, 0.0}, seed);
  GeneratorGrads g;
  g.a = Matrix(2, 2);
  g.a(0, 1) = 2.0;
  g.theta = {1.0, -1.0};
  g.xi.w.resize(gen.xi_net.layers.size());
  g.xi.b.resize(gen.xi_net.layers.size());
  for (size_t l = 0; l < gen.xi_net.layers.size(); ++l) {
    g.xi.w[l] = Matrix(gen.xi_net.layers[l].out, gen.xi_net.layers[l].in);
    g.xi.b[l] = Vec(gen.xi_net.layers[l].out, 0.0);
  }
  g.xi.w[0](0, 0) = 3.0;
  double before = gen.xi_net.layers[0].w(0, 0);
  apply_generator_update(gen, g, 0.5);
  CHECK(gen.a(0, 1) == doctest::Approx(1.0));
  CHECK(gen.a(0, 0) == doctest::Approx(1.0));
  CHECK(gen.theta[0] == doctest::Approx(0.5));
  CHECK(gen.theta[1] == doctest::Approx(-0.5));
  CHECK(gen.xi_net.layers[0].w(0, 0) == doctest::Approx(before + 1.5));
}

TEST_CASE("network json round trip preserves everything") {
  Rng rng(71);
  MlpNet net = init_net(rng, DiscriminatorPreset::t2(3, 4, 1.5, true), 0.3);
  std::string text = net_to_json(net);
  MlpNet back = net_from_json(text);
  REQUIRE(back.layers.size() == net.layers.size());
  for (size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& a = net.layers[l];
    const Layer& b = back.layers[l];
    CHECK(a.in == b.in);
    CHECK(a.out == b.out);
    CHECK(a.has_bias == b.has_bias);
    CHECK(a.act == b.act);
    CHECK(a.constraint == b.constraint);
    CHECK(a.cap == b.cap);
    for (size_t i = 0; i < a.w.data().size(); ++i) CHECK(a.w.data()[i] == b.w.data()[i]);
    for (size_t i = 0; i < a.b.size(); ++i) CHECK(a.b[i] == b.b[i]);
  }
  Matrix x(3, 3);
  for (double& v : x.data()) v = rng.normal();
  ForwardCache ca = forward(net, x);
  ForwardCache cb = forward(back, x);
  for (int i = 0; i < 3; ++i) CHECK(ca.output()(i, 0) == cb.output()(i, 0));
}
