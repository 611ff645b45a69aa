#include "scatter/nets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "scatter/distributions.hpp"

namespace scatter {

double act_value(Act a, double x) {
  switch (a) {
    case Act::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Act::relu: return x > 0.0 ? x : 0.0;
    case Act::leaky_relu: return x > 0.0 ? x : 0.2 * x;
    case Act::ramp: return std::max(std::min(x + 0.5, 1.0), 0.0);
    case Act::identity: return x;
  }
  throw std::logic_error("act_value: unknown activation");
}

double act_deriv(Act a, double x, double y) {
  switch (a) {
    case Act::sigmoid: return y * (1.0 - y);
    case Act::relu: return x > 0.0 ? 1.0 : 0.0;
    case Act::leaky_relu: return x > 0.0 ? 1.0 : 0.2;
    case Act::ramp: return (x > -0.5 && x < 0.5) ? 1.0 : 0.0;
    case Act::identity: return 1.0;
  }
  throw std::logic_error("act_deriv: unknown activation");
}

std::string act_name(Act a) {
  switch (a) {
    case Act::sigmoid: return "sigmoid";
    case Act::relu: return "relu";
    case Act::leaky_relu: return "leaky_relu";
    case Act::ramp: return "ramp";
    case Act::identity: return "identity";
  }
  return "unknown";
}

Act act_from_name(const std::string& name) {
  if (name == "sigmoid") return Act::sigmoid;
  if (name == "relu") return Act::relu;
  if (name == "leaky_relu") return Act::leaky_relu;
  if (name == "ramp") return Act::ramp;
  if (name == "identity") return Act::identity;
  throw std::invalid_argument("act_from_name: unknown activation '" + name + "'");
}

ForwardCache forward(const MlpNet& net, const Matrix& x) {
  if (x.cols() != net.input_dim())
    throw std::invalid_argument("forward: input has " + std::to_string(x.cols()) +
                                " columns, layer 0 expects " + std::to_string(net.input_dim()));
  ForwardCache c;
  c.version = net.version;
  c.input = x;
  c.pre.reserve(net.layers.size());
  c.post.reserve(net.layers.size());
  const Matrix* cur = &c.input;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    if (cur->cols() != layer.in)
      throw std::invalid_argument("forward: dimension mismatch entering layer " +
                                  std::to_string(l));
    Matrix pre(cur->rows(), layer.out);
    for (int i = 0; i < cur->rows(); ++i) {
      const double* xi = cur->row(i);
      double* pi = pre.row(i);
      for (int o = 0; o < layer.out; ++o) {
        double s = layer.has_bias ? layer.b[o] : 0.0;
        const double* wrow = layer.w.row(o);
        for (int k = 0; k < layer.in; ++k) s += wrow[k] * xi[k];
        pi[o] = s;
      }
    }
    Matrix post(pre.rows(), pre.cols());
    for (size_t i = 0; i < pre.data().size(); ++i)
      post.data()[i] = act_value(layer.act, pre.data()[i]);
    c.pre.push_back(std::move(pre));
    c.post.push_back(std::move(post));
    cur = &c.post.back();
  }
  return c;
}

NetGrads backward(const MlpNet& net, const ForwardCache& cache, const Matrix& upstream) {
  if (cache.version != net.version)
    throw std::runtime_error("backward: forward cache is stale (parameters changed)");
  if (cache.post.size() != net.layers.size() || cache.input.rows() != upstream.rows() ||
      upstream.cols() != net.output_dim())
    throw std::invalid_argument("backward: upstream/cache shape mismatch");

  const int nlayers = static_cast<int>(net.layers.size());
  NetGrads g;
  g.w.resize(nlayers);
  g.b.resize(nlayers);

  Matrix grad = upstream;  // d objective / d post of current layer
  for (int l = nlayers - 1; l >= 0; --l) {
    const Layer& layer = net.layers[l];
    const Matrix& pre = cache.pre[l];
    const Matrix& post = cache.post[l];
    Matrix dz(grad.rows(), grad.cols());
    for (size_t i = 0; i < dz.data().size(); ++i)
      dz.data()[i] = grad.data()[i] * act_deriv(layer.act, pre.data()[i], post.data()[i]);

    const Matrix& below = (l == 0) ? cache.input : cache.post[l - 1];
    Matrix dw(layer.out, layer.in);
    for (int i = 0; i < dz.rows(); ++i) {
      const double* dzi = dz.row(i);
      const double* bi = below.row(i);
      for (int o = 0; o < layer.out; ++o) {
        double d = dzi[o];
        if (d == 0.0) continue;
        double* dwrow = dw.row(o);
        for (int k = 0; k < layer.in; ++k) dwrow[k] += d * bi[k];
      }
    }
    g.w[l] = std::move(dw);
    if (layer.has_bias) {
      Vec db(layer.out, 0.0);
      for (int i = 0; i < dz.rows(); ++i) {
        const double* dzi = dz.row(i);
        for (int o = 0; o < layer.out; ++o) db[o] += dzi[o];
      }
      g.b[l] = std::move(db);
    }

    Matrix next(grad.rows(), layer.in);
    for (int i = 0; i < dz.rows(); ++i) {
      const double* dzi = dz.row(i);
      double* ni = next.row(i);
      for (int o = 0; o < layer.out; ++o) {
        double d = dzi[o];
        if (d == 0.0) continue;
        const double* wrow = layer.w.row(o);
        for (int k = 0; k < layer.in; ++k) ni[k] += d * wrow[k];
      }
    }
    grad = std::move(next);
  }
  g.input = std::move(grad);
  return g;
}

void apply_update(MlpNet& net, const NetGrads& grads, double step) {
  for (size_t l = 0; l < net.layers.size(); ++l) {
    Layer& layer = net.layers[l];
    const Matrix& gw = grads.w[l];
    for (size_t i = 0; i < layer.w.data().size(); ++i)
      layer.w.data()[i] += step * gw.data()[i];
    if (layer.has_bias && !grads.b[l].empty())
      for (int o = 0; o < layer.out; ++o) layer.b[o] += step * grads.b[l][o];
  }
  ++net.version;
}

Vec project_l1_ball(const Vec& v, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("project_l1_ball: radius must be positive");
  double l1 = 0.0;
  for (double x : v) l1 += std::abs(x);
  if (l1 <= radius) return v;
  Vec mu(v.size());
  for (size_t i = 0; i < v.size(); ++i) mu[i] = std::abs(v[i]);
  std::sort(mu.begin(), mu.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  for (size_t j = 0; j < mu.size(); ++j) {
    cum += mu[j];
    double cand = (cum - radius) / static_cast<double>(j + 1);
    if (mu[j] - cand > 0.0) tau = cand;
  }
  Vec out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    double mag = std::abs(v[i]) - tau;
    out[i] = mag > 0.0 ? (v[i] > 0.0 ? mag : -mag) : 0.0;
  }
  return out;
}

void project_constraints(MlpNet& net) {
  bool changed = false;
  for (Layer& layer : net.layers) {
    if (layer.constraint == ConstraintKind::none) continue;
    for (int o = 0; o < layer.out; ++o) {
      double* row = layer.w.row(o);
      if (layer.constraint == ConstraintKind::l1_rows) {
        Vec r(row, row + layer.in);
        Vec pr = project_l1_ball(r, layer.cap);
        for (int k = 0; k < layer.in; ++k) {
          if (row[k] != pr[k]) changed = true;
          row[k] = pr[k];
        }
      } else {
        double nrm = 0.0;
        for (int k = 0; k < layer.in; ++k) nrm += row[k] * row[k];
        nrm = std::sqrt(nrm);
        if (nrm > layer.cap) {
          double f = layer.cap / nrm;
          for (int k = 0; k < layer.in; ++k) row[k] *= f;
          changed = true;
        }
      }
    }
  }
  if (changed) ++net.version;
}

namespace {

Layer make_layer(int in, int out, bool bias, Act act,
                 ConstraintKind ck = ConstraintKind::none, double cap = 0.0) {
  Layer l;
  l.in = in;
  l.out = out;
  l.has_bias = bias;
  l.act = act;
  l.constraint = ck;
  l.cap = cap;
  l.w = Matrix(out, in);
  if (bias) l.b = Vec(out, 0.0);
  return l;
}

}  // namespace

DiscriminatorPreset DiscriminatorPreset::t1(int p, int hidden, double kappa) {
  DiscriminatorPreset d;
  d.kind = Kind::t1;
  d.p = p;
  d.hidden = hidden;
  d.cap_w = kappa;
  return d;
}

DiscriminatorPreset DiscriminatorPreset::t2(int p, int hidden, double kappa, bool unit_u) {
  DiscriminatorPreset d;
  d.kind = Kind::t2;
  d.p = p;
  d.hidden = hidden;
  d.cap_w = kappa;
  d.cap_u = unit_u;
  return d;
}

DiscriminatorPreset DiscriminatorPreset::t3(int p, int hidden, double kappa) {
  DiscriminatorPreset d;
  d.kind = Kind::t3;
  d.p = p;
  d.hidden = hidden;
  d.cap_w = kappa;
  return d;
}

DiscriminatorPreset DiscriminatorPreset::t4(int p, int relu_width, int h, double kappa1,
                                            double kappa2, bool unit_u) {
  if (h < 2) throw std::invalid_argument("DiscriminatorPreset::t4: sigmoid width H must be >= 2");
  DiscriminatorPreset d;
  d.kind = Kind::t4;
  d.p = p;
  d.hidden = h;
  d.relu_width = relu_width;
  d.cap_w = kappa1;
  d.cap_v = kappa2;
  d.cap_u = unit_u;
  return d;
}

DiscriminatorPreset DiscriminatorPreset::deep(int p, int width, int l, double b_cap, double kappa,
                                              bool ramp_bottom) {
  if (l < 1) throw std::invalid_argument("DiscriminatorPreset::deep: need at least one relu layer");
  DiscriminatorPreset d;
  d.kind = Kind::deep;
  d.p = p;
  d.hidden = width;
  d.depth_l = l;
  d.cap_v = b_cap;
  d.cap_w = kappa;
  d.ramp_bottom = ramp_bottom;
  return d;
}

DiscriminatorPreset DiscriminatorPreset::practical(int p) {
  DiscriminatorPreset d;
  d.kind = Kind::practical;
  d.p = p;
  return d;
}

MlpNet build_discriminator(const DiscriminatorPreset& d) {
  auto head_ck = d.cap_w > 0.0 ? ConstraintKind::l1_rows : ConstraintKind::none;
  auto mid_ck = d.cap_v > 0.0 ? ConstraintKind::l1_rows : ConstraintKind::none;
  auto u_ck = d.cap_u ? ConstraintKind::l2_rows : ConstraintKind::none;

  MlpNet net;
  switch (d.kind) {
    case DiscriminatorPreset::Kind::t1:
      net.layers.push_back(make_layer(d.p, d.hidden, false, Act::sigmoid));
      net.layers.push_back(make_layer(d.hidden, 1, false, Act::sigmoid, head_ck, d.cap_w));
      break;
    case DiscriminatorPreset::Kind::t2:
      net.layers.push_back(make_layer(d.p, d.hidden, false, Act::relu, u_ck, 1.0));
      net.layers.push_back(make_layer(d.hidden, 1, false, Act::sigmoid, head_ck, d.cap_w));
      break;
    case DiscriminatorPreset::Kind::t3:
      net.layers.push_back(make_layer(d.p, d.hidden, true, Act::sigmoid));
      net.layers.push_back(make_layer(d.hidden, 1, false, Act::sigmoid, head_ck, d.cap_w));
      break;
    case DiscriminatorPreset::Kind::t4:
      net.layers.push_back(make_layer(d.p, d.relu_width, false, Act::relu, u_ck, 1.0));
      net.layers.push_back(make_layer(d.relu_width, d.hidden, false, Act::sigmoid, mid_ck, d.cap_v));
      net.layers.push_back(make_layer(d.hidden, 1, false, Act::sigmoid, head_ck, d.cap_w));
      break;
    case DiscriminatorPreset::Kind::deep: {
      net.layers.push_back(
          make_layer(d.p, d.hidden, true, d.ramp_bottom ? Act::ramp : Act::sigmoid));
      for (int l = 0; l < d.depth_l; ++l)
        net.layers.push_back(make_layer(d.hidden, d.hidden, false, Act::relu, mid_ck, d.cap_v));
      net.layers.push_back(make_layer(d.hidden, 1, false, Act::sigmoid, head_ck, d.cap_w));
      break;
    }
    case DiscriminatorPreset::Kind::practical: {
      int mid = std::max(d.p / 2, 1);
      net.layers.push_back(make_layer(d.p, 2 * d.p, true, Act::leaky_relu));
      net.layers.push_back(make_layer(2 * d.p, mid, true, Act::sigmoid));
      net.layers.push_back(make_layer(mid, 1, true, Act::sigmoid));
      break;
    }
  }
  return net;
}

void init_params(Rng& rng, MlpNet& net, double sigma1) {
  for (size_t l = 0; l < net.layers.size(); ++l) {
    Layer& layer = net.layers[l];
    if (l == 0 && sigma1 > 0.0) {
      for (double& w : layer.w.data()) w = sigma1 * rng.normal();
    } else {
      double range = std::sqrt(6.0 / (layer.in + layer.out));
      for (double& w : layer.w.data()) w = range * (2.0 * rng.uniform() - 1.0);
    }
    if (layer.has_bias) std::fill(layer.b.begin(), layer.b.end(), 0.0);
  }
  ++net.version;
}

MlpNet init_net(Rng& rng, const DiscriminatorPreset& preset, double sigma1) {
  MlpNet net = build_discriminator(preset);
  init_params(rng, net, sigma1);
  return net;
}

MlpNet build_xi_net(int input_dim) {
  MlpNet net;
  const int widths[] = {32, 24, 12};
  int in = input_dim;
  for (int w : widths) {
    net.layers.push_back(make_layer(in, w, true, Act::leaky_relu));
    in = w;
  }
  net.layers.push_back(make_layer(in, 1, true, Act::identity));
  return net;
}

GeneratorPreset GeneratorPreset::g1(Matrix a, Base base, double t_dof) {
  GeneratorPreset g;
  g.kind = Kind::g1;
  g.p = a.rows();
  g.a = std::move(a);
  g.base = base;
  g.t_dof = t_dof;
  g.theta = Vec(g.p, 0.0);
  return g;
}

GeneratorPreset GeneratorPreset::g3(Matrix a, Vec theta, Base base, double t_dof) {
  GeneratorPreset g = g1(std::move(a), base, t_dof);
  g.kind = Kind::g3;
  if (static_cast<int>(theta.size()) != g.p)
    throw std::invalid_argument("GeneratorPreset::g3: theta dimension mismatch");
  g.theta = std::move(theta);
  return g;
}

namespace {

void init_xi(GeneratorPreset& g, Rng& rng) {
  g.xi_net = build_xi_net(g.xi_input_dim);
  init_params(rng, g.xi_net, 0.0);
  // Bias the output toward sqrt(p) so initial xi sits at the scale of a
  // chi_p radial, matching the Kendall-initialized A.
  g.xi_net.layers.back().b[0] = std::sqrt(static_cast<double>(g.p));
  ++g.xi_net.version;
}

}  // namespace

GeneratorPreset GeneratorPreset::g2(Matrix a, Rng& rng) {
  GeneratorPreset g = g1(std::move(a));
  g.kind = Kind::g2;
  init_xi(g, rng);
  return g;
}

GeneratorPreset GeneratorPreset::g4(Matrix a, Vec theta, Rng& rng) {
  GeneratorPreset g = g3(std::move(a), std::move(theta));
  g.kind = Kind::g4;
  init_xi(g, rng);
  return g;
}

Matrix generate(const GeneratorPreset& gen, Rng& rng, int n, GenerateCache& cache) {
  const int p = gen.p;
  Matrix out(n, p);
  if (!gen.has_xi_net()) {
    Matrix z(n, p);
    if (gen.base == GeneratorPreset::Base::gaussian) {
      for (double& v : z.data()) v = rng.normal();
    } else {
      for (int i = 0; i < n; ++i) {
        double* zi = z.row(i);
        for (int j = 0; j < p; ++j) zi[j] = rng.normal();
        double w = rng.chi_squared(gen.t_dof);
        double f = 1.0 / std::sqrt(w / gen.t_dof);
        for (int j = 0; j < p; ++j) zi[j] *= f;
      }
    }
    for (int i = 0; i < n; ++i) {
      const double* zi = z.row(i);
      double* oi = out.row(i);
      for (int r = 0; r < p; ++r) {
        double s = gen.theta[r];
        const double* ar = gen.a.row(r);
        for (int c = 0; c < p; ++c) s += ar[c] * zi[c];
        oi[r] = s;
      }
    }
    cache.z = std::move(z);
    return out;
  }

  Matrix zin(n, gen.xi_input_dim);
  for (double& v : zin.data()) v = rng.normal();
  ForwardCache fwd = forward(gen.xi_net, zin);
  Vec xi(n), sign(n);
  for (int i = 0; i < n; ++i) {
    double raw = fwd.output()(i, 0);
    xi[i] = std::abs(raw);
    sign[i] = raw > 0.0 ? 1.0 : (raw < 0.0 ? -1.0 : 0.0);
  }
  Matrix u = sample_sphere(rng, p, n);
  for (int i = 0; i < n; ++i) {
    const double* ui = u.row(i);
    double* oi = out.row(i);
    for (int r = 0; r < p; ++r) {
      double s = gen.theta[r];
      const double* ar = gen.a.row(r);
      for (int c = 0; c < p; ++c) s += xi[i] * ar[c] * ui[c];
      oi[r] = s;
    }
  }
  cache.u = std::move(u);
  cache.xi_input = std::move(zin);
  cache.xi_fwd = std::move(fwd);
  cache.xi = std::move(xi);
  cache.xi_sign = std::move(sign);
  return out;
}

GeneratorGrads generator_backward(const GeneratorPreset& gen, const GenerateCache& cache,
                                  const Matrix& upstream) {
  const int p = gen.p;
  GeneratorGrads g;
  g.a = Matrix(p, p);
  g.theta = Vec(p, 0.0);

  if (gen.has_location()) {
    for (int i = 0; i < upstream.rows(); ++i) {
      const double* ui = upstream.row(i);
      for (int j = 0; j < p; ++j) g.theta[j] += ui[j];
    }
  }

  if (!gen.has_xi_net()) {
    if (cache.z.rows() != upstream.rows())
      throw std::runtime_error("generator_backward: stale generate cache");
    for (int i = 0; i < upstream.rows(); ++i) {
      const double* gi = upstream.row(i);
      const double* zi = cache.z.row(i);
      for (int r = 0; r < p; ++r)
        for (int c = 0; c < p; ++c) g.a(r, c) += gi[r] * zi[c];
    }
    return g;
  }

  if (cache.u.rows() != upstream.rows())
    throw std::runtime_error("generator_backward: stale generate cache");
  Matrix dxi_raw(upstream.rows(), 1);
  for (int i = 0; i < upstream.rows(); ++i) {
    const double* gi = upstream.row(i);
    const double* ui = cache.u.row(i);
    double dxi = 0.0;
    for (int r = 0; r < p; ++r) {
      const double* ar = gen.a.row(r);
      double au = 0.0;
      for (int c = 0; c < p; ++c) au += ar[c] * ui[c];
      dxi += gi[r] * au;
      double f = cache.xi[i] * gi[r];
      for (int c = 0; c < p; ++c) g.a(r, c) += f * ui[c];
    }
    dxi_raw(i, 0) = cache.xi_sign[i] * dxi;
  }
  g.xi = backward(gen.xi_net, cache.xi_fwd, dxi_raw);
  return g;
}

void apply_generator_update(GeneratorPreset& gen, const GeneratorGrads& grads, double step) {
  for (size_t i = 0; i < gen.a.data().size(); ++i) gen.a.data()[i] += step * grads.a.data()[i];
  if (gen.has_location())
    for (int j = 0; j < gen.p; ++j) gen.theta[j] += step * grads.theta[j];
  if (gen.has_xi_net()) apply_update(gen.xi_net, grads.xi, step);
}

namespace {

const char* constraint_name(ConstraintKind c) {
  switch (c) {
    case ConstraintKind::none: return "none";
    case ConstraintKind::l1_rows: return "l1_rows";
    case ConstraintKind::l2_rows: return "l2_rows";
  }
  return "none";
}

ConstraintKind constraint_from_name(const std::string& s) {
  if (s == "none") return ConstraintKind::none;
  if (s == "l1_rows") return ConstraintKind::l1_rows;
  if (s == "l2_rows") return ConstraintKind::l2_rows;
  throw std::invalid_argument("net_from_json: unknown constraint '" + s + "'");
}

}  // namespace

std::string net_to_json(const MlpNet& net) {
  nlohmann::json j;
  j["layers"] = nlohmann::json::array();
  for (const Layer& l : net.layers) {
    nlohmann::json jl;
    jl["in"] = l.in;
    jl["out"] = l.out;
    jl["bias"] = l.has_bias;
    jl["act"] = act_name(l.act);
    jl["constraint"] = constraint_name(l.constraint);
    jl["cap"] = l.cap;
    jl["w"] = l.w.data();
    if (l.has_bias) jl["b"] = l.b;
    j["layers"].push_back(std::move(jl));
  }
  return j.dump();
}

MlpNet net_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  MlpNet net;
  for (const auto& jl : j.at("layers")) {
    Layer l = make_layer(jl.at("in").get<int>(), jl.at("out").get<int>(),
                         jl.at("bias").get<bool>(), act_from_name(jl.at("act").get<std::string>()),
                         constraint_from_name(jl.at("constraint").get<std::string>()),
                         jl.at("cap").get<double>());
    auto w = jl.at("w").get<std::vector<double>>();
    if (w.size() != l.w.data().size())
      throw std::invalid_argument("net_from_json: weight size mismatch");
    l.w.data() = std::move(w);
    if (l.has_bias) {
      l.b = jl.at("b").get<std::vector<double>>();
      if (static_cast<int>(l.b.size()) != l.out)
        throw std::invalid_argument("net_from_json: bias size mismatch");
    }
    net.layers.push_back(std::move(l));
  }
  return net;
}

}  // namespace scatter
