#include "scatter/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "scatter/baselines.hpp"
#include "scatter/linalg.hpp"
#include "scatter/quadrature.hpp"

namespace scatter {

namespace {

// Substream tags: 0 kendall pairs, 1 net init, 2 minibatch, 3 generator
// noise, 4 pair-difference subsample.
constexpr uint64_t kTagKendall = 0, kTagInit = 1, kTagMinibatch = 2, kTagNoise = 3,
                   kTagUstat = 4;

constexpr double kClampLo = 1e-12, kClampHi = 1.0 - 1e-12;

double clamp_t(double t) { return std::min(std::max(t, kClampLo), kClampHi); }

}  // namespace

double decay_factor(int completed_epochs, double alpha, int period) {
  if (period <= 0) return 1.0;
  return std::pow(alpha, static_cast<double>(completed_epochs / period));
}

SymMatrix kendall_init(const Matrix& data, Rng& rng, uint64_t pair_budget) {
  SymMatrix s = scaled_kendall_tau(data, rng, pair_budget);
  EigenDecomposition e = sym_eig(s);
  const int p = s.dim();
  SymMatrix out(p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      double v = 0.0;
      for (int k = 0; k < p; ++k)
        v += e.vectors(i, k) * std::max(e.values[k], 1e-6) * e.vectors(j, k);
      out.set(i, j, v);
    }
  }
  return out;
}

double objective_estimate(const MlpNet& discriminator, const ScoringRule& rule,
                          const Matrix& real_batch, const Matrix& fake_batch) {
  if (real_batch.rows() == 0 || fake_batch.rows() == 0)
    throw std::invalid_argument("objective_estimate: batches must be nonempty");
  ForwardCache fr = forward(discriminator, real_batch);
  ForwardCache ff = forward(discriminator, fake_batch);
  double sum1 = 0.0, sum0 = 0.0;
  if (rule.smooth()) {
    for (int i = 0; i < real_batch.rows(); ++i)
      sum1 += score(rule, clamp_t(fr.output()(i, 0))).s1;
    for (int i = 0; i < fake_batch.rows(); ++i)
      sum0 += score(rule, clamp_t(ff.output()(i, 0))).s0;
  } else {
    for (int i = 0; i < real_batch.rows(); ++i)
      sum1 += score_value_zero_one(fr.output()(i, 0)).first;
    for (int i = 0; i < fake_batch.rows(); ++i)
      sum0 += score_value_zero_one(ff.output()(i, 0)).second;
  }
  return sum1 / real_batch.rows() + sum0 / fake_batch.rows();
}

namespace {

struct TrainState {
  int next_epoch = 1;
  GeneratorPreset gen;
  MlpNet disc;
  std::array<uint64_t, 5> rng_mb{}, rng_noise{};
  Matrix acc_sigma;  // running sum of A A^T over the tail window
  Vec acc_theta;
  std::vector<TraceRow> trace;
};

nlohmann::json generator_to_json(const GeneratorPreset& g) {
  nlohmann::json j;
  j["kind"] = static_cast<int>(g.kind);
  j["base"] = static_cast<int>(g.base);
  j["t_dof"] = g.t_dof;
  j["p"] = g.p;
  j["xi_input_dim"] = g.xi_input_dim;
  j["a"] = g.a.data();
  j["theta"] = g.theta;
  if (g.has_xi_net()) j["xi_net"] = nlohmann::json::parse(net_to_json(g.xi_net));
  return j;
}

GeneratorPreset generator_from_json(const nlohmann::json& j) {
  GeneratorPreset g;
  g.kind = static_cast<GeneratorPreset::Kind>(j.at("kind").get<int>());
  g.base = static_cast<GeneratorPreset::Base>(j.at("base").get<int>());
  g.t_dof = j.at("t_dof").get<double>();
  g.p = j.at("p").get<int>();
  g.xi_input_dim = j.at("xi_input_dim").get<int>();
  g.a = Matrix(g.p, g.p);
  auto a = j.at("a").get<std::vector<double>>();
  if (a.size() != g.a.data().size())
    throw std::runtime_error("checkpoint: scatter factor size mismatch");
  g.a.data() = std::move(a);
  g.theta = j.at("theta").get<std::vector<double>>();
  if (g.has_xi_net()) g.xi_net = net_from_json(j.at("xi_net").dump());
  return g;
}

void save_checkpoint(const TrainState& st, int p, const std::string& path) {
  nlohmann::json j;
  j["next_epoch"] = st.next_epoch;
  j["p"] = p;
  j["disc"] = nlohmann::json::parse(net_to_json(st.disc));
  j["gen"] = generator_to_json(st.gen);
  j["rng_mb"] = st.rng_mb;
  j["rng_noise"] = st.rng_noise;
  j["acc_sigma"] = st.acc_sigma.data();
  j["acc_theta"] = st.acc_theta;
  nlohmann::json tr = nlohmann::json::array();
  for (const TraceRow& r : st.trace) tr.push_back({r.epoch, r.objective, r.scatter_opnorm});
  j["trace"] = std::move(tr);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f << j.dump();
}

TrainState load_checkpoint(const std::string& path, int expected_p) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  if (j.at("p").get<int>() != expected_p)
    throw std::runtime_error("load_checkpoint: dimension mismatch with data");
  TrainState st;
  st.next_epoch = j.at("next_epoch").get<int>();
  st.disc = net_from_json(j.at("disc").dump());
  st.gen = generator_from_json(j.at("gen"));
  st.rng_mb = j.at("rng_mb").get<std::array<uint64_t, 5>>();
  st.rng_noise = j.at("rng_noise").get<std::array<uint64_t, 5>>();
  st.acc_sigma = Matrix(expected_p, expected_p);
  auto acc = j.at("acc_sigma").get<std::vector<double>>();
  if (acc.size() != st.acc_sigma.data().size())
    throw std::runtime_error("load_checkpoint: accumulator size mismatch");
  st.acc_sigma.data() = std::move(acc);
  st.acc_theta = j.at("acc_theta").get<std::vector<double>>();
  for (const auto& r : j.at("trace"))
    st.trace.push_back({r.at(0).get<int>(), r.at(1).get<double>(), r.at(2).get<double>()});
  return st;
}

void validate_config(const TrainConfig& cfg) {
  if (cfg.batch_m < 1 || cfg.kd < 1 || cfg.kg < 1)
    throw std::invalid_argument("train: batch_m, kd, kg must be >= 1");
  if (cfg.avg_window_t0 < 1 || cfg.avg_window_t0 > cfg.epochs_t)
    throw std::invalid_argument("train: need 1 <= avg_window_t0 <= epochs_t");
  if (!(cfg.decay_alpha > 0.0 && cfg.decay_alpha < 1.0))
    throw std::invalid_argument("train: decay_alpha must lie in (0,1)");
  if (!(cfg.gamma_d > 0.0) || !(cfg.gamma_g > 0.0) || !(cfg.sigma1 > 0.0))
    throw std::invalid_argument("train: learning rates and sigma1 must be positive");
  if (!cfg.score.smooth())
    throw std::invalid_argument("train: the zero_one score has no usable gradients");
}

Vec column_medians(const Matrix& data) {
  Vec out(data.cols());
  Vec col(data.rows());
  for (int j = 0; j < data.cols(); ++j) {
    for (int i = 0; i < data.rows(); ++i) col[i] = data(i, j);
    out[j] = median(col);
  }
  return out;
}

Matrix initial_a(const Matrix& data, const TrainConfig& cfg, Rng& rng, const Vec& center) {
  if (cfg.init_a.rows() > 0) {
    if (cfg.init_a.rows() != data.cols() || cfg.init_a.cols() != data.cols())
      throw std::invalid_argument("train: init_a has wrong shape");
    return cfg.init_a;
  }
  Rng rk = rng.substream(kTagKendall);
  const Matrix* src = &data;
  Matrix centered;
  if (!center.empty()) {
    centered = data;
    for (int i = 0; i < centered.rows(); ++i)
      for (int j = 0; j < centered.cols(); ++j) centered(i, j) -= center[j];
    src = &centered;
  }
  SymMatrix s0 = kendall_init(*src, rk, cfg.kendall_pair_budget);
  EigenDecomposition e = sym_eig(s0);
  const int p = s0.dim();
  Matrix a(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j)
      a(i, j) = e.vectors(i, j) * std::sqrt(std::max(e.values[j], 1e-6));
  }
  return a;
}

EstimationResult run_training(const Matrix& data, const TrainConfig& cfg, Rng& rng,
                              const CheckpointOptions& ck) {
  validate_config(cfg);
  const int n = data.rows(), p = data.cols();
  if (n < 1 || p < 1) throw std::invalid_argument("train: empty data");
  for (double v : data.data())
    if (!std::isfinite(v)) throw std::invalid_argument("train: data has non-finite entries");

  const bool with_location = cfg.gen_kind == GeneratorPreset::Kind::g3 ||
                             cfg.gen_kind == GeneratorPreset::Kind::g4;

  TrainState st;
  if (!ck.resume_path.empty()) {
    st = load_checkpoint(ck.resume_path, p);
  } else {
    Vec theta0;
    if (with_location) theta0 = column_medians(data);
    Matrix a0 = initial_a(data, cfg, rng, theta0);

    Rng rng_init = rng.substream(kTagInit);
    DiscriminatorPreset dp = cfg.discriminator;
    dp.p = p;
    st.disc = init_net(rng_init, dp, cfg.sigma1);

    switch (cfg.gen_kind) {
      case GeneratorPreset::Kind::g1:
        st.gen = GeneratorPreset::g1(std::move(a0), cfg.gen_base, cfg.gen_t_dof);
        break;
      case GeneratorPreset::Kind::g2:
        st.gen = GeneratorPreset::g2(std::move(a0), rng_init);
        break;
      case GeneratorPreset::Kind::g3:
        st.gen = GeneratorPreset::g3(std::move(a0), std::move(theta0), cfg.gen_base,
                                     cfg.gen_t_dof);
        break;
      case GeneratorPreset::Kind::g4:
        st.gen = GeneratorPreset::g4(std::move(a0), std::move(theta0), rng_init);
        break;
    }
    st.rng_mb = rng.substream(kTagMinibatch).serialize();
    st.rng_noise = rng.substream(kTagNoise).serialize();
    st.acc_sigma = Matrix(p, p);
    st.acc_theta = Vec(p, 0.0);
    st.next_epoch = 1;
  }

  Rng rng_mb = Rng::deserialize(st.rng_mb);
  Rng rng_noise = Rng::deserialize(st.rng_noise);

  Matrix real_batch(cfg.batch_m, p);
  const int tail_start = cfg.epochs_t - cfg.avg_window_t0 + 1;

  for (int t = st.next_epoch; t <= cfg.epochs_t; ++t) {
    const double lr_scale = decay_factor(t - 1, cfg.decay_alpha, cfg.decay_period_t1);
    const double lr_d = cfg.gamma_d * lr_scale;
    const double lr_g = cfg.gamma_g * lr_scale;

    double last_obj = 0.0;
    Matrix last_fake;
    for (int k = 0; k < cfg.kd; ++k) {
      for (int i = 0; i < cfg.batch_m; ++i) {
        int idx = static_cast<int>(rng_mb.uniform_int(static_cast<uint64_t>(n)));
        const double* src = data.row(idx);
        double* dst = real_batch.row(i);
        for (int j = 0; j < p; ++j) dst[j] = src[j];
      }
      GenerateCache gc;
      Matrix fake = generate(st.gen, rng_noise, cfg.batch_m, gc);

      ForwardCache fr = forward(st.disc, real_batch);
      ForwardCache ff = forward(st.disc, fake);

      Matrix up_r(cfg.batch_m, 1), up_f(cfg.batch_m, 1);
      for (int i = 0; i < cfg.batch_m; ++i) {
        up_r(i, 0) = score_d1(cfg.score, clamp_t(fr.output()(i, 0))) / cfg.batch_m;
        up_f(i, 0) = score_d0(cfg.score, clamp_t(ff.output()(i, 0))) / cfg.batch_m;
      }
      NetGrads gr = backward(st.disc, fr, up_r);
      NetGrads gf = backward(st.disc, ff, up_f);
      apply_update(st.disc, gr, lr_d);
      apply_update(st.disc, gf, lr_d);
      project_constraints(st.disc);

      if (k == cfg.kd - 1) {
        double s1 = 0.0, s0 = 0.0;
        for (int i = 0; i < cfg.batch_m; ++i) {
          s1 += score(cfg.score, clamp_t(fr.output()(i, 0))).s1;
          s0 += score(cfg.score, clamp_t(ff.output()(i, 0))).s0;
        }
        last_obj = (s1 + s0) / cfg.batch_m;
        last_fake = std::move(fake);
      }
    }

    for (int k = 0; k < cfg.kg; ++k) {
      GenerateCache gc;
      Matrix fake = generate(st.gen, rng_noise, cfg.batch_m, gc);
      ForwardCache ff = forward(st.disc, fake);
      Matrix up(cfg.batch_m, 1);
      for (int i = 0; i < cfg.batch_m; ++i)
        up(i, 0) = score_d0(cfg.score, clamp_t(ff.output()(i, 0))) / cfg.batch_m;
      NetGrads dg = backward(st.disc, ff, up);
      GeneratorGrads gg = generator_backward(st.gen, gc, dg.input);
      if (cfg.freeze_scatter)
        for (double& v : gg.a.data()) v = 0.0;
      apply_generator_update(st.gen, gg, -lr_g);
    }

    if (cfg.trace_full_every > 0 &&
        (t % cfg.trace_full_every == 0 || t == cfg.epochs_t) && last_fake.rows() > 0) {
      last_obj = objective_estimate(st.disc, cfg.score, data, last_fake);
    }
    if (!std::isfinite(last_obj))
      throw std::runtime_error("train: non-finite objective at epoch " + std::to_string(t));

    SymMatrix gram_a = gram(st.gen.a);
    st.trace.push_back({t, last_obj, operator_norm(gram_a)});

    if (t >= tail_start) {
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) st.acc_sigma(i, j) += gram_a(i, j);
      if (with_location)
        for (int j = 0; j < p; ++j) st.acc_theta[j] += st.gen.theta[j];
    }

    st.next_epoch = t + 1;
    if (!ck.save_path.empty() && ck.every > 0 && t % ck.every == 0 && t < cfg.epochs_t) {
      st.rng_mb = rng_mb.serialize();
      st.rng_noise = rng_noise.serialize();
      save_checkpoint(st, p, ck.save_path);
    }
  }

  EstimationResult res;
  res.scatter_hat = SymMatrix(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j <= i; ++j)
      res.scatter_hat.set(i, j, st.acc_sigma(i, j) / cfg.avg_window_t0);

  double top = operator_norm(res.scatter_hat);
  EigenDecomposition e = sym_eig(res.scatter_hat);
  if (e.values.back() < -1e-9 * std::max(top, 1.0))
    throw std::runtime_error("train: tail-averaged scatter lost positive semidefiniteness");

  res.location_hat = Vec(p, 0.0);
  if (with_location)
    for (int j = 0; j < p; ++j) res.location_hat[j] = st.acc_theta[j] / cfg.avg_window_t0;
  res.calibration_factor = 1.0;
  res.trace = std::move(st.trace);
  res.generator = std::move(st.gen);
  res.discriminator = std::move(st.disc);
  return res;
}

}  // namespace

EstimationResult train(const Matrix& data, const TrainConfig& cfg, Rng& rng,
                       const CheckpointOptions& ck) {
  return run_training(data, cfg, rng, ck);
}

EstimationResult train_joint(const Matrix& data, const TrainConfig& cfg, Rng& rng,
                             const CheckpointOptions& ck) {
  if (cfg.gen_kind != GeneratorPreset::Kind::g3 && cfg.gen_kind != GeneratorPreset::Kind::g4)
    throw std::invalid_argument("train_joint: generator must be g3 or g4");
  return run_training(data, cfg, rng, ck);
}

EstimationResult train_ustat(const Matrix& data, const TrainConfig& cfg, Rng& rng,
                             uint64_t pair_budget, const CheckpointOptions& ck) {
  if (cfg.gen_kind != GeneratorPreset::Kind::g1 && cfg.gen_kind != GeneratorPreset::Kind::g2)
    throw std::invalid_argument("train_ustat: generator must be g1 or g2 (centered)");
  Rng rp = rng.substream(kTagUstat);
  Matrix transformed = pair_difference_transform(data, rp, pair_budget);
  return run_training(transformed, cfg, rng, ck);
}

double clipped_moment_rhs(const CalibrationTarget& target) {
  if (target.kind == CalibrationTarget::Kind::gaussian) {
    // E min(|Z|,1) = 2(phi(0) - phi(1)) + 2(1 - Phi(1))
    const double phi0 = 0.3989422804014326779;
    const double phi1 = std::exp(-0.5) * phi0;
    const double tail = 0.5 * std::erfc(1.0 / std::sqrt(2.0));
    return 2.0 * (phi0 - phi1) + 2.0 * tail;
  }
  const double v = target.dof;
  if (!(v > 0.0)) throw std::invalid_argument("clipped_moment_rhs: dof must be positive");
  const double logc = std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) -
                      0.5 * std::log(v * 3.14159265358979323846);
  auto density = [&](double x) {
    return std::exp(logc - 0.5 * (v + 1.0) * std::log1p(x * x / v));
  };
  double inner = adaptive_simpson([&](double x) { return x * density(x); }, 0.0, 1.0, 1e-12);
  // P(X > 1) via x = 1/u.
  double tail = adaptive_simpson([&](double u) { return density(1.0 / u) / (u * u); }, 1e-12,
                                 1.0, 1e-12);
  return 2.0 * inner + 2.0 * tail;
}

double calibrate_elliptical(const std::function<double(Rng&)>& xi_draw, int sphere_dim, Rng& rng,
                            const CalibrationTarget& target, int mc_n) {
  if (sphere_dim < 1) throw std::invalid_argument("calibrate_elliptical: sphere_dim must be >= 1");
  if (mc_n < 1) throw std::invalid_argument("calibrate_elliptical: mc_n must be >= 1");

  // s_i = xi_i * (U_i)_1; by spherical symmetry u^T U has the same law for
  // every unit u.
  Vec s(mc_n);
  for (int i = 0; i < mc_n; ++i) {
    double xi = xi_draw(rng);
    if (!(xi >= 0.0)) throw std::domain_error("calibrate_elliptical: xi draw is negative");
    double z1 = 0.0, nrm = 0.0;
    do {
      nrm = 0.0;
      for (int j = 0; j < sphere_dim; ++j) {
        double z = rng.normal();
        if (j == 0) z1 = z;
        nrm += z * z;
      }
    } while (nrm == 0.0);
    s[i] = xi * z1 / std::sqrt(nrm);
  }

  auto f = [&](double a) {
    double acc = 0.0;
    for (double si : s) acc += std::min(std::abs(a * si), 1.0);
    return acc / mc_n;
  };

  const double rhs = clipped_moment_rhs(target);
  double lo = 1e-4, hi = 1e4;
  double flo = f(lo), fhi = f(hi);
  if (!(flo <= rhs && rhs <= fhi))
    throw std::runtime_error("calibrate_elliptical: root not bracketed; F(" +
                             std::to_string(lo) + ")=" + std::to_string(flo) + ", F(" +
                             std::to_string(hi) + ")=" + std::to_string(fhi) +
                             ", target=" + std::to_string(rhs));
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (f(mid) < rhs)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double calibrate_elliptical(const MlpNet& xi_net, int sphere_dim, Rng& rng,
                            const CalibrationTarget& target, int mc_n) {
  const int q = xi_net.input_dim();
  Matrix z(1, q);
  auto draw = [&xi_net, &z, q](Rng& r) {
    for (int j = 0; j < q; ++j) z(0, j) = r.normal();
    ForwardCache fc = forward(xi_net, z);
    return std::abs(fc.output()(0, 0));
  };
  return calibrate_elliptical(draw, sphere_dim, rng, target, mc_n);
}

double student_t_quantile(double dof, double prob) {
  if (!(dof > 0.0)) throw std::invalid_argument("student_t_quantile: dof must be positive");
  if (!(prob > 0.0 && prob < 1.0))
    throw std::invalid_argument("student_t_quantile: prob must lie in (0,1)");
  const double logc = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                      0.5 * std::log(dof * 3.14159265358979323846);
  auto density = [&](double x) {
    return std::exp(logc - 0.5 * (dof + 1.0) * std::log1p(x * x / dof));
  };
  auto cdf = [&](double x) {
    if (x == 0.0) return 0.5;
    double ax = std::abs(x);
    double inner = adaptive_simpson(density, 0.0, ax, 1e-13);
    return x > 0.0 ? 0.5 + inner : 0.5 - inner;
  };
  double lo = -1.0, hi = 1.0;
  while (cdf(lo) > prob) lo *= 2.0;
  while (cdf(hi) < prob) hi *= 2.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    if (cdf(mid) < prob)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace scatter
