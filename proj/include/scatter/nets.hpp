#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scatter/matrix.hpp"
#include "scatter/rng.hpp"

namespace scatter {

enum class Act { sigmoid, relu, leaky_relu, ramp, identity };

double act_value(Act a, double x);
// Derivative at pre-activation x, given the already-computed value y = act(x).
double act_deriv(Act a, double x, double y);

std::string act_name(Act a);
Act act_from_name(const std::string& name);

// Per-layer weight-group constraint, applied row-wise to the weight matrix.
enum class ConstraintKind { none, l1_rows, l2_rows };

struct Layer {
  int in = 0, out = 0;
  bool has_bias = false;
  Act act = Act::identity;
  ConstraintKind constraint = ConstraintKind::none;
  double cap = 0.0;
  Matrix w;  // out x in
  Vec b;     // size out when has_bias
};

struct MlpNet {
  std::vector<Layer> layers;
  uint64_t version = 0;  // bumped on every parameter change; caches check it

  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
};

struct ForwardCache {
  uint64_t version = 0;
  Matrix input;
  std::vector<Matrix> pre;   // per layer, rows = batch
  std::vector<Matrix> post;  // per layer
  const Matrix& output() const { return post.back(); }
};

struct NetGrads {
  std::vector<Matrix> w;
  std::vector<Vec> b;
  Matrix input;  // gradient wrt the net input, rows = batch
};

// Batch forward; rows of x are inputs. Cache retains everything backward needs.
ForwardCache forward(const MlpNet& net, const Matrix& x);

// Reverse mode. upstream holds d(objective)/d(output) per row; returned
// gradients are sums over the batch (callers fold any 1/m into upstream).
NetGrads backward(const MlpNet& net, const ForwardCache& cache, const Matrix& upstream);

// In-place SGD step: params += step * grads (negative step descends).
void apply_update(MlpNet& net, const NetGrads& grads, double step);

// Row-wise l1-ball projection / l2 row normalization per configured caps.
void project_constraints(MlpNet& net);

// Euclidean projection of v onto the l1 ball of the given radius.
Vec project_l1_ball(const Vec& v, double radius);

struct DiscriminatorPreset {
  enum class Kind { t1, t2, t3, t4, deep, practical };
  Kind kind = Kind::practical;
  int p = 1;
  int hidden = 8;        // hidden width for t1/t2/t3, sigmoid width H for t4, relu width for deep
  int relu_width = 8;    // bottom relu width for t4
  int depth_l = 2;       // number of relu hidden layers for deep
  bool ramp_bottom = false;  // deep: ramp instead of sigmoid bottom units
  double cap_w = 0.0;    // kappa on the head weights (0 = unconstrained)
  double cap_v = 0.0;    // kappa2 / B on middle-layer rows
  bool cap_u = false;    // unit l2 cap on first-layer rows (t2/t4)

  static DiscriminatorPreset t1(int p, int hidden, double kappa = 0.0);
  static DiscriminatorPreset t2(int p, int hidden, double kappa = 0.0, bool unit_u = true);
  static DiscriminatorPreset t3(int p, int hidden, double kappa = 0.0);
  static DiscriminatorPreset t4(int p, int relu_width, int h, double kappa1 = 0.0,
                                double kappa2 = 0.0, bool unit_u = true);
  static DiscriminatorPreset deep(int p, int width, int l, double b_cap, double kappa,
                                  bool ramp_bottom);
  static DiscriminatorPreset practical(int p);
};

// Network skeleton for a preset (parameters zero until init).
MlpNet build_discriminator(const DiscriminatorPreset& preset);

// First layer i.i.d. N(0, sigma1^2); later layers Xavier uniform; biases zero.
MlpNet init_net(Rng& rng, const DiscriminatorPreset& preset, double sigma1);

// Xavier init of an arbitrary skeleton (first layer N(0, sigma1^2) when
// sigma1 > 0, Xavier otherwise).
void init_params(Rng& rng, MlpNet& net, double sigma1);

struct GeneratorPreset {
  enum class Kind { g1, g2, g3, g4 };
  enum class Base { gaussian, student_t };

  Kind kind = Kind::g1;
  int p = 1;
  Base base = Base::gaussian;  // g1/g3 noise family
  double t_dof = 0.0;          // base = student_t
  int xi_input_dim = 48;       // g2/g4

  Matrix a;       // p x p
  Vec theta;      // size p, used by g3/g4
  MlpNet xi_net;  // g2/g4

  bool has_location() const { return kind == Kind::g3 || kind == Kind::g4; }
  bool has_xi_net() const { return kind == Kind::g2 || kind == Kind::g4; }

  static GeneratorPreset g1(Matrix a, Base base = Base::gaussian, double t_dof = 0.0);
  static GeneratorPreset g2(Matrix a, Rng& rng);
  static GeneratorPreset g3(Matrix a, Vec theta, Base base = Base::gaussian, double t_dof = 0.0);
  static GeneratorPreset g4(Matrix a, Vec theta, Rng& rng);
};

// The 48-32-24-12-1 xi network skeleton (leaky_relu hidden, identity output).
MlpNet build_xi_net(int input_dim);

struct GenerateCache {
  Matrix z;            // g1/g3 base noise, n x p
  Matrix u;            // g2/g4 sphere directions, n x p
  Matrix xi_input;     // g2/g4 xi-net inputs, n x q
  ForwardCache xi_fwd; // g2/g4
  Vec xi;              // g2/g4 realized xi = |xi_net output|
  Vec xi_sign;         // sign of the raw xi-net output
};

// n generated rows plus the cached noise needed for reparameterized gradients.
Matrix generate(const GeneratorPreset& gen, Rng& rng, int n, GenerateCache& cache);

struct GeneratorGrads {
  Matrix a;       // p x p
  Vec theta;      // size p (g3/g4)
  NetGrads xi;    // g2/g4
};

// Chain rule through x = G(noise; params); upstream holds d(objective)/dx per
// generated row. Sums over the batch, as in backward().
GeneratorGrads generator_backward(const GeneratorPreset& gen, const GenerateCache& cache,
                                  const Matrix& upstream);

void apply_generator_update(GeneratorPreset& gen, const GeneratorGrads& grads, double step);

// Exact round-trip JSON serialization.
std::string net_to_json(const MlpNet& net);
MlpNet net_from_json(const std::string& json_text);

}  // namespace scatter
