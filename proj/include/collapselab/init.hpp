#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "collapselab/net.hpp"
#include "collapselab/random.hpp"

namespace collapselab {

enum class Scheme {
  he_normal,
  lecun_normal,
  glorot_uniform,
  symmetric_normal,
  symmetric_uniform,
  rademacher,
  orthogonal,
  lsuv,
};

enum class BiasMode { zero, symmetric };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view s);
std::string_view to_string(BiasMode m);
BiasMode parse_bias_mode(std::string_view s);

/// True for schemes whose weight densities are symmetric about zero.
bool is_symmetric(Scheme s);

struct InitializerSpec {
  Scheme scheme = Scheme::he_normal;
  BiasMode bias_mode = BiasMode::zero;
  /// sigma_w^2: weight variance is weight_gain / fan_in for symmetric_normal,
  /// symmetric_uniform and rademacher.
  double weight_gain = 2.0;
  /// sigma_b^2, used when bias_mode is symmetric.
  double bias_variance = 1.0;
  std::uint64_t seed = 0;
  /// Negate every symmetric draw (mirror stream).
  bool sign_flip = false;
};

/// Draws layers one at a time, in the order init_parameters uses. Lets a
/// caller stop early without changing the layers it did draw.
class ParameterStream {
 public:
  ParameterStream(const Architecture& arch, const InitializerSpec& spec);

  bool done() const { return layer_ >= arch_.depth(); }
  int layer() const { return layer_; }
  LayerParams next();

 private:
  Architecture arch_;
  InitializerSpec spec_;
  CounterRng rng_;
  int layer_ = 0;
};

/// Deterministic in (arch, spec). Draw order per layer: weights row-major,
/// then biases. lsuv yields the orthogonal start; call lsuv_rescale with a
/// probe batch to finish it.
Network init_parameters(const Architecture& arch, const InitializerSpec& spec,
                        Activation activation = Activation::relu);

/// Rows orthonormal when rows <= cols, columns orthonormal otherwise. QR of a
/// standard-normal matrix with the sign of diag(R) folded into Q, which makes
/// the result Haar-distributed.
Matrix orthogonal_matrix(int rows, int cols, std::uint64_t seed);
Matrix orthogonal_matrix(int rows, int cols, CounterRng& rng);

struct LsuvLayerInfo {
  /// Product of all factors applied to the layer.
  double scale = 1.0;
  int iterations = 0;
  /// Pre-activation std after the last iteration.
  double final_std = 0.0;
  /// Output identically zero on the probe batch; left untouched.
  bool dead = false;
  bool converged = false;
};

struct LsuvResult {
  Network net;
  std::vector<LsuvLayerInfo> layers;
};

inline constexpr double kLsuvTolerance = 0.05;
inline constexpr int kLsuvMaxIterations = 10;

/// Layer by layer, divides W^l and b^l by the std of h^l on the probe batch
/// until it lies in [0.95, 1.05] or 10 iterations pass.
LsuvResult lsuv_rescale(const Network& net, const Matrix& probe_batch);

}  // namespace collapselab
