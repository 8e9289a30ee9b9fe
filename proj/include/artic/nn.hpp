#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "artic/autodiff.hpp"
#include "artic/matrix.hpp"
#include "artic/rng.hpp"

namespace artic::nn {

// A weight matrix with its gradient accumulator.
struct Param {
  Matrix w;
  Matrix g;

  void zero_grad() {
    if (g.rows() != w.rows() || g.cols() != w.cols()) g = Matrix(w.rows(), w.cols());
    else g.fill(0.0);
  }
};

// Temporal convolution, stride 1, same padding, odd kernel width.
struct ConvLayer {
  int in_ch = 0;
  int out_ch = 0;
  int k = 1;
  Param W;  // out_ch x (k * in_ch)
  Param b;  // 1 x out_ch

  static ConvLayer init(int in_ch, int out_ch, int k, Rng& rng);

  Matrix forward(const Matrix& x) const;
  ad::NodeP graph(ad::NodeP x, bool trainable);
  ad::NodeP graph_frozen(const ad::NodeP& x) const;
};

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // `params` must be the same list, in the same order, on every call.
  void step(const std::vector<Param*>& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

void zero_grads(const std::vector<Param*>& params);

// Row-wise softmax (numerically stable).
Matrix softmax_rows(const Matrix& logits);

// FNV hash over the raw bytes of all parameter values, in list order.
std::uint64_t params_hash(const std::vector<const Param*>& params);

// ---- checkpoint container ---------------------------------------------------
// "ARTC" magic, u32 version, u32 meta length, UTF-8 JSON metadata, u32 tensor
// count, then per tensor: u16 name length, name, u32 rows, u32 cols, f64 LE data.
struct NamedTensor {
  std::string name;
  const Matrix* m;
};

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                     const std::vector<NamedTensor>& tensors);

struct Checkpoint {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Matrix>> tensors;

  const Matrix& get(const std::string& name) const;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace artic::nn
