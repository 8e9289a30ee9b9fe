#include "artic/loss.hpp"

#include <cmath>
#include <limits>

#include "artic/errors.hpp"

namespace artic {

SeverityWeights severity_weights(const std::vector<double>& p_star, double lambda) {
  require(lambda > 0.0, "severity_weights: lambda must be > 0");
  SeverityWeights w;
  w.alpha.reserve(p_star.size());
  for (double p : p_star) {
    require(p >= 0.0 && p <= 1.0, "severity_weights: posterior out of [0,1]");
    w.alpha.push_back(std::exp(-lambda * p));
  }
  return w;
}

double reconstruction_loss(const MelSpectrogram& y_star, const MelSpectrogram& y) {
  if (!y_star.values.same_shape(y.values)) {
    throw ShapeError("reconstruction_loss: shape mismatch");
  }
  double s = 0.0;
  for (std::size_t t = 0; t < y.frames(); ++t) {
    s += sq_distance(y_star.values.row(t), y.values.row(t), y.bins());
  }
  return s;
}

double regularization_loss(const MelSpectrogram& y_star, const MelSpectrogram& y,
                           const SeverityWeights& w, double eps_floor) {
  if (!y_star.values.same_shape(y.values)) {
    throw ShapeError("regularization_loss: shape mismatch");
  }
  require(w.alpha.size() == y.frames(), "regularization_loss: weight length mismatch");
  require(eps_floor > 0.0, "regularization_loss: eps_floor must be positive");
  double s = 0.0;
  for (std::size_t t = 0; t < y.frames(); ++t) {
    const double r = std::sqrt(sq_distance(y_star.values.row(t), y.values.row(t), y.bins()));
    s += -w.alpha[t] * std::log(std::max(r, eps_floor));
  }
  return s;
}

double consistency_loss(const std::vector<double>& p_gen, double eps_floor) {
  require(eps_floor > 0.0, "consistency_loss: eps_floor must be positive");
  double s = 0.0;
  for (double p : p_gen) {
    require(p >= 0.0 && p <= 1.0, "consistency_loss: posterior out of [0,1]");
    s += -std::log(std::max(p, eps_floor));
  }
  return s;
}

LossBreakdown total_loss(const MelSpectrogram& y_star, const MelSpectrogram& y,
                         const std::vector<double>& p_star, const std::vector<double>& p_gen,
                         const HyperParams& hp) {
  hp.validate();
  require(p_star.size() == y.frames(), "total_loss: p_star length mismatch");
  require(p_gen.size() == y.frames(), "total_loss: p_gen length mismatch");
  LossBreakdown out;
  out.l_rec = reconstruction_loss(y_star, y);
  out.l_reg = regularization_loss(y_star, y, severity_weights(p_star, hp.lambda), hp.eps_floor);
  out.l_consis = consistency_loss(p_gen, hp.eps_floor);
  out.l_total = out.l_rec + hp.beta * out.l_reg + hp.gamma * out.l_consis;
  out.beta = hp.beta;
  out.gamma = hp.gamma;
  out.frame_count = static_cast<long>(y.frames());
  return out;
}

double impairment_log_density(const std::vector<double>& y_star_frame,
                              const std::vector<double>& y_frame, double alpha, double sigma2) {
  require(y_star_frame.size() == y_frame.size(), "impairment_log_density: frame length mismatch");
  require(alpha >= 0.0, "impairment_log_density: alpha must be >= 0");
  require(sigma2 > 0.0, "impairment_log_density: sigma2 must be > 0");
  const double r2 = sq_distance(y_star_frame.data(), y_frame.data(), y_frame.size());
  const double r = std::sqrt(r2);
  const double gauss_term = -r2 / (2.0 * sigma2);
  if (alpha == 0.0) return gauss_term;
  if (r == 0.0) return -std::numeric_limits<double>::infinity();
  return alpha * std::log(r) + gauss_term;
}

Matrix loss_gradient(const MelSpectrogram& y_star, const MelSpectrogram& y,
                     const std::vector<double>& p_star, const LogitsGraphFn& logits_fn,
                     const std::vector<int>& labels, const HyperParams& hp) {
  hp.validate();
  if (!y_star.values.same_shape(y.values)) throw ShapeError("loss_gradient: shape mismatch");
  require(labels.size() == y.frames(), "loss_gradient: label length mismatch");

  auto y_node = ad::input(y.values);
  auto l_rec = ad::sum_sq_diff(y_node, y_star.values);
  auto l_reg = ad::log_dist_penalty(y_node, y_star.values,
                                    severity_weights(p_star, hp.lambda).alpha, hp.eps_floor);
  auto logp = ad::log_softmax_gather(logits_fn(y_node), labels, std::log(hp.eps_floor));
  auto l_consis = ad::neg_sum(logp);
  auto total = ad::lin_comb({l_rec, l_reg, l_consis}, {1.0, hp.beta, hp.gamma});
  ad::backward(total);
  return y_node->grad();
}

}  // namespace artic
