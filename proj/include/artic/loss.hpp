#pragma once

#include <functional>
#include <vector>

#include "artic/autodiff.hpp"
#include "artic/types.hpp"

namespace artic {

// Per-frame impairment severity weights, alpha_t = exp(-lambda * p*_t).
// Strictly decreasing in the truth-label posterior: frames the classifier
// doubts get weight near 1, confidently correct frames get weight near 0.
struct SeverityWeights {
  std::vector<double> alpha;
};

SeverityWeights severity_weights(const std::vector<double>& p_star, double lambda);

// sum_t ||y*_t - y_t||^2 (squared Euclidean frame distance).
double reconstruction_loss(const MelSpectrogram& y_star, const MelSpectrogram& y);

// sum_t -w_t * ln(max(||y*_t - y_t||, eps_floor)). Natural log, plain L2 norm.
// Penalizes the prediction for matching the reference closely on frames with
// large severity weight.
double regularization_loss(const MelSpectrogram& y_star, const MelSpectrogram& y,
                           const SeverityWeights& w, double eps_floor);

// sum_t -ln(max(p_t, eps_floor)) over truth-label posteriors of generated
// speech. Equals the KL divergence from the generator's point-mass label
// belief to the classifier's belief.
double consistency_loss(const std::vector<double>& p_gen, double eps_floor);

LossBreakdown total_loss(const MelSpectrogram& y_star, const MelSpectrogram& y,
                         const std::vector<double>& p_star, const std::vector<double>& p_gen,
                         const HyperParams& hp);

// Unnormalized log impairment density for one frame:
//   alpha * ln r - r^2 / (2 sigma2),  r = ||y*_frame - y_frame||.
// Returns -inf when r == 0 and alpha > 0 (the density vanishes at an exact
// match). alpha == 0 reduces to an isotropic Gaussian log-kernel.
double impairment_log_density(const std::vector<double>& y_star_frame,
                              const std::vector<double>& y_frame, double alpha, double sigma2);

// Builds the graph fragment mapping a T x M mel node to T x K frame logits
// with fixed weights. Supplied by the classifier; kept as a function type so
// the loss layer stays independent of any particular network.
using LogitsGraphFn = std::function<ad::NodeP(const ad::NodeP& mel)>;

// d(l_total)/dy with classifier weights held fixed. `labels` aligns frames
// with inventory indices for the consistency term.
Matrix loss_gradient(const MelSpectrogram& y_star, const MelSpectrogram& y,
                     const std::vector<double>& p_star, const LogitsGraphFn& logits_fn,
                     const std::vector<int>& labels, const HyperParams& hp);

}  // namespace artic
