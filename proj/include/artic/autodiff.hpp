#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "artic/matrix.hpp"

namespace artic::ad {

// Reverse-mode tape over Matrix values. Graphs are built per utterance,
// backward() runs once, then the graph is dropped. Parameter leaves reference
// the model's weight matrices directly and accumulate into external gradient
// buffers, so a batch is just several graphs flushed into the same buffers.
struct Node {
  Matrix owned;                         // storage for computed results
  const Matrix* value = nullptr;        // points at owned or an external matrix
  Matrix* grad_sink = nullptr;          // external accumulator for param leaves
  Matrix local_grad;                    // gradient buffer for everything else
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backprop;

  const Matrix& val() const { return *value; }
  Matrix& grad();                       // correctly shaped, zero on first use
  void add_grad_to(const std::shared_ptr<Node>& in, const Matrix& g);
};

using NodeP = std::shared_ptr<Node>;

// ---- leaves ----------------------------------------------------------------
NodeP value(Matrix v);                            // owned constant
NodeP constant_ref(const Matrix& m);              // external constant, no copy
NodeP input(Matrix v);                            // owned leaf with gradient
NodeP param(const Matrix& w, Matrix& grad_accum); // external weights + grads

// ---- ops -------------------------------------------------------------------
// Temporal convolution with same padding; k odd. x: T x Cin, W: Cout x (k*Cin),
// b: 1 x Cout. Row t of the output sees input rows [t-k/2, t+k/2].
NodeP conv1d(NodeP x, NodeP W, NodeP b, int k);
NodeP tanh_(NodeP x);
NodeP embed_rows(NodeP table, std::vector<int> ids);
NodeP repeat_rows(NodeP x, std::vector<int> counts);
NodeP concat_cols(NodeP a, NodeP b);

// Per-row log softmax gathered at the given label, floored at ln_floor
// (gradient is zero on floored rows). Returns T x 1.
NodeP log_softmax_gather(NodeP logits, std::vector<int> labels, double ln_floor);

// Scalar losses (1 x 1 outputs). The reference matrix is copied into the
// node, so temporaries are safe. `frame_weights` empty means all-ones.
NodeP sum_sq_diff(NodeP y, Matrix ref, std::vector<double> frame_weights = {});
// sum_t -w_t * ln(max(||y_t - ref_t||, eps)); gradient zero where the floor is active.
NodeP log_dist_penalty(NodeP y, Matrix ref, std::vector<double> weights, double eps);
// sum_t -w_t * x_t for a T x 1 node.
NodeP neg_sum(NodeP x, std::vector<double> frame_weights = {});
// c0*s0 + c1*s1 + ... over scalar nodes.
NodeP lin_comb(std::vector<NodeP> scalars, std::vector<double> coeffs);

// Runs backpropagation from a 1 x 1 root with d(root)/d(root) = seed.
void backward(const NodeP& root, double seed = 1.0);

}  // namespace artic::ad
