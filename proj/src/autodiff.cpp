#include "artic/autodiff.hpp"

#include <cmath>
#include <unordered_set>

#include "artic/errors.hpp"

namespace artic::ad {

Matrix& Node::grad() {
  if (grad_sink) {
    if (grad_sink->rows() != value->rows() || grad_sink->cols() != value->cols()) {
      *grad_sink = Matrix(value->rows(), value->cols());
    }
    return *grad_sink;
  }
  if (local_grad.rows() != value->rows() || local_grad.cols() != value->cols()) {
    local_grad = Matrix(value->rows(), value->cols());
  }
  return local_grad;
}

void Node::add_grad_to(const NodeP& in, const Matrix& g) {
  if (!in->requires_grad) return;
  Matrix& dst = in->grad();
  for (std::size_t i = 0; i < g.size(); ++i) dst.data()[i] += g.data()[i];
}

namespace {

NodeP make_node(Matrix v, std::vector<NodeP> inputs) {
  auto n = std::make_shared<Node>();
  n->owned = std::move(v);
  n->value = &n->owned;
  n->inputs = std::move(inputs);
  for (const auto& in : n->inputs) {
    if (in->requires_grad) n->requires_grad = true;
  }
  return n;
}

}  // namespace

NodeP value(Matrix v) {
  auto n = std::make_shared<Node>();
  n->owned = std::move(v);
  n->value = &n->owned;
  return n;
}

NodeP constant_ref(const Matrix& m) {
  auto n = std::make_shared<Node>();
  n->value = &m;
  return n;
}

NodeP input(Matrix v) {
  auto n = value(std::move(v));
  n->requires_grad = true;
  return n;
}

NodeP param(const Matrix& w, Matrix& grad_accum) {
  auto n = std::make_shared<Node>();
  n->value = &w;
  n->grad_sink = &grad_accum;
  n->requires_grad = true;
  return n;
}

NodeP conv1d(NodeP x, NodeP W, NodeP b, int k) {
  require(k >= 1 && k % 2 == 1, "conv1d: kernel width must be odd");
  const Matrix& xv = x->val();
  const Matrix& wv = W->val();
  const Matrix& bv = b->val();
  const std::size_t T = xv.rows();
  const std::size_t cin = xv.cols();
  const std::size_t cout = wv.rows();
  require(wv.cols() == static_cast<std::size_t>(k) * cin, "conv1d: weight shape mismatch");
  require(bv.rows() == 1 && bv.cols() == cout, "conv1d: bias shape mismatch");
  const int pad = k / 2;

  Matrix out(T, cout);
  for (std::size_t t = 0; t < T; ++t) {
    const int lo = std::max(0, static_cast<int>(t) - pad);
    const int hi = std::min(static_cast<int>(T) - 1, static_cast<int>(t) + pad);
    double* orow = out.row(t);
    for (std::size_t o = 0; o < cout; ++o) orow[o] = bv(0, o);
    for (int s = lo; s <= hi; ++s) {
      const int dt = s - static_cast<int>(t) + pad;
      const double* xrow = xv.row(static_cast<std::size_t>(s));
      for (std::size_t o = 0; o < cout; ++o) {
        const double* wrow = wv.row(o) + static_cast<std::size_t>(dt) * cin;
        double acc = 0.0;
        for (std::size_t i = 0; i < cin; ++i) acc += xrow[i] * wrow[i];
        orow[o] += acc;
      }
    }
  }

  auto n = make_node(std::move(out), {x, W, b});
  if (n->requires_grad) {
    n->backprop = [k, pad, T, cin, cout](Node& self) {
      const Matrix& g = self.grad();
      auto& x_ = self.inputs[0];
      auto& W_ = self.inputs[1];
      auto& b_ = self.inputs[2];
      const Matrix& xv_ = x_->val();
      const Matrix& wv_ = W_->val();
      (void)k;
      if (b_->requires_grad) {
        Matrix& db = b_->grad();
        for (std::size_t t = 0; t < T; ++t) {
          const double* grow = g.row(t);
          for (std::size_t o = 0; o < cout; ++o) db(0, o) += grow[o];
        }
      }
      const bool need_dx = x_->requires_grad;
      const bool need_dw = W_->requires_grad;
      if (!need_dx && !need_dw) return;
      Matrix* dx = need_dx ? &x_->grad() : nullptr;
      Matrix* dw = need_dw ? &W_->grad() : nullptr;
      for (std::size_t t = 0; t < T; ++t) {
        const int lo = std::max(0, static_cast<int>(t) - pad);
        const int hi = std::min(static_cast<int>(T) - 1, static_cast<int>(t) + pad);
        const double* grow = g.row(t);
        for (int s = lo; s <= hi; ++s) {
          const int dt = s - static_cast<int>(t) + pad;
          const std::size_t off = static_cast<std::size_t>(dt) * cin;
          const double* xrow = xv_.row(static_cast<std::size_t>(s));
          for (std::size_t o = 0; o < cout; ++o) {
            const double go = grow[o];
            if (go == 0.0) continue;
            if (need_dx) {
              const double* wrow = wv_.row(o) + off;
              double* dxrow = dx->row(static_cast<std::size_t>(s));
              for (std::size_t i = 0; i < cin; ++i) dxrow[i] += go * wrow[i];
            }
            if (need_dw) {
              double* dwrow = dw->row(o) + off;
              for (std::size_t i = 0; i < cin; ++i) dwrow[i] += go * xrow[i];
            }
          }
        }
      }
    };
  }
  return n;
}

NodeP tanh_(NodeP x) {
  const Matrix& xv = x->val();
  Matrix out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) out.data()[i] = std::tanh(xv.data()[i]);
  auto n = make_node(std::move(out), {x});
  if (n->requires_grad) {
    n->backprop = [](Node& self) {
      const Matrix& g = self.grad();
      const Matrix& y = self.val();
      Matrix& dx = self.inputs[0]->grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double yi = y.data()[i];
        dx.data()[i] += g.data()[i] * (1.0 - yi * yi);
      }
    };
  }
  return n;
}

NodeP embed_rows(NodeP table, std::vector<int> ids) {
  const Matrix& tv = table->val();
  Matrix out(ids.size(), tv.cols());
  for (std::size_t n = 0; n < ids.size(); ++n) {
    require(ids[n] >= 0 && static_cast<std::size_t>(ids[n]) < tv.rows(),
            "embed_rows: id out of range");
    const double* src = tv.row(static_cast<std::size_t>(ids[n]));
    double* dst = out.row(n);
    for (std::size_t c = 0; c < tv.cols(); ++c) dst[c] = src[c];
  }
  auto n = make_node(std::move(out), {table});
  if (n->requires_grad) {
    n->backprop = [ids = std::move(ids)](Node& self) {
      const Matrix& g = self.grad();
      Matrix& dt = self.inputs[0]->grad();
      for (std::size_t r = 0; r < ids.size(); ++r) {
        double* dst = dt.row(static_cast<std::size_t>(ids[r]));
        const double* src = g.row(r);
        for (std::size_t c = 0; c < g.cols(); ++c) dst[c] += src[c];
      }
    };
  }
  return n;
}

NodeP repeat_rows(NodeP x, std::vector<int> counts) {
  const Matrix& xv = x->val();
  require(counts.size() == xv.rows(), "repeat_rows: count/row mismatch");
  long total = 0;
  for (int c : counts) {
    require(c >= 1, "repeat_rows: counts must be >= 1");
    total += c;
  }
  Matrix out(static_cast<std::size_t>(total), xv.cols());
  std::size_t t = 0;
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (int i = 0; i < counts[r]; ++i, ++t) {
      const double* src = xv.row(r);
      double* dst = out.row(t);
      for (std::size_t c = 0; c < xv.cols(); ++c) dst[c] = src[c];
    }
  }
  auto n = make_node(std::move(out), {x});
  if (n->requires_grad) {
    n->backprop = [counts = std::move(counts)](Node& self) {
      const Matrix& g = self.grad();
      Matrix& dx = self.inputs[0]->grad();
      std::size_t t = 0;
      for (std::size_t r = 0; r < counts.size(); ++r) {
        for (int i = 0; i < counts[r]; ++i, ++t) {
          const double* src = g.row(t);
          double* dst = dx.row(r);
          for (std::size_t c = 0; c < g.cols(); ++c) dst[c] += src[c];
        }
      }
    };
  }
  return n;
}

NodeP concat_cols(NodeP a, NodeP b) {
  const Matrix& av = a->val();
  const Matrix& bv = b->val();
  require(av.rows() == bv.rows(), "concat_cols: row mismatch");
  Matrix out(av.rows(), av.cols() + bv.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double* dst = out.row(r);
    const double* pa = av.row(r);
    const double* pb = bv.row(r);
    for (std::size_t c = 0; c < av.cols(); ++c) dst[c] = pa[c];
    for (std::size_t c = 0; c < bv.cols(); ++c) dst[av.cols() + c] = pb[c];
  }
  auto n = make_node(std::move(out), {a, b});
  if (n->requires_grad) {
    const std::size_t ac = av.cols();
    n->backprop = [ac](Node& self) {
      const Matrix& g = self.grad();
      auto& a_ = self.inputs[0];
      auto& b_ = self.inputs[1];
      if (a_->requires_grad) {
        Matrix& da = a_->grad();
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < ac; ++c) da(r, c) += g(r, c);
        }
      }
      if (b_->requires_grad) {
        Matrix& db = b_->grad();
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < g.cols() - ac; ++c) db(r, c) += g(r, ac + c);
        }
      }
    };
  }
  return n;
}

NodeP log_softmax_gather(NodeP logits, std::vector<int> labels, double ln_floor) {
  const Matrix& lv = logits->val();
  const std::size_t T = lv.rows();
  const std::size_t K = lv.cols();
  require(labels.size() == T, "log_softmax_gather: label/frame mismatch");

  auto probs = std::make_shared<Matrix>(T, K);  // kept for the backward pass
  auto floored = std::make_shared<std::vector<char>>(T, 0);
  Matrix out(T, 1);
  for (std::size_t t = 0; t < T; ++t) {
    const int lab = labels[t];
    require(lab >= 0 && static_cast<std::size_t>(lab) < K, "log_softmax_gather: bad label");
    const double* row = lv.row(t);
    double mx = row[0];
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, row[k]);
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(row[k] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t k = 0; k < K; ++k) (*probs)(t, k) = std::exp(row[k] - lse);
    double lp = row[static_cast<std::size_t>(lab)] - lse;
    if (lp < ln_floor) {
      lp = ln_floor;
      (*floored)[t] = 1;
    }
    out(t, 0) = lp;
  }
  auto n = make_node(std::move(out), {logits});
  if (n->requires_grad) {
    n->backprop = [labels = std::move(labels), probs, floored](Node& self) {
      const Matrix& g = self.grad();
      Matrix& dl = self.inputs[0]->grad();
      const std::size_t K = dl.cols();
      for (std::size_t t = 0; t < g.rows(); ++t) {
        if ((*floored)[t]) continue;
        const double gt = g(t, 0);
        if (gt == 0.0) continue;
        const std::size_t lab = static_cast<std::size_t>(labels[t]);
        for (std::size_t k = 0; k < K; ++k) {
          dl(t, k) += gt * ((k == lab ? 1.0 : 0.0) - (*probs)(t, k));
        }
      }
    };
  }
  return n;
}

NodeP sum_sq_diff(NodeP y, Matrix ref, std::vector<double> frame_weights) {
  const Matrix& yv = y->val();
  require(yv.rows() == ref.rows() && yv.cols() == ref.cols(), "sum_sq_diff: shape mismatch");
  require(frame_weights.empty() || frame_weights.size() == yv.rows(),
          "sum_sq_diff: weight length mismatch");
  auto refp = std::make_shared<Matrix>(std::move(ref));
  double s = 0.0;
  for (std::size_t t = 0; t < yv.rows(); ++t) {
    const double w = frame_weights.empty() ? 1.0 : frame_weights[t];
    s += w * sq_distance(yv.row(t), refp->row(t), yv.cols());
  }
  Matrix out(1, 1);
  out(0, 0) = s;
  auto n = make_node(std::move(out), {y});
  if (n->requires_grad) {
    n->backprop = [refp, fw = std::move(frame_weights)](Node& self) {
      const double g = self.grad()(0, 0);
      const Matrix& yv_ = self.inputs[0]->val();
      Matrix& dy = self.inputs[0]->grad();
      for (std::size_t t = 0; t < yv_.rows(); ++t) {
        const double w = fw.empty() ? 1.0 : fw[t];
        const double* yr = yv_.row(t);
        const double* rr = refp->row(t);
        double* dr = dy.row(t);
        for (std::size_t c = 0; c < yv_.cols(); ++c) {
          dr[c] += g * w * 2.0 * (yr[c] - rr[c]);
        }
      }
    };
  }
  return n;
}

NodeP log_dist_penalty(NodeP y, Matrix ref, std::vector<double> weights, double eps) {
  const Matrix& yv = y->val();
  require(yv.rows() == ref.rows() && yv.cols() == ref.cols(), "log_dist_penalty: shape mismatch");
  require(weights.size() == yv.rows(), "log_dist_penalty: weight length mismatch");
  require(eps > 0.0, "log_dist_penalty: eps must be positive");
  auto refp = std::make_shared<Matrix>(std::move(ref));
  double s = 0.0;
  for (std::size_t t = 0; t < yv.rows(); ++t) {
    const double r = std::sqrt(sq_distance(yv.row(t), refp->row(t), yv.cols()));
    s += -weights[t] * std::log(std::max(r, eps));
  }
  Matrix out(1, 1);
  out(0, 0) = s;
  auto n = make_node(std::move(out), {y});
  if (n->requires_grad) {
    n->backprop = [refp, w = std::move(weights), eps](Node& self) {
      const double g = self.grad()(0, 0);
      const Matrix& yv_ = self.inputs[0]->val();
      Matrix& dy = self.inputs[0]->grad();
      for (std::size_t t = 0; t < yv_.rows(); ++t) {
        const double r2 = sq_distance(yv_.row(t), refp->row(t), yv_.cols());
        const double r = std::sqrt(r2);
        if (r <= eps) continue;  // floored: d/dy of a constant
        const double* yr = yv_.row(t);
        const double* rr = refp->row(t);
        double* dr = dy.row(t);
        const double c = -g * w[t] / r2;
        for (std::size_t m = 0; m < yv_.cols(); ++m) dr[m] += c * (yr[m] - rr[m]);
      }
    };
  }
  return n;
}

NodeP neg_sum(NodeP x, std::vector<double> frame_weights) {
  const Matrix& xv = x->val();
  require(xv.cols() == 1, "neg_sum: expects a column");
  require(frame_weights.empty() || frame_weights.size() == xv.rows(),
          "neg_sum: weight length mismatch");
  double s = 0.0;
  for (std::size_t t = 0; t < xv.rows(); ++t) {
    s += -(frame_weights.empty() ? 1.0 : frame_weights[t]) * xv(t, 0);
  }
  Matrix out(1, 1);
  out(0, 0) = s;
  auto n = make_node(std::move(out), {x});
  if (n->requires_grad) {
    n->backprop = [fw = std::move(frame_weights)](Node& self) {
      const double g = self.grad()(0, 0);
      Matrix& dx = self.inputs[0]->grad();
      for (std::size_t t = 0; t < dx.rows(); ++t) {
        dx(t, 0) += -g * (fw.empty() ? 1.0 : fw[t]);
      }
    };
  }
  return n;
}

NodeP lin_comb(std::vector<NodeP> scalars, std::vector<double> coeffs) {
  require(scalars.size() == coeffs.size() && !scalars.empty(), "lin_comb: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    require(scalars[i]->val().size() == 1, "lin_comb: inputs must be scalars");
    s += coeffs[i] * scalars[i]->val()(0, 0);
  }
  Matrix out(1, 1);
  out(0, 0) = s;
  auto n = make_node(std::move(out), std::move(scalars));
  if (n->requires_grad) {
    n->backprop = [coeffs = std::move(coeffs)](Node& self) {
      const double g = self.grad()(0, 0);
      for (std::size_t i = 0; i < self.inputs.size(); ++i) {
        if (!self.inputs[i]->requires_grad) continue;
        self.inputs[i]->grad()(0, 0) += g * coeffs[i];
      }
    };
  }
  return n;
}

void backward(const NodeP& root, double seed) {
  require(root->val().size() == 1, "backward: root must be scalar");
  if (!root->requires_grad) return;

  // iterative post-order DFS; reverse finish order is a valid topo order
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<NodeP, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->inputs.size()) {
      NodeP child = node->inputs[idx++];
      if (child->requires_grad && !visited.count(child.get())) {
        visited.insert(child.get());
        stack.emplace_back(std::move(child), 0);
      }
    } else {
      order.push_back(node.get());
      stack.pop_back();
    }
  }

  root->grad()(0, 0) += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

}  // namespace artic::ad
