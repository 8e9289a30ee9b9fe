#include <doctest.h>

#include <cmath>

#include "artic/autodiff.hpp"
#include "artic/rng.hpp"

using namespace artic;

namespace {

// central finite differences of a scalar-valued graph w.r.t. one leaf
Matrix fd_grad(const Matrix& x, const std::function<double(const Matrix&)>& f, double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    const double fp = f(probe);
    probe.data()[i] = orig - h;
    const double fm = f(probe);
    probe.data()[i] = orig;
    g.data()[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double max_rel_err(const Matrix& got, const Matrix& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double d = got.data()[i] - want.data()[i];
    num += d * d;
    den += want.data()[i] * want.data()[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

}  // namespace

TEST_CASE("conv1d forward matches direct computation and gradients check out") {
  Rng rng(42);
  const int k = 3;
  const std::size_t T = 5, cin = 2, cout = 3;
  Matrix x = rng.gauss_matrix(T, cin, 1.0);
  Matrix W = rng.gauss_matrix(cout, k * cin, 1.0);
  Matrix b = rng.gauss_matrix(1, cout, 1.0);

  auto forward_scalar = [&](const Matrix& xs, const Matrix& Ws, const Matrix& bs) {
    auto out = ad::conv1d(ad::value(xs), ad::value(Ws), ad::value(bs), k);
    Matrix zero(out->val().rows(), out->val().cols(), 0.0);
    auto s = ad::sum_sq_diff(out, zero);
    return s->val()(0, 0);
  };

  // hand-check one output entry: t=0 sees rows -1(pad),0,1
  {
    auto out = ad::conv1d(ad::value(x), ad::value(W), ad::value(b), k);
    double want = b(0, 1);
    for (int dt = 0; dt < k; ++dt) {
      const int s = 0 + dt - 1;
      if (s < 0 || s >= static_cast<int>(T)) continue;
      for (std::size_t i = 0; i < cin; ++i) {
        want += x(static_cast<std::size_t>(s), i) * W(1, static_cast<std::size_t>(dt) * cin + i);
      }
    }
    CHECK(out->val()(0, 1) == doctest::Approx(want).epsilon(1e-12));
  }

  // gradients w.r.t. x, W, b via sum of squares readout
  auto xn = ad::input(x);
  auto Wn = ad::input(W);
  auto bn = ad::input(b);
  auto out = ad::conv1d(xn, Wn, bn, k);
  Matrix zero(out->val().rows(), out->val().cols(), 0.0);
  auto root = ad::sum_sq_diff(out, zero);
  ad::backward(root);

  const Matrix fdx = fd_grad(x, [&](const Matrix& v) { return forward_scalar(v, W, b); });
  const Matrix fdw = fd_grad(W, [&](const Matrix& v) { return forward_scalar(x, v, b); });
  const Matrix fdb = fd_grad(b, [&](const Matrix& v) { return forward_scalar(x, W, v); });
  CHECK(max_rel_err(xn->grad(), fdx) < 1e-7);
  CHECK(max_rel_err(Wn->grad(), fdw) < 1e-7);
  CHECK(max_rel_err(bn->grad(), fdb) < 1e-7);
}

TEST_CASE("tanh, embed, repeat, concat gradients") {
  Rng rng(43);
  Matrix table = rng.gauss_matrix(4, 3, 1.0);
  const std::vector<int> ids = {2, 0, 2, 1};
  const std::vector<int> reps = {2, 1, 3, 1};

  auto build = [&](const Matrix& tbl) {
    auto tn = ad::value(tbl);
    auto e = ad::embed_rows(tn, ids);
    auto r = ad::repeat_rows(e, reps);
    auto c = ad::concat_cols(r, r);
    auto h = ad::tanh_(c);
    Matrix zero(h->val().rows(), h->val().cols(), 0.0);
    return ad::sum_sq_diff(h, zero)->val()(0, 0);
  };

  auto tn = ad::input(table);
  auto e = ad::embed_rows(tn, ids);
  auto r = ad::repeat_rows(e, reps);
  auto c = ad::concat_cols(r, r);
  auto h = ad::tanh_(c);
  Matrix zero(h->val().rows(), h->val().cols(), 0.0);
  auto root = ad::sum_sq_diff(h, zero);
  ad::backward(root);

  CHECK(root->val().size() == 1);
  CHECK(h->val().rows() == 7);  // 2+1+3+1
  CHECK(h->val().cols() == 6);
  const Matrix fd = fd_grad(table, build);
  CHECK(max_rel_err(tn->grad(), fd) < 1e-7);
}

TEST_CASE("log_softmax_gather values and gradient") {
  Rng rng(44);
  Matrix logits = rng.gauss_matrix(4, 5, 2.0);
  const std::vector<int> labels = {0, 3, 2, 4};

  auto value_of = [&](const Matrix& l) {
    auto node = ad::log_softmax_gather(ad::value(l), labels, -1e30);
    double s = 0.0;
    for (std::size_t t = 0; t < node->val().rows(); ++t) s += node->val()(t, 0);
    return s;
  };

  // value equals log softmax computed directly
  {
    auto node = ad::log_softmax_gather(ad::value(logits), labels, -1e30);
    for (std::size_t t = 0; t < 4; ++t) {
      double mx = logits(t, 0);
      for (std::size_t k = 1; k < 5; ++k) mx = std::max(mx, logits(t, k));
      double z = 0.0;
      for (std::size_t k = 0; k < 5; ++k) z += std::exp(logits(t, k) - mx);
      const double want = logits(t, static_cast<std::size_t>(labels[t])) - (mx + std::log(z));
      CHECK(node->val()(t, 0) == doctest::Approx(want).epsilon(1e-12));
    }
  }

  auto ln = ad::input(logits);
  auto node = ad::log_softmax_gather(ln, labels, -1e30);
  auto root = ad::neg_sum(node);
  ad::backward(root);
  const Matrix fd = fd_grad(logits, [&](const Matrix& l) { return -value_of(l); });
  CHECK(max_rel_err(ln->grad(), fd) < 1e-7);
}

TEST_CASE("log_softmax_gather floor kills the gradient") {
  Matrix logits(1, 2);
  logits(0, 0) = 30.0;
  logits(0, 1) = 0.0;  // p_1 ~ e^-30 < 1e-8 floor
  auto ln = ad::input(logits);
  auto node = ad::log_softmax_gather(ln, {1}, std::log(1e-8));
  CHECK(node->val()(0, 0) == doctest::Approx(std::log(1e-8)));
  auto root = ad::neg_sum(node);
  ad::backward(root);
  CHECK(ln->grad()(0, 0) == 0.0);
  CHECK(ln->grad()(0, 1) == 0.0);
}

TEST_CASE("param leaves accumulate into external buffers across graphs") {
  Matrix w(2, 2, 1.0);
  Matrix g(2, 2, 0.0);
  for (int pass = 0; pass < 2; ++pass) {
    auto wn = ad::param(w, g);
    Matrix target(2, 2, 0.0);
    auto root = ad::sum_sq_diff(wn, target);
    ad::backward(root);
  }
  // d/dw sum w^2 = 2w accumulated twice
  CHECK(g(0, 0) == doctest::Approx(4.0));
  CHECK(g(1, 1) == doctest::Approx(4.0));
}

TEST_CASE("shared subgraph (diamond) accumulates both paths") {
  Matrix x(1, 1, 3.0);
  auto xn = ad::input(x);
  // f = sum_sq_diff(x, 0) + 2 * sum_sq_diff(x, 1): df/dx = 2x + 4(x-1) = 14 at x=3
  auto a = ad::sum_sq_diff(xn, Matrix(1, 1, 0.0));
  auto b = ad::sum_sq_diff(xn, Matrix(1, 1, 1.0));
  auto root = ad::lin_comb({a, b}, {1.0, 2.0});
  ad::backward(root);
  CHECK(xn->grad()(0, 0) == doctest::Approx(14.0));
}
