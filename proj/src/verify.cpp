#include "artic/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "artic/classifier.hpp"
#include "artic/loss.hpp"
#include "artic/rng.hpp"
#include "artic/simulator.hpp"

namespace artic {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

MelSpectrogram random_mel(Rng& rng, std::size_t t, std::size_t m, double scale) {
  MelSpectrogram mel;
  mel.values = rng.gauss_matrix(t, m, scale);
  return mel;
}

// analytic gradient of -sum_t log Eq.1 density, derived by hand:
// d/dy_t = (y_t - y*_t)/sigma2 - alpha_t (y_t - y*_t)/r_t^2
Matrix density_gradient(const MelSpectrogram& y_star, const MelSpectrogram& y,
                        const std::vector<double>& alpha, double sigma2) {
  Matrix g(y.frames(), y.bins());
  for (std::size_t t = 0; t < y.frames(); ++t) {
    const double r2 = sq_distance(y_star.values.row(t), y.values.row(t), y.bins());
    for (std::size_t m = 0; m < y.bins(); ++m) {
      const double d = y.values(t, m) - y_star.values(t, m);
      g(t, m) = d / sigma2 - alpha[t] * d / r2;
    }
  }
  return g;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double mx = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mx = std::max(mx, std::abs(a.data()[i] - b.data()[i]));
  }
  return mx;
}

double rel_error(const Matrix& got, const Matrix& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double d = got.data()[i] - want.data()[i];
    num += d * d;
    den += want.data()[i] * want.data()[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

}  // namespace

std::vector<CheckResult> verify_mle_equivalence(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x31E));
  const double eps = 1e-8;
  double worst_identity = 0.0;
  double worst_scaled = 0.0;
  double worst_value = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t T = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const std::size_t M = static_cast<std::size_t>(rng.uniform_int(1, 8));
    const auto y_star = random_mel(rng, T, M, 1.0);
    auto y = random_mel(rng, T, M, 1.0);
    // keep every radius clear of the floor
    for (std::size_t t = 0; t < T; ++t) {
      if (row_distance(y_star.values, y.values, t) < 1e-3) y.values(t, 0) += 0.5;
    }
    const double lambda = rng.uniform(1.0, 30.0);
    const double sigma2 = rng.uniform(0.1, 2.0);
    std::vector<double> p_star(T);
    for (auto& p : p_star) p = rng.uniform();
    const auto w = severity_weights(p_star, lambda);

    // loss route, through the actual implementation path
    auto y_node = ad::input(y.values);
    auto l_rec = ad::sum_sq_diff(y_node, y_star.values);
    auto l_reg = ad::log_dist_penalty(y_node, y_star.values, w.alpha, eps);
    auto combined = ad::lin_comb({l_rec, l_reg}, {1.0 / (2.0 * sigma2), 1.0});
    ad::backward(combined);
    const Matrix loss_grad = y_node->grad();

    // density route, hand-derived from the impairment model
    const Matrix dens_grad = density_gradient(y_star, y, w.alpha, sigma2);
    worst_identity = std::max(worst_identity, max_abs_diff(loss_grad, dens_grad));

    // value-level identity on the same configurations
    double neg_logdens = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> fs(y_star.values.row(t), y_star.values.row(t) + M);
      std::vector<double> fy(y.values.row(t), y.values.row(t) + M);
      neg_logdens -= impairment_log_density(fs, fy, w.alpha[t], sigma2);
    }
    worst_value = std::max(worst_value, std::abs(neg_logdens - combined->val()(0, 0)));

    // beta absorbs 2 sigma2: with sigma2 = beta/2,
    // beta * grad(-log density) == grad(L_rec + beta L_reg)
    const double beta = 2.0 * sigma2;
    auto y_node2 = ad::input(y.values);
    auto l_rec2 = ad::sum_sq_diff(y_node2, y_star.values);
    auto l_reg2 = ad::log_dist_penalty(y_node2, y_star.values, w.alpha, eps);
    auto total2 = ad::lin_comb({l_rec2, l_reg2}, {1.0, beta});
    ad::backward(total2);
    Matrix scaled = dens_grad;
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled.data()[i] *= beta;
    worst_scaled = std::max(worst_scaled, max_abs_diff(y_node2->grad(), scaled));
  }
  std::vector<CheckResult> out;
  out.push_back({"mle-gradient-identity", worst_identity <= 1e-9,
                 fmt("max |grad diff| = %.3g (tol 1e-9)", worst_identity)});
  out.push_back({"mle-value-identity", worst_value <= 1e-9,
                 fmt("max |value diff| = %.3g (tol 1e-9)", worst_value)});
  out.push_back({"mle-beta-absorption", worst_scaled <= 1e-9,
                 fmt("max |grad diff| = %.3g (tol 1e-9)", worst_scaled)});
  return out;
}

std::vector<CheckResult> verify_loss_gradients(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x96AD));
  const double h = 1e-4;
  HyperParams hp;

  // small random-weight classifier as the differentiable critic
  const auto inv = PhonemeInventory::create({"sil", "a", "b", "c", "d"}, "sil");
  const int mel_bins = 6;
  Classifier cls = Classifier::random_init(inv, mel_bins, derive_seed(seed, 0xC7));
  const LogitsGraphFn logits_fn = [&cls](const ad::NodeP& mel) {
    return cls.logits_graph_frozen(mel);
  };

  double worst_rec = 0.0, worst_reg = 0.0, worst_consis = 0.0, worst_total = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t T = static_cast<std::size_t>(rng.uniform_int(1, 5));
    const std::size_t M = static_cast<std::size_t>(mel_bins);
    const auto y_star = random_mel(rng, T, M, 1.0);
    auto y = random_mel(rng, T, M, 1.0);
    for (std::size_t t = 0; t < T; ++t) {
      if (row_distance(y_star.values, y.values, t) < 1e-2) y.values(t, 0) += 0.5;
    }
    std::vector<double> p_star(T);
    for (auto& p : p_star) p = rng.uniform();
    const auto w = severity_weights(p_star, hp.lambda);
    std::vector<int> labels(T);
    for (auto& l : labels) l = static_cast<int>(rng.uniform_int(0, inv.size() - 1));

    auto fd_gradient = [&](auto&& f) {
      Matrix g(T, M);
      Matrix probe = y.values;
      for (std::size_t i = 0; i < probe.size(); ++i) {
        const double orig = probe.data()[i];
        probe.data()[i] = orig + h;
        const double fp = f(probe);
        probe.data()[i] = orig - h;
        const double fm = f(probe);
        probe.data()[i] = orig;
        g.data()[i] = (fp - fm) / (2.0 * h);
      }
      return g;
    };

    {  // L_rec
      auto y_node = ad::input(y.values);
      auto node = ad::sum_sq_diff(y_node, y_star.values);
      ad::backward(node);
      const Matrix fd = fd_gradient([&](const Matrix& v) {
        MelSpectrogram m2{v};
        return reconstruction_loss(y_star, m2);
      });
      worst_rec = std::max(worst_rec, rel_error(y_node->grad(), fd));
    }
    {  // L_reg
      auto y_node = ad::input(y.values);
      auto node = ad::log_dist_penalty(y_node, y_star.values, w.alpha, hp.eps_floor);
      ad::backward(node);
      const Matrix fd = fd_gradient([&](const Matrix& v) {
        MelSpectrogram m2{v};
        return regularization_loss(y_star, m2, w, hp.eps_floor);
      });
      worst_reg = std::max(worst_reg, rel_error(y_node->grad(), fd));
    }
    auto gathered = [&](const Matrix& v) {
      MelSpectrogram m2{v};
      FramePosteriors post = cls.infer_posteriors(m2);
      ExpandedLabels el;
      el.ids = labels;
      return gather_truth(post, el);
    };
    {  // L_consis through the classifier
      auto y_node = ad::input(y.values);
      auto lp = ad::log_softmax_gather(cls.logits_graph_frozen(y_node), labels,
                                       std::log(hp.eps_floor));
      auto node = ad::neg_sum(lp);
      ad::backward(node);
      const Matrix fd = fd_gradient(
          [&](const Matrix& v) { return consistency_loss(gathered(v), hp.eps_floor); });
      worst_consis = std::max(worst_consis, rel_error(y_node->grad(), fd));
    }
    {  // L_total through loss_gradient()
      const Matrix analytic = loss_gradient(y_star, y, p_star, logits_fn, labels, hp);
      const Matrix fd = fd_gradient([&](const Matrix& v) {
        MelSpectrogram m2{v};
        return total_loss(y_star, m2, p_star, gathered(v), hp).l_total;
      });
      worst_total = std::max(worst_total, rel_error(analytic, fd));
    }
  }

  std::vector<CheckResult> out;
  out.push_back({"grad-l_rec", worst_rec < 1e-4, fmt("max rel err = %.3g (tol 1e-4)", worst_rec)});
  out.push_back({"grad-l_reg", worst_reg < 1e-4, fmt("max rel err = %.3g (tol 1e-4)", worst_reg)});
  out.push_back({"grad-l_consis", worst_consis < 1e-4,
                 fmt("max rel err = %.3g (tol 1e-4)", worst_consis)});
  out.push_back({"grad-l_total", worst_total < 1e-4,
                 fmt("max rel err = %.3g (tol 1e-4)", worst_total)});
  return out;
}

double reg_lower_gamma(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 0.0;
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {  // series representation
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // continued fraction for Q(a,x), Lentz's method
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h2 = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h2 *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  const double q = std::exp(-x + a * std::log(x) - gln) * h2;
  return 1.0 - q;
}

std::vector<CheckResult> verify_sampler(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const int M = 20;
  const double sigma2 = 1.0;
  const int n = 100000;
  const std::vector<double> alphas = {0.0, 1.0, 5.0, 25.0};
  const std::vector<double> clean(M, 0.3);

  double prev_mean_r = -1.0;
  for (double alpha : alphas) {
    Rng rng(derive_seed(seed, 0x5A3 + static_cast<std::uint64_t>(alpha * 16)));
    std::vector<double> r2(n);
    double mean_r2 = 0.0, mean_r = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto y = sample_impaired_frame(clean, alpha, sigma2, rng);
      double s = 0.0;
      for (int m = 0; m < M; ++m) {
        const double d = y[static_cast<std::size_t>(m)] - clean[static_cast<std::size_t>(m)];
        s += d * d;
      }
      r2[static_cast<std::size_t>(i)] = s;
      mean_r2 += s;
      mean_r += std::sqrt(s);
    }
    mean_r2 /= n;
    mean_r /= n;
    const double expected = (alpha + M) * sigma2;
    const double rel = std::abs(mean_r2 - expected) / expected;
    out.push_back({fmt("sampler-moment-alpha%.0f", alpha), rel < 0.02,
                   fmt("E[r^2] rel err = %.4f (tol 0.02)", rel)});

    // KS against Gamma((alpha+M)/2, 2 sigma2) with fully specified parameters
    std::sort(r2.begin(), r2.end());
    const double shape = (alpha + M) / 2.0;
    const double scale = 2.0 * sigma2;
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
      const double f = reg_lower_gamma(shape, r2[static_cast<std::size_t>(i)] / scale);
      const double lo = static_cast<double>(i) / n;
      const double hi = static_cast<double>(i + 1) / n;
      ks = std::max(ks, std::max(std::abs(f - lo), std::abs(f - hi)));
    }
    const double stat = ks * std::sqrt(static_cast<double>(n));
    out.push_back({fmt("sampler-gof-alpha%.0f", alpha), stat < 1.628,
                   fmt("sqrt(n)*D = %.3f (crit 1.628 at 0.01)", stat)});

    if (alpha == 0.0 || alpha == 25.0) {
      if (prev_mean_r >= 0.0) {
        out.push_back({"sampler-severity-pushes-out", mean_r > prev_mean_r,
                       fmt("mean r: alpha=25 %.3f > alpha=0 %.3f", mean_r, prev_mean_r)});
      }
      prev_mean_r = mean_r;
    }
  }
  return out;
}

std::vector<CheckResult> verify_loss_properties(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x11F));
  std::vector<CheckResult> out;
  HyperParams hp;

  bool antitone = true;
  for (int trial = 0; trial < 200; ++trial) {
    const double pa = rng.uniform();
    const double pb = rng.uniform();
    const double lambda = rng.uniform(0.5, 40.0);
    const auto w = severity_weights({pa, pb}, lambda);
    if (pa < pb && !(w.alpha[0] > w.alpha[1])) antitone = false;
    if (!(w.alpha[0] > 0.0 && w.alpha[0] <= 1.0)) antitone = false;
  }
  out.push_back({"severity-antitone", antitone, "alpha strictly decreasing in p*, range (0,1]"});

  bool consis_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(static_cast<std::size_t>(rng.uniform_int(1, 16)));
    for (auto& v : p) v = rng.uniform();
    if (consistency_loss(p, hp.eps_floor) < 0.0) consis_ok = false;
  }
  if (consistency_loss({1.0, 1.0, 1.0}, hp.eps_floor) != 0.0) consis_ok = false;
  out.push_back({"consistency-nonnegative", consis_ok, "zero iff all posteriors are 1"});

  bool recomp = true;
  bool perm_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t T = static_cast<std::size_t>(rng.uniform_int(2, 10));
    const std::size_t M = 4;
    const auto y_star = random_mel(rng, T, M, 1.0);
    const auto y = random_mel(rng, T, M, 1.0);
    std::vector<double> p_star(T), p_gen(T);
    for (auto& p : p_star) p = rng.uniform();
    for (auto& p : p_gen) p = rng.uniform();
    const auto lb = total_loss(y_star, y, p_star, p_gen, hp);
    const double recomposed = lb.l_rec + lb.beta * lb.l_reg + lb.gamma * lb.l_consis;
    if (std::abs(recomposed - lb.l_total) > 1e-9) recomp = false;

    // joint frame permutation leaves all three parts unchanged
    std::vector<std::size_t> perm(T);
    for (std::size_t i = 0; i < T; ++i) perm[i] = i;
    for (std::size_t i = T; i > 1; --i) {
      std::swap(perm[i - 1], perm[static_cast<std::size_t>(
                                 rng.uniform_int(0, static_cast<long>(i) - 1))]);
    }
    MelSpectrogram ys2, y2;
    ys2.values = Matrix(T, M);
    y2.values = Matrix(T, M);
    std::vector<double> ps2(T), pg2(T);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t m = 0; m < M; ++m) {
        ys2.values(t, m) = y_star.values(perm[t], m);
        y2.values(t, m) = y.values(perm[t], m);
      }
      ps2[t] = p_star[perm[t]];
      pg2[t] = p_gen[perm[t]];
    }
    const auto lb2 = total_loss(ys2, y2, ps2, pg2, hp);
    if (std::abs(lb2.l_rec - lb.l_rec) > 1e-9 || std::abs(lb2.l_reg - lb.l_reg) > 1e-9 ||
        std::abs(lb2.l_consis - lb.l_consis) > 1e-9) {
      perm_ok = false;
    }
  }
  out.push_back({"breakdown-recomposition", recomp, "l_total == l_rec + b*l_reg + g*l_consis"});
  out.push_back({"frame-permutation-invariance", perm_ok, "all losses permutation invariant"});
  return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.pass) return false;
  }
  return true;
}

}  // namespace artic
