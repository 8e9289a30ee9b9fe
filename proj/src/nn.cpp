#include "artic/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "artic/errors.hpp"
#include "artic/types.hpp"

namespace artic::nn {
using artic::fnv1a;

ConvLayer ConvLayer::init(int in_ch, int out_ch, int k, Rng& rng) {
  require(k % 2 == 1, "ConvLayer: kernel width must be odd");
  ConvLayer l;
  l.in_ch = in_ch;
  l.out_ch = out_ch;
  l.k = k;
  const double scale = 1.0 / std::sqrt(static_cast<double>(k * in_ch));
  l.W.w = rng.gauss_matrix(static_cast<std::size_t>(out_ch),
                           static_cast<std::size_t>(k * in_ch), scale);
  l.b.w = Matrix(1, static_cast<std::size_t>(out_ch));
  l.W.zero_grad();
  l.b.zero_grad();
  return l;
}

Matrix ConvLayer::forward(const Matrix& x) const {
  require(x.cols() == static_cast<std::size_t>(in_ch), "ConvLayer: input channel mismatch");
  const std::size_t T = x.rows();
  const std::size_t cin = x.cols();
  const std::size_t cout = static_cast<std::size_t>(out_ch);
  const int pad = k / 2;
  Matrix out(T, cout);
  for (std::size_t t = 0; t < T; ++t) {
    const int lo = std::max(0, static_cast<int>(t) - pad);
    const int hi = std::min(static_cast<int>(T) - 1, static_cast<int>(t) + pad);
    double* orow = out.row(t);
    for (std::size_t o = 0; o < cout; ++o) orow[o] = b.w(0, o);
    for (int s = lo; s <= hi; ++s) {
      const int dt = s - static_cast<int>(t) + pad;
      const double* xrow = x.row(static_cast<std::size_t>(s));
      for (std::size_t o = 0; o < cout; ++o) {
        const double* wrow = W.w.row(o) + static_cast<std::size_t>(dt) * cin;
        double acc = 0.0;
        for (std::size_t i = 0; i < cin; ++i) acc += xrow[i] * wrow[i];
        orow[o] += acc;
      }
    }
  }
  return out;
}

ad::NodeP ConvLayer::graph(ad::NodeP x, bool trainable) {
  ad::NodeP wn = trainable ? ad::param(W.w, W.g) : ad::constant_ref(W.w);
  ad::NodeP bn = trainable ? ad::param(b.w, b.g) : ad::constant_ref(b.w);
  return ad::conv1d(std::move(x), std::move(wn), std::move(bn), k);
}

ad::NodeP ConvLayer::graph_frozen(const ad::NodeP& x) const {
  return ad::conv1d(x, ad::constant_ref(W.w), ad::constant_ref(b.w), k);
}

void Adam::step(const std::vector<Param*>& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = Matrix(params[i]->w.rows(), params[i]->w.cols());
      v_[i] = Matrix(params[i]->w.rows(), params[i]->w.cols());
    }
  }
  require(m_.size() == params.size(), "Adam: parameter list changed size");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    for (std::size_t j = 0; j < p.w.size(); ++j) {
      const double g = p.g.data()[j];
      double& m = m_[i].data()[j];
      double& v = v_[i].data()[j];
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      p.w.data()[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t t = 0; t < logits.rows(); ++t) {
    const double* row = logits.row(t);
    double mx = row[0];
    for (std::size_t k = 1; k < logits.cols(); ++k) mx = std::max(mx, row[k]);
    double z = 0.0;
    for (std::size_t k = 0; k < logits.cols(); ++k) z += std::exp(row[k] - mx);
    for (std::size_t k = 0; k < logits.cols(); ++k) out(t, k) = std::exp(row[k] - mx) / z;
  }
  return out;
}

std::uint64_t params_hash(const std::vector<const Param*>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Param* p : params) {
    h = fnv1a(p->w.data(), p->w.size() * sizeof(double), h);
  }
  return h;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

constexpr char kMagic[4] = {'A', 'R', 'T', 'C'};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                     const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save_checkpoint: cannot open " + path.string());
  os.write(kMagic, 4);
  put_u32(os, 1);
  const std::string m = meta.dump();
  put_u32(os, static_cast<std::uint32_t>(m.size()));
  os.write(m.data(), static_cast<std::streamsize>(m.size()));
  put_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    const std::uint16_t len = static_cast<std::uint16_t>(t.name.size());
    unsigned char lb[2] = {static_cast<unsigned char>(len & 0xff),
                           static_cast<unsigned char>(len >> 8)};
    os.write(reinterpret_cast<const char*>(lb), 2);
    os.write(t.name.data(), len);
    put_u32(os, static_cast<std::uint32_t>(t.m->rows()));
    put_u32(os, static_cast<std::uint32_t>(t.m->cols()));
    os.write(reinterpret_cast<const char*>(t.m->data()),
             static_cast<std::streamsize>(t.m->size() * sizeof(double)));
  }
  if (!os) throw Error("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError("load_checkpoint: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw IncompatibleError("load_checkpoint: bad magic in " + path.string());
  }
  const std::uint32_t version = get_u32(is);
  if (version != 1) throw IncompatibleError("load_checkpoint: unsupported version");
  const std::uint32_t mlen = get_u32(is);
  std::string mbuf(mlen, '\0');
  is.read(mbuf.data(), mlen);
  Checkpoint ck;
  try {
    ck.meta = nlohmann::json::parse(mbuf);
  } catch (const nlohmann::json::exception& e) {
    throw IncompatibleError("load_checkpoint: bad metadata: " + std::string(e.what()));
  }
  const std::uint32_t count = get_u32(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    unsigned char lb[2];
    is.read(reinterpret_cast<char*>(lb), 2);
    const std::uint16_t len = static_cast<std::uint16_t>(lb[0] | (lb[1] << 8));
    std::string name(len, '\0');
    is.read(name.data(), len);
    const std::uint32_t rows = get_u32(is);
    const std::uint32_t cols = get_u32(is);
    Matrix m(rows, cols);
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!is) throw IncompatibleError("load_checkpoint: truncated tensor data");
    ck.tensors.emplace_back(std::move(name), std::move(m));
  }
  return ck;
}

const Matrix& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return m;
  }
  throw IncompatibleError("checkpoint: missing tensor '" + name + "'");
}

}  // namespace artic::nn
