#include "phase2vec/tape.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <memory>

#include "phase2vec/errors.hpp"
#include "phase2vec/parallel.hpp"

namespace p2v {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

// Samples per fixed reduction chunk for weight gradients. Partial sums are
// merged in chunk order, so totals are identical for any worker count.
constexpr std::int64_t kGradChunk = 8;

struct ConvDims {
  int spatial_rank = 0;
  std::int64_t batch = 0, cin = 0, cout = 0, k = 0, stride = 0;
  std::int64_t in[3] = {1, 1, 1};
  std::int64_t out[3] = {1, 1, 1};
  std::int64_t in_spatial() const { return in[0] * in[1] * in[2]; }
  std::int64_t out_spatial() const { return out[0] * out[1] * out[2]; }
  std::int64_t patch() const {
    std::int64_t kk = 1;
    for (int i = 0; i < spatial_rank; ++i) kk *= k;
    return cin * kk;
  }
};

// Gathers the receptive fields of one sample into M:[patch, out_spatial].
void im2col(const ConvDims& d, const double* x, double* M) {
  const std::int64_t P = d.out_spatial();
  if (d.spatial_rank == 2) {
    const std::int64_t H = d.in[0], W = d.in[1], OH = d.out[0], OW = d.out[1];
    std::int64_t row = 0;
    for (std::int64_t c = 0; c < d.cin; ++c)
      for (std::int64_t ki = 0; ki < d.k; ++ki)
        for (std::int64_t kj = 0; kj < d.k; ++kj, ++row) {
          double* dst = M + row * P;
          for (std::int64_t oh = 0; oh < OH; ++oh) {
            const double* src = x + (c * H + oh * d.stride + ki) * W + kj;
            for (std::int64_t ow = 0; ow < OW; ++ow) dst[oh * OW + ow] = src[ow * d.stride];
          }
        }
  } else {
    const std::int64_t D = d.in[0], H = d.in[1], W = d.in[2];
    const std::int64_t OD = d.out[0], OH = d.out[1], OW = d.out[2];
    std::int64_t row = 0;
    for (std::int64_t c = 0; c < d.cin; ++c)
      for (std::int64_t kd = 0; kd < d.k; ++kd)
        for (std::int64_t ki = 0; ki < d.k; ++ki)
          for (std::int64_t kj = 0; kj < d.k; ++kj, ++row) {
            double* dst = M + row * P;
            for (std::int64_t od = 0; od < OD; ++od)
              for (std::int64_t oh = 0; oh < OH; ++oh) {
                const double* src =
                    x + ((c * D + od * d.stride + kd) * H + oh * d.stride + ki) * W + kj;
                double* drow = dst + (od * OH + oh) * OW;
                for (std::int64_t ow = 0; ow < OW; ++ow) drow[ow] = src[ow * d.stride];
              }
          }
  }
}

// Scatter-add transpose of im2col: dX += col2im(S).
void col2im_add(const ConvDims& d, const double* S, double* dx) {
  const std::int64_t P = d.out_spatial();
  if (d.spatial_rank == 2) {
    const std::int64_t H = d.in[0], W = d.in[1], OH = d.out[0], OW = d.out[1];
    std::int64_t row = 0;
    for (std::int64_t c = 0; c < d.cin; ++c)
      for (std::int64_t ki = 0; ki < d.k; ++ki)
        for (std::int64_t kj = 0; kj < d.k; ++kj, ++row) {
          const double* src = S + row * P;
          for (std::int64_t oh = 0; oh < OH; ++oh) {
            double* dst = dx + (c * H + oh * d.stride + ki) * W + kj;
            for (std::int64_t ow = 0; ow < OW; ++ow) dst[ow * d.stride] += src[oh * OW + ow];
          }
        }
  } else {
    const std::int64_t D = d.in[0], H = d.in[1], W = d.in[2];
    const std::int64_t OD = d.out[0], OH = d.out[1], OW = d.out[2];
    std::int64_t row = 0;
    for (std::int64_t c = 0; c < d.cin; ++c)
      for (std::int64_t kd = 0; kd < d.k; ++kd)
        for (std::int64_t ki = 0; ki < d.k; ++ki)
          for (std::int64_t kj = 0; kj < d.k; ++kj, ++row) {
            const double* src = S + row * P;
            for (std::int64_t od = 0; od < OD; ++od)
              for (std::int64_t oh = 0; oh < OH; ++oh) {
                double* dst =
                    dx + ((c * D + od * d.stride + kd) * H + oh * d.stride + ki) * W + kj;
                const double* srow = src + (od * OH + oh) * OW;
                for (std::int64_t ow = 0; ow < OW; ++ow) dst[ow * d.stride] += srow[ow];
              }
          }
  }
}

}  // namespace

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&, Node&)> bw) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backward = std::move(bw);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw contract_error("invalid tape handle");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw contract_error("invalid tape handle");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.numel() == 0) throw contract_error("node has no gradient; run backward first");
  return n.grad;
}

bool Tape::has_grad(Var v) const { return node(v).grad.numel() != 0; }

Tensor& Tape::ensure_grad(Var v) {
  Node& n = node(v);
  if (n.grad.numel() == 0) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Tape::accumulate(Var v, const double* g, std::int64_t n) {
  Tensor& dst = ensure_grad(v);
  double* d = dst.data();
  for (std::int64_t i = 0; i < n; ++i) d[i] += g[i];
}

Var Tape::leaf(Tensor value) {
  bool rg = value.requires_grad();
  return push(std::move(value), rg, nullptr);
}

Var Tape::constant(Tensor value) {
  value.set_requires_grad(false);
  return push(std::move(value), false, nullptr);
}

Var Tape::relu(Var xv) {
  const Tensor& x = value(xv);
  Tensor y(x.shape());
  const double* xs = x.data();
  double* ys = y.data();
  const std::int64_t n = x.numel();
  parallel_for_grain(static_cast<std::size_t>(n), 1 << 16, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) ys[i] = xs[i] > 0.0 ? xs[i] : 0.0;
  });
  bool rg = node(xv).requires_grad;
  return push(std::move(y), rg, [xv](Tape& t, Node& self) {
    if (!t.node(xv).requires_grad) return;
    const double* yv = self.value.data();
    const double* gy = self.grad.data();
    Tensor& gx = t.ensure_grad(xv);
    double* gxd = gx.data();
    const std::int64_t n = self.value.numel();
    parallel_for_grain(static_cast<std::size_t>(n), 1 << 16, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i)
        if (yv[i] > 0.0) gxd[i] += gy[i];
    });
  });
}

Var Tape::reshape(Var xv, std::vector<std::int64_t> shape) {
  Tensor y = value(xv).reshaped(std::move(shape));
  bool rg = node(xv).requires_grad;
  return push(std::move(y), rg, [xv](Tape& t, Node& self) {
    if (!t.node(xv).requires_grad) return;
    t.accumulate(xv, self.grad.data(), self.grad.numel());
  });
}

Var Tape::add(Var a, Var b) { return add_scaled(a, 1.0, b, 1.0); }
Var Tape::sub(Var a, Var b) { return add_scaled(a, 1.0, b, -1.0); }

Var Tape::add_scaled(Var av, double sa, Var bv, double sb) {
  const Tensor& a = value(av);
  const Tensor& b = value(bv);
  if (!a.same_shape(b))
    throw dimension_error("add: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  Tensor y(a.shape());
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) y[i] = sa * a[i] + sb * b[i];
  bool rg = node(av).requires_grad || node(bv).requires_grad;
  return push(std::move(y), rg, [av, bv, sa, sb](Tape& t, Node& self) {
    const std::int64_t n = self.grad.numel();
    const double* g = self.grad.data();
    if (t.node(av).requires_grad) {
      Tensor& ga = t.ensure_grad(av);
      for (std::int64_t i = 0; i < n; ++i) ga[i] += sa * g[i];
    }
    if (t.node(bv).requires_grad) {
      Tensor& gb = t.ensure_grad(bv);
      for (std::int64_t i = 0; i < n; ++i) gb[i] += sb * g[i];
    }
  });
}

Var Tape::mul(Var av, Var bv) {
  const Tensor& a = value(av);
  const Tensor& b = value(bv);
  if (!a.same_shape(b))
    throw dimension_error("mul: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  Tensor y(a.shape());
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
  bool rg = node(av).requires_grad || node(bv).requires_grad;
  return push(std::move(y), rg, [av, bv](Tape& t, Node& self) {
    const std::int64_t n = self.grad.numel();
    const double* g = self.grad.data();
    const Tensor& a = t.value(av);
    const Tensor& b = t.value(bv);
    if (t.node(av).requires_grad) {
      Tensor& ga = t.ensure_grad(av);
      for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i] * b[i];
    }
    if (t.node(bv).requires_grad) {
      Tensor& gb = t.ensure_grad(bv);
      for (std::int64_t i = 0; i < n; ++i) gb[i] += g[i] * a[i];
    }
  });
}

Var Tape::scale(Var xv, double s) {
  const Tensor& x = value(xv);
  Tensor y(x.shape());
  const std::int64_t n = x.numel();
  for (std::int64_t i = 0; i < n; ++i) y[i] = s * x[i];
  bool rg = node(xv).requires_grad;
  return push(std::move(y), rg, [xv, s](Tape& t, Node& self) {
    if (!t.node(xv).requires_grad) return;
    Tensor& gx = t.ensure_grad(xv);
    const double* g = self.grad.data();
    const std::int64_t n = self.grad.numel();
    for (std::int64_t i = 0; i < n; ++i) gx[i] += s * g[i];
  });
}

Var Tape::sum(Var xv) {
  const Tensor& x = value(xv);
  double acc = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i) acc += x[i];
  bool rg = node(xv).requires_grad;
  return push(Tensor::scalar(acc), rg, [xv](Tape& t, Node& self) {
    if (!t.node(xv).requires_grad) return;
    Tensor& gx = t.ensure_grad(xv);
    const double g = self.grad[0];
    for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += g;
  });
}

Var Tape::mean(Var xv) {
  const Tensor& x = value(xv);
  const std::int64_t n = x.numel();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) acc += x[i];
  bool rg = node(xv).requires_grad;
  return push(Tensor::scalar(acc / static_cast<double>(n)), rg, [xv, n](Tape& t, Node& self) {
    if (!t.node(xv).requires_grad) return;
    Tensor& gx = t.ensure_grad(xv);
    const double g = self.grad[0] / static_cast<double>(n);
    for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += g;
  });
}

Var Tape::linear(Var xv, Var wv, Var bv) {
  const Tensor& x = value(xv);
  const Tensor& w = value(wv);
  const Tensor& b = value(bv);
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1)
    throw dimension_error("linear: expected x:[B,m] w:[m,k] b:[k]");
  const std::int64_t B = x.dim(0), m = x.dim(1), k = w.dim(1);
  if (w.dim(0) != m || b.dim(0) != k)
    throw dimension_error("linear: inner dimensions mismatch, x " + x.shape_str() + " w " +
                          w.shape_str() + " b " + b.shape_str());
  Tensor y({B, k});
  {
    CMapRM X(x.data(), B, m), W(w.data(), m, k);
    MapRM Y(y.data(), B, k);
    Y.noalias() = X * W;
    for (std::int64_t i = 0; i < B; ++i)
      for (std::int64_t j = 0; j < k; ++j) y[i * k + j] += b[j];
  }
  bool rg = node(xv).requires_grad || node(wv).requires_grad || node(bv).requires_grad;
  return push(std::move(y), rg, [xv, wv, bv, B, m, k](Tape& t, Node& self) {
    CMapRM G(self.grad.data(), B, k);
    if (t.node(xv).requires_grad) {
      CMapRM W(t.value(wv).data(), m, k);
      MapRM GX(t.ensure_grad(xv).data(), B, m);
      GX.noalias() += G * W.transpose();
    }
    if (t.node(wv).requires_grad) {
      CMapRM X(t.value(xv).data(), B, m);
      MapRM GW(t.ensure_grad(wv).data(), m, k);
      GW.noalias() += X.transpose() * G;
    }
    if (t.node(bv).requires_grad) {
      Tensor& gb = t.ensure_grad(bv);
      for (std::int64_t i = 0; i < B; ++i)
        for (std::int64_t j = 0; j < k; ++j) gb[j] += self.grad[i * k + j];
    }
  });
}

Var Tape::conv(Var xv, Var wv, Var bv, int stride) {
  const Tensor& x = value(xv);
  const Tensor& w = value(wv);
  const Tensor& b = value(bv);
  if (x.rank() < 4 || x.rank() > 5) throw dimension_error("conv: input must be [B,C,S,S] or [B,C,S,S,S]");
  if (w.rank() != x.rank()) throw dimension_error("conv: weight rank must match input rank");
  if (stride < 1) throw config_error("conv: stride must be >= 1");

  ConvDims d;
  d.spatial_rank = static_cast<int>(x.rank()) - 2;
  d.batch = x.dim(0);
  d.cin = x.dim(1);
  d.cout = w.dim(0);
  d.k = w.dim(2);
  d.stride = stride;
  if (w.dim(1) != d.cin)
    throw dimension_error("conv: input has " + std::to_string(d.cin) + " channels but weights expect " +
                          std::to_string(w.dim(1)));
  if (b.rank() != 1 || b.dim(0) != d.cout) throw dimension_error("conv: bias must be [Cout]");
  for (int i = 0; i < d.spatial_rank; ++i) {
    d.in[i] = x.dim(2 + static_cast<std::size_t>(i));
    if (w.dim(2 + static_cast<std::size_t>(i)) != d.k)
      throw dimension_error("conv: only cubic kernels are supported");
    if (d.in[i] < d.k)
      throw dimension_error("conv: kernel size " + std::to_string(d.k) + " exceeds input extent " +
                            std::to_string(d.in[i]));
    d.out[i] = (d.in[i] - d.k) / d.stride + 1;
  }

  std::vector<std::int64_t> oshape{d.batch, d.cout};
  for (int i = 0; i < d.spatial_rank; ++i) oshape.push_back(d.out[i]);
  Tensor y(oshape);

  const std::int64_t P = d.out_spatial();
  const std::int64_t CK = d.patch();
  const std::int64_t in_sz = d.cin * d.in_spatial();
  const std::int64_t out_sz = d.cout * P;
  {
    const double* xd = x.data();
    const double* wd = w.data();
    const double* bd = b.data();
    double* yd = y.data();
    parallel_for(static_cast<std::size_t>(d.batch), [&](std::size_t bb, std::size_t be) {
      std::vector<double> M(static_cast<std::size_t>(CK * P));
      CMapRM W(wd, d.cout, CK);
      for (std::size_t s = bb; s < be; ++s) {
        im2col(d, xd + s * static_cast<std::size_t>(in_sz), M.data());
        CMapRM Mm(M.data(), CK, P);
        MapRM Y(yd + s * static_cast<std::size_t>(out_sz), d.cout, P);
        Y.noalias() = W * Mm;
        for (std::int64_t c = 0; c < d.cout; ++c) Y.row(c).array() += bd[c];
      }
    });
  }

  bool rg = node(xv).requires_grad || node(wv).requires_grad || node(bv).requires_grad;
  return push(std::move(y), rg, [xv, wv, bv, d, P, CK, in_sz, out_sz](Tape& t, Node& self) {
    const double* gy = self.grad.data();
    const bool need_dx = t.node(xv).requires_grad;
    const bool need_dw = t.node(wv).requires_grad;
    const bool need_db = t.node(bv).requires_grad;

    if (need_dx) {
      const double* wd = t.value(wv).data();
      double* gx = t.ensure_grad(xv).data();
      parallel_for(static_cast<std::size_t>(d.batch), [&](std::size_t bb, std::size_t be) {
        std::vector<double> S(static_cast<std::size_t>(CK * P));
        CMapRM W(wd, d.cout, CK);
        for (std::size_t s = bb; s < be; ++s) {
          CMapRM G(gy + s * static_cast<std::size_t>(out_sz), d.cout, P);
          MapRM Sm(S.data(), CK, P);
          Sm.noalias() = W.transpose() * G;
          col2im_add(d, S.data(), gx + s * static_cast<std::size_t>(in_sz));
        }
      });
    }

    if (need_dw || need_db) {
      const double* xd = t.value(xv).data();
      const std::int64_t nchunks = (d.batch + kGradChunk - 1) / kGradChunk;
      std::vector<double> wparts(need_dw ? static_cast<std::size_t>(nchunks * d.cout * CK) : 0, 0.0);
      std::vector<double> bparts(need_db ? static_cast<std::size_t>(nchunks * d.cout) : 0, 0.0);
      parallel_for(static_cast<std::size_t>(nchunks), [&](std::size_t cb, std::size_t ce) {
        std::vector<double> M(static_cast<std::size_t>(CK * P));
        for (std::size_t ch = cb; ch < ce; ++ch) {
          const std::int64_t s0 = static_cast<std::int64_t>(ch) * kGradChunk;
          const std::int64_t s1 = std::min(d.batch, s0 + kGradChunk);
          for (std::int64_t s = s0; s < s1; ++s) {
            CMapRM G(gy + static_cast<std::size_t>(s) * static_cast<std::size_t>(out_sz), d.cout, P);
            if (need_dw) {
              im2col(d, xd + static_cast<std::size_t>(s) * static_cast<std::size_t>(in_sz), M.data());
              CMapRM Mm(M.data(), CK, P);
              MapRM WP(wparts.data() + ch * static_cast<std::size_t>(d.cout * CK), d.cout, CK);
              WP.noalias() += G * Mm.transpose();
            }
            if (need_db) {
              double* bp = bparts.data() + ch * static_cast<std::size_t>(d.cout);
              for (std::int64_t c = 0; c < d.cout; ++c) bp[c] += G.row(c).sum();
            }
          }
        }
      });
      if (need_dw) {
        double* gw = t.ensure_grad(wv).data();
        for (std::int64_t ch = 0; ch < nchunks; ++ch) {
          const double* src = wparts.data() + static_cast<std::size_t>(ch) * static_cast<std::size_t>(d.cout * CK);
          for (std::int64_t i = 0; i < d.cout * CK; ++i) gw[i] += src[i];
        }
      }
      if (need_db) {
        double* gb = t.ensure_grad(bv).data();
        for (std::int64_t ch = 0; ch < nchunks; ++ch) {
          const double* src = bparts.data() + static_cast<std::size_t>(ch) * static_cast<std::size_t>(d.cout);
          for (std::int64_t c = 0; c < d.cout; ++c) gb[c] += src[c];
        }
      }
    }
  });
}

Var Tape::batch_norm(Var xv, Var gv, Var bv, Tensor* running_mean, Tensor* running_var,
                     bool train, double momentum, double eps, bool update_running) {
  const Tensor& x = value(xv);
  if (x.rank() < 2) throw dimension_error("batch_norm: input must be at least [B,C]");
  const std::int64_t B = x.dim(0), C = x.dim(1);
  const std::int64_t S = x.numel() / (B * C);
  const std::int64_t cnt = B * S;
  const Tensor& gamma = value(gv);
  const Tensor& beta = value(bv);
  if (gamma.numel() != C || beta.numel() != C)
    throw dimension_error("batch_norm: scale/shift must have one entry per channel");
  if (!running_mean || !running_var || running_mean->numel() != C || running_var->numel() != C)
    throw dimension_error("batch_norm: running stats must have one entry per channel");
  if (train && B < 2)
    throw config_error("batch_norm: train mode requires batch size >= 2 (variance undefined)");

  auto xhat = std::make_shared<Tensor>(x.shape());
  auto invstd = std::make_shared<std::vector<double>>(static_cast<std::size_t>(C));
  std::vector<double> bmean(static_cast<std::size_t>(C)), bvar(static_cast<std::size_t>(C));

  const double* xd = x.data();
  double* xh = xhat->data();
  if (train) {
    parallel_for_grain(static_cast<std::size_t>(C), 4, [&](std::size_t c0, std::size_t c1) {
      for (std::size_t c = c0; c < c1; ++c) {
        double mu = 0.0;
        for (std::int64_t bb = 0; bb < B; ++bb) {
          const double* row = xd + (bb * C + static_cast<std::int64_t>(c)) * S;
          for (std::int64_t s = 0; s < S; ++s) mu += row[s];
        }
        mu /= static_cast<double>(cnt);
        double var = 0.0;
        for (std::int64_t bb = 0; bb < B; ++bb) {
          const double* row = xd + (bb * C + static_cast<std::int64_t>(c)) * S;
          for (std::int64_t s = 0; s < S; ++s) {
            const double dlt = row[s] - mu;
            var += dlt * dlt;
          }
        }
        var /= static_cast<double>(cnt);
        const double inv = 1.0 / std::sqrt(var + eps);
        bmean[c] = mu;
        bvar[c] = var;
        (*invstd)[c] = inv;
        for (std::int64_t bb = 0; bb < B; ++bb) {
          const double* row = xd + (bb * C + static_cast<std::int64_t>(c)) * S;
          double* hrow = xh + (bb * C + static_cast<std::int64_t>(c)) * S;
          for (std::int64_t s = 0; s < S; ++s) hrow[s] = (row[s] - mu) * inv;
        }
      }
    });
    if (update_running) {
      const double unbias = cnt > 1 ? static_cast<double>(cnt) / static_cast<double>(cnt - 1) : 1.0;
      for (std::int64_t c = 0; c < C; ++c) {
        (*running_mean)[c] = (1.0 - momentum) * (*running_mean)[c] + momentum * bmean[static_cast<std::size_t>(c)];
        (*running_var)[c] =
            (1.0 - momentum) * (*running_var)[c] + momentum * bvar[static_cast<std::size_t>(c)] * unbias;
      }
    }
  } else {
    for (std::int64_t c = 0; c < C; ++c)
      (*invstd)[static_cast<std::size_t>(c)] = 1.0 / std::sqrt((*running_var)[c] + eps);
    parallel_for_grain(static_cast<std::size_t>(C), 4, [&](std::size_t c0, std::size_t c1) {
      for (std::size_t c = c0; c < c1; ++c) {
        const double mu = (*running_mean)[static_cast<std::int64_t>(c)];
        const double inv = (*invstd)[c];
        for (std::int64_t bb = 0; bb < B; ++bb) {
          const double* row = xd + (bb * C + static_cast<std::int64_t>(c)) * S;
          double* hrow = xh + (bb * C + static_cast<std::int64_t>(c)) * S;
          for (std::int64_t s = 0; s < S; ++s) hrow[s] = (row[s] - mu) * inv;
        }
      }
    });
  }

  Tensor y(x.shape());
  double* yd = y.data();
  const double* gd = gamma.data();
  const double* bd = beta.data();
  parallel_for_grain(static_cast<std::size_t>(C), 4, [&](std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
      const double gq = gd[c], bq = bd[c];
      for (std::int64_t bb = 0; bb < B; ++bb) {
        const double* hrow = xh + (bb * C + static_cast<std::int64_t>(c)) * S;
        double* yrow = yd + (bb * C + static_cast<std::int64_t>(c)) * S;
        for (std::int64_t s = 0; s < S; ++s) yrow[s] = gq * hrow[s] + bq;
      }
    }
  });

  bool rg = node(xv).requires_grad || node(gv).requires_grad || node(bv).requires_grad;
  return push(std::move(y), rg, [xv, gv, bv, xhat, invstd, train, B, C, S](Tape& t, Node& self) {
    const double* gy = self.grad.data();
    const double* xh = xhat->data();
    const std::int64_t cnt = B * S;
    const bool need_dx = t.node(xv).requires_grad;
    const bool need_dg = t.node(gv).requires_grad;
    const bool need_db = t.node(bv).requires_grad;
    double* gx = need_dx ? t.ensure_grad(xv).data() : nullptr;
    double* gg = need_dg ? t.ensure_grad(gv).data() : nullptr;
    double* gb = need_db ? t.ensure_grad(bv).data() : nullptr;
    const double* gamma = t.value(gv).data();
    parallel_for_grain(static_cast<std::size_t>(C), 4, [&](std::size_t c0, std::size_t c1) {
      for (std::size_t c = c0; c < c1; ++c) {
        double sum_dy = 0.0, sum_dy_xh = 0.0;
        for (std::int64_t bb = 0; bb < B; ++bb) {
          const double* grow = gy + (bb * C + static_cast<std::int64_t>(c)) * S;
          const double* hrow = xh + (bb * C + static_cast<std::int64_t>(c)) * S;
          for (std::int64_t s = 0; s < S; ++s) {
            sum_dy += grow[s];
            sum_dy_xh += grow[s] * hrow[s];
          }
        }
        if (gg) gg[c] += sum_dy_xh;
        if (gb) gb[c] += sum_dy;
        if (gx) {
          const double inv = (*invstd)[c];
          const double gq = gamma[c];
          if (train) {
            const double m_dy = sum_dy / static_cast<double>(cnt);
            const double m_dy_xh = sum_dy_xh / static_cast<double>(cnt);
            for (std::int64_t bb = 0; bb < B; ++bb) {
              const double* grow = gy + (bb * C + static_cast<std::int64_t>(c)) * S;
              const double* hrow = xh + (bb * C + static_cast<std::int64_t>(c)) * S;
              double* xrow = gx + (bb * C + static_cast<std::int64_t>(c)) * S;
              for (std::int64_t s = 0; s < S; ++s)
                xrow[s] += gq * inv * (grow[s] - m_dy - hrow[s] * m_dy_xh);
            }
          } else {
            for (std::int64_t bb = 0; bb < B; ++bb) {
              const double* grow = gy + (bb * C + static_cast<std::int64_t>(c)) * S;
              double* xrow = gx + (bb * C + static_cast<std::int64_t>(c)) * S;
              for (std::int64_t s = 0; s < S; ++s) xrow[s] += gq * inv * grow[s];
            }
          }
        }
      }
    });
  });
}

Var Tape::dropout(Var xv, double rate, bool train, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw config_error("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  if (!train) return xv;  // eval mode is the identity
  const Tensor& x = value(xv);
  const std::int64_t n = x.numel();
  auto mask = std::make_shared<std::vector<std::uint8_t>>(static_cast<std::size_t>(n));
  const double keep = 1.0 - rate;
  const double inv_keep = 1.0 / keep;
  Tensor y(x.shape());
  for (std::int64_t i = 0; i < n; ++i) {
    const bool k = !(rng.uniform() < rate);
    (*mask)[static_cast<std::size_t>(i)] = k ? 1 : 0;
    y[i] = k ? x[i] * inv_keep : 0.0;
  }
  bool rg = node(xv).requires_grad;
  return push(std::move(y), rg, [xv, mask, inv_keep](Tape& t, Node& self) {
    if (!t.node(xv).requires_grad) return;
    Tensor& gx = t.ensure_grad(xv);
    const double* g = self.grad.data();
    const std::int64_t n = self.grad.numel();
    for (std::int64_t i = 0; i < n; ++i)
      if ((*mask)[static_cast<std::size_t>(i)]) gx[i] += g[i] * inv_keep;
  });
}

Var Tape::field_recon_loss(Var xiv, const Tensor& truth, const Tensor& phi, int q,
                           double eps, NormMode mode) {
  const Tensor& xi = value(xiv);
  if (xi.rank() != 2 || truth.rank() != 2 || phi.rank() != 2)
    throw dimension_error("field_recon_loss: xi:[B,p*q] truth:[B,N*q] phi:[N,p]");
  const std::int64_t B = xi.dim(0);
  const std::int64_t N = phi.dim(0);
  const std::int64_t p = phi.dim(1);
  if (xi.dim(1) != p * q)
    throw dimension_error("field_recon_loss: xi columns must equal p*q");
  if (truth.dim(0) != B || truth.dim(1) != N * q)
    throw dimension_error("field_recon_loss: truth must be [B,N*q]");

  std::vector<double> losses(static_cast<std::size_t>(B));
  const double* xid = xi.data();
  const double* td = truth.data();
  const double* pd = phi.data();
  parallel_for(static_cast<std::size_t>(B), [&](std::size_t b0, std::size_t b1) {
    std::vector<double> R(static_cast<std::size_t>(N * q));
    CMapRM Phi(pd, N, p);
    for (std::size_t s = b0; s < b1; ++s) {
      CMapRM Xi(xid + s * static_cast<std::size_t>(p * q), p, q);
      MapRM Rm(R.data(), N, q);
      Rm.noalias() = Phi * Xi;
      const double* trow = td + s * static_cast<std::size_t>(N * q);
      double acc = 0.0;
      if (mode == NormMode::global_ratio) {
        double num = 0.0, den = 0.0;
        for (std::int64_t i = 0; i < N * q; ++i) {
          const double r = trow[i] - R[static_cast<std::size_t>(i)];
          num += r * r;
          den += trow[i] * trow[i];
        }
        acc = std::sqrt(num) / (std::sqrt(den) + eps);
      } else {
        for (std::int64_t i = 0; i < N; ++i) {
          double nr = 0.0, nt = 0.0;
          for (int j = 0; j < q; ++j) {
            const double tvalue = trow[i * q + j];
            const double r = tvalue - R[static_cast<std::size_t>(i * q + j)];
            nr += r * r;
            nt += tvalue * tvalue;
          }
          nr = std::sqrt(nr);
          if (mode == NormMode::pointwise)
            acc += nr / (std::sqrt(nt) + eps);
          else
            acc += nr;
        }
        acc /= static_cast<double>(N);
      }
      losses[s] = acc;
    }
  });
  double total = 0.0;
  for (double l : losses) total += l;
  total /= static_cast<double>(B);

  bool rg = node(xiv).requires_grad;
  // Backward recomputes the per-sample reconstruction; cheaper than storing it.
  auto truth_copy = std::make_shared<Tensor>(truth);
  auto phi_copy = std::make_shared<Tensor>(phi);
  return push(Tensor::scalar(total), rg,
              [xiv, truth_copy, phi_copy, q, eps, mode, B, N, p](Tape& t, Node& self) {
    if (!t.node(xiv).requires_grad) return;
    const double g0 = self.grad[0];
    const double* xid = t.value(xiv).data();
    const double* td = truth_copy->data();
    const double* pd = phi_copy->data();
    double* gxi = t.ensure_grad(xiv).data();
    parallel_for(static_cast<std::size_t>(B), [&](std::size_t b0, std::size_t b1) {
      std::vector<double> R(static_cast<std::size_t>(N * q));
      std::vector<double> dR(static_cast<std::size_t>(N * q));
      CMapRM Phi(pd, N, p);
      for (std::size_t s = b0; s < b1; ++s) {
        CMapRM Xi(xid + s * static_cast<std::size_t>(p * q), p, q);
        MapRM Rm(R.data(), N, q);
        Rm.noalias() = Phi * Xi;
        const double* trow = td + s * static_cast<std::size_t>(N * q);
        if (mode == NormMode::global_ratio) {
          double num = 0.0, den = 0.0;
          for (std::int64_t i = 0; i < N * q; ++i) {
            const double r = trow[i] - R[static_cast<std::size_t>(i)];
            num += r * r;
            den += trow[i] * trow[i];
          }
          const double nr = std::sqrt(num);
          const double coef = nr > 0.0 ? -g0 / (static_cast<double>(B) * nr * (std::sqrt(den) + eps)) : 0.0;
          for (std::int64_t i = 0; i < N * q; ++i)
            dR[static_cast<std::size_t>(i)] = coef * (trow[i] - R[static_cast<std::size_t>(i)]);
        } else {
          for (std::int64_t i = 0; i < N; ++i) {
            double nr = 0.0, nt = 0.0;
            for (int j = 0; j < q; ++j) {
              const double tvalue = trow[i * q + j];
              const double r = tvalue - R[static_cast<std::size_t>(i * q + j)];
              nr += r * r;
              nt += tvalue * tvalue;
            }
            nr = std::sqrt(nr);
            const double den = mode == NormMode::pointwise ? std::sqrt(nt) + eps : 1.0;
            const double coef =
                nr > 0.0 ? -g0 / (static_cast<double>(B) * static_cast<double>(N) * nr * den) : 0.0;
            for (int j = 0; j < q; ++j)
              dR[static_cast<std::size_t>(i * q + j)] =
                  coef * (trow[i * q + j] - R[static_cast<std::size_t>(i * q + j)]);
          }
        }
        CMapRM dRm(dR.data(), N, q);
        MapRM Gxi(gxi + s * static_cast<std::size_t>(p * q), p, q);
        Gxi.noalias() += Phi.transpose() * dRm;
      }
    });
  });
}

Var Tape::l1_mean(Var xv) {
  const Tensor& x = value(xv);
  if (x.rank() != 2) throw dimension_error("l1_mean: expected [B,K]");
  const std::int64_t B = x.dim(0);
  const std::int64_t n = x.numel();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) acc += std::abs(x[i]);
  bool rg = node(xv).requires_grad;
  return push(Tensor::scalar(acc / static_cast<double>(B)), rg, [xv, B](Tape& t, Node& self) {
    if (!t.node(xv).requires_grad) return;
    const Tensor& x = t.value(xv);
    Tensor& gx = t.ensure_grad(xv);
    const double g = self.grad[0] / static_cast<double>(B);
    for (std::int64_t i = 0; i < x.numel(); ++i) {
      if (x[i] > 0.0)
        gx[i] += g;
      else if (x[i] < 0.0)
        gx[i] -= g;
      // subgradient 0 at exactly zero
    }
  });
}

void Tape::backward(Var loss) {
  Node& last = node(loss);
  if (last.value.numel() != 1) throw contract_error("backward: loss must be scalar");
  if (!last.requires_grad)
    throw contract_error("backward: loss does not depend on any differentiable leaf");
  ensure_grad(loss)[0] += 1.0;
  for (std::size_t i = static_cast<std::size_t>(loss.id) + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward) continue;
    if (n.grad.numel() == 0) continue;  // not on any path to the loss
    n.backward(*this, n);
  }
}

}  // namespace p2v
