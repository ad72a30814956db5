#include "energon/cnn.hpp"

#include <cmath>

#include "energon/errors.hpp"
#include "energon/rng.hpp"

namespace energon {

// Internally activations are held positions x channels (column-major), so a
// channel is contiguous in memory and the kernel tap loop walks stride-1.
// Weights are transposed to (in_ch*k) x filters for the same reason. Public
// entry points keep the channels x length orientation.

void CnnSpec::validate() const {
  if (conv_filters.empty()) throw DataError("at least one conv block required");
  if (pool_after.size() != conv_filters.size())
    throw DataError("pool_after must list one flag per conv block");
  if (kernel_size < 1) throw DataError("kernel_size must be >= 1");
  if (fc_hidden < 1) throw DataError("fc_hidden must be >= 1");
  if (n_classes < 2) throw DataError("n_classes must be >= 2");
  if (in_channels < 1) throw DataError("in_channels must be >= 1");
  if (input_length < 1) throw DataError("input_length must be >= 1");
  for (int f : conv_filters)
    if (f < 1) throw DataError("conv filter counts must be >= 1");
  layer_lengths();  // throws if the chain collapses
}

std::vector<int> CnnSpec::layer_lengths() const {
  std::vector<int> lengths;
  int len = input_length;
  for (std::size_t i = 0; i < conv_filters.size(); ++i) {
    len = len - kernel_size + 1;
    if (len < 1)
      throw DataError("conv block " + std::to_string(i) +
                      " leaves no samples (kernel too large for input)");
    if (pool_after[i]) {
      len /= 2;
      if (len < 1)
        throw DataError("pool after block " + std::to_string(i) +
                        " leaves no samples");
    }
    lengths.push_back(len);
  }
  return lengths;
}

int CnnSpec::flatten_dim() const {
  return layer_lengths().back() * conv_filters.back();
}

// ---- conv ------------------------------------------------------------------

namespace {

// xt: L x C, wt: (C*k) x F, y: Lout x F. Accumulation for one output
// element: bias, then channel-major tap-minor. This order is the contract
// the reference implementation checks bit for bit.
Eigen::MatrixXd conv_lc(const Eigen::MatrixXd& xt, const Eigen::MatrixXd& wt,
                        const Eigen::VectorXd& b, int k) {
  const Eigen::Index L = xt.rows();
  const Eigen::Index C = xt.cols();
  const Eigen::Index F = wt.cols();
  const Eigen::Index Lout = L - k + 1;
  if (Lout < 1) throw DataError("conv input shorter than kernel");
  if (wt.rows() != C * k) throw DataError("conv weight shape mismatch");

  Eigen::MatrixXd y(Lout, F);
  for (Eigen::Index f = 0; f < F; ++f) {
    const double* wf = wt.data() + f * wt.rows();
    double* yf = y.data() + f * Lout;
    for (Eigen::Index pos = 0; pos < Lout; ++pos) {
      double acc = b[f];
      for (Eigen::Index c = 0; c < C; ++c) {
        const double* xc = xt.data() + c * L + pos;
        const double* wc = wf + c * k;
        for (int j = 0; j < k; ++j) acc += wc[j] * xc[j];
      }
      yf[pos] = acc;
    }
  }
  return y;
}

void conv_lc_backward(const Eigen::MatrixXd& xt, const Eigen::MatrixXd& wt,
                      const Eigen::MatrixXd& dy, int k, Eigen::MatrixXd& dxt,
                      Eigen::MatrixXd& dwt, Eigen::VectorXd& db) {
  const Eigen::Index L = xt.rows();
  const Eigen::Index C = xt.cols();
  const Eigen::Index F = wt.cols();
  const Eigen::Index Lout = dy.rows();

  dxt.setZero(L, C);
  dwt.setZero(C * k, F);
  db.setZero(F);

  for (Eigen::Index f = 0; f < F; ++f) {
    const double* dyf = dy.data() + f * Lout;
    double sum = 0.0;
    for (Eigen::Index pos = 0; pos < Lout; ++pos) sum += dyf[pos];
    db[f] = sum;

    double* dwf = dwt.data() + f * dwt.rows();
    const double* wf = wt.data() + f * wt.rows();
    for (Eigen::Index c = 0; c < C; ++c) {
      const double* xc = xt.data() + c * L;
      double* dxc = dxt.data() + c * L;
      double* dwc = dwf + c * k;
      const double* wc = wf + c * k;
      for (Eigen::Index pos = 0; pos < Lout; ++pos) {
        const double g = dyf[pos];
        if (g == 0.0) continue;
        const double* xp = xc + pos;
        double* dxp = dxc + pos;
        for (int j = 0; j < k; ++j) {
          dwc[j] += g * xp[j];
          dxp[j] += g * wc[j];
        }
      }
    }
  }
}

}  // namespace

Eigen::MatrixXd conv1d_forward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                               const Eigen::VectorXd& b) {
  const Eigen::Index C = x.rows();
  const Eigen::Index F = w.rows();
  if (C < 1 || w.cols() % C != 0)
    throw DataError("conv weight columns must be in_channels * kernel");
  const int k = static_cast<int>(w.cols() / C);
  const Eigen::MatrixXd xt = x.transpose();
  const Eigen::MatrixXd wt = w.transpose();
  Eigen::MatrixXd y = conv_lc(xt, wt, b, k);
  (void)F;
  return y.transpose();
}

void conv1d_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                     const Eigen::MatrixXd& dy, Eigen::MatrixXd& dx,
                     Eigen::MatrixXd& dw, Eigen::VectorXd& db) {
  const Eigen::Index C = x.rows();
  const int k = static_cast<int>(w.cols() / C);
  Eigen::MatrixXd dxt, dwt;
  conv_lc_backward(x.transpose(), w.transpose(), dy.transpose(), k, dxt, dwt, db);
  dx = dxt.transpose();
  dw = dwt.transpose();
}

// ---- pool / relu / softmax ---------------------------------------------------

Eigen::MatrixXd maxpool2_forward(const Eigen::MatrixXd& x, Eigen::MatrixXi& argmax) {
  // x: L x C (internal orientation). Window 2, stride 2, odd tail dropped.
  const Eigen::Index L = x.rows(), C = x.cols();
  const Eigen::Index Lout = L / 2;
  Eigen::MatrixXd y(Lout, C);
  argmax.resize(Lout, C);
  for (Eigen::Index c = 0; c < C; ++c) {
    for (Eigen::Index p = 0; p < Lout; ++p) {
      const double a = x(2 * p, c), b = x(2 * p + 1, c);
      if (a >= b) {  // ties keep the first sample
        y(p, c) = a;
        argmax(p, c) = static_cast<int>(2 * p);
      } else {
        y(p, c) = b;
        argmax(p, c) = static_cast<int>(2 * p + 1);
      }
    }
  }
  return y;
}

Eigen::MatrixXd maxpool2_backward(const Eigen::MatrixXd& dy,
                                  const Eigen::MatrixXi& argmax,
                                  Eigen::Index input_len) {
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(input_len, dy.cols());
  for (Eigen::Index c = 0; c < dy.cols(); ++c)
    for (Eigen::Index p = 0; p < dy.rows(); ++p)
      dx(argmax(p, c), c) += dy(p, c);
  return dx;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    Eigen::ArrayXd e = (logits.row(r).array() - m).exp();
    out.row(r) = (e / e.sum()).matrix();
  }
  return out;
}

double cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
  if (probs.rows() != static_cast<Eigen::Index>(labels.size()))
    throw DataError("cross_entropy: batch size mismatch");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= probs.cols()) throw DataError("cross_entropy: label out of range");
    loss += -std::log(std::max(probs(i, y), 1e-12));
  }
  return loss / static_cast<double>(probs.rows());
}

// ---- model -----------------------------------------------------------------

std::size_t CnnModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& blk : blocks)
    n += static_cast<std::size_t>(blk.w.size() + blk.b.size() + blk.bn_scale.size() +
                                  blk.bn_shift.size());
  n += static_cast<std::size_t>(fc1.w.size() + fc1.b.size() + fc2.w.size() +
                                fc2.b.size());
  return n;
}

std::vector<Eigen::Map<Eigen::VectorXd>> CnnModel::trainable_views() {
  std::vector<Eigen::Map<Eigen::VectorXd>> views;
  for (auto& blk : blocks) {
    views.emplace_back(blk.w.data(), blk.w.size());
    views.emplace_back(blk.b.data(), blk.b.size());
    views.emplace_back(blk.bn_scale.data(), blk.bn_scale.size());
    views.emplace_back(blk.bn_shift.data(), blk.bn_shift.size());
  }
  views.emplace_back(fc1.w.data(), fc1.w.size());
  views.emplace_back(fc1.b.data(), fc1.b.size());
  views.emplace_back(fc2.w.data(), fc2.w.size());
  views.emplace_back(fc2.b.data(), fc2.b.size());
  return views;
}

CnnModel init_model(const CnnSpec& spec, std::uint64_t seed) {
  spec.validate();
  CnnModel m;
  m.spec = spec;
  Rng rng(seed);
  auto he_uniform = [&](Eigen::MatrixXd& w, int fan_in) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (Eigen::Index i = 0; i < w.size(); ++i)
      w.data()[i] = rng.uniform(-limit, limit);
  };

  int c_in = spec.in_channels;
  for (std::size_t i = 0; i < spec.conv_filters.size(); ++i) {
    const int f = spec.conv_filters[i];
    ConvBlock blk;
    blk.w.resize(f, c_in * spec.kernel_size);
    he_uniform(blk.w, c_in * spec.kernel_size);
    blk.b = Eigen::VectorXd::Zero(f);
    blk.bn_scale = Eigen::VectorXd::Ones(f);
    blk.bn_shift = Eigen::VectorXd::Zero(f);
    blk.bn_run_mean = Eigen::VectorXd::Zero(f);
    blk.bn_run_var = Eigen::VectorXd::Ones(f);
    m.blocks.push_back(std::move(blk));
    c_in = f;
  }

  const int flat = spec.flatten_dim();
  m.fc1.w.resize(spec.fc_hidden, flat);
  he_uniform(m.fc1.w, flat);
  m.fc1.b = Eigen::VectorXd::Zero(spec.fc_hidden);
  m.fc2.w.resize(spec.n_classes, spec.fc_hidden);
  he_uniform(m.fc2.w, spec.fc_hidden);
  m.fc2.b = Eigen::VectorXd::Zero(spec.n_classes);
  return m;
}

// ---- forward / backward ------------------------------------------------------

namespace {

struct BlockCache {
  std::vector<Eigen::MatrixXd> x;      // block input, L x C
  std::vector<Eigen::MatrixXd> xhat;   // normalized pre-scale activations
  std::vector<Eigen::MatrixXd> post;   // post-ReLU (pre-pool)
  std::vector<Eigen::MatrixXi> argmax; // pool winners (empty when no pool)
  Eigen::VectorXd inv_sd;              // 1/sqrt(var+eps) per channel
  Eigen::VectorXd mean;
};

struct ForwardCache {
  std::vector<BlockCache> blocks;
  Eigen::MatrixXd flat;    // flatten_dim x B
  Eigen::MatrixXd h_pre;   // fc_hidden x B
  Eigen::MatrixXd h;       // post-ReLU
  Eigen::MatrixXd probs;   // B x n_classes
};

// Runs the conv stack + head over the batch. In training mode BN uses batch
// statistics and updates running estimates; in eval mode it uses the stored
// running statistics.
ForwardCache run_forward(CnnModel& model, const Batch& batch, bool training,
                         bool keep_caches) {
  const CnnSpec& spec = model.spec;
  const auto B = static_cast<Eigen::Index>(batch.size());
  if (B == 0) throw DataError("forward: empty batch");

  ForwardCache cache;
  std::vector<Eigen::MatrixXd> acts(static_cast<std::size_t>(B));
  for (Eigen::Index s = 0; s < B; ++s) {
    const auto& in = batch[static_cast<std::size_t>(s)];
    if (in.rows() != spec.in_channels || in.cols() != spec.input_length)
      throw DataError("forward: input " + std::to_string(s) + " has shape " +
                      std::to_string(in.rows()) + "x" + std::to_string(in.cols()) +
                      ", expected " + std::to_string(spec.in_channels) + "x" +
                      std::to_string(spec.input_length));
    acts[static_cast<std::size_t>(s)] = in.transpose();  // L x C
  }

  for (std::size_t blk_i = 0; blk_i < model.blocks.size(); ++blk_i) {
    ConvBlock& blk = model.blocks[blk_i];
    const int f = spec.conv_filters[blk_i];
    const Eigen::MatrixXd wt = blk.w.transpose();

    BlockCache bc;
    if (keep_caches) bc.x = acts;

    // conv
    for (auto& a : acts) a = conv_lc(a, wt, blk.b, spec.kernel_size);

    // batch-norm statistics per filter channel
    Eigen::VectorXd mean(f), var(f);
    if (training) {
      const double count = static_cast<double>(B) * static_cast<double>(acts[0].rows());
      for (int c = 0; c < f; ++c) {
        double sum = 0.0;
        for (const auto& a : acts) sum += a.col(c).sum();
        mean[c] = sum / count;
      }
      for (int c = 0; c < f; ++c) {
        double sq = 0.0;
        for (const auto& a : acts) sq += (a.col(c).array() - mean[c]).square().sum();
        var[c] = sq / count;
      }
      blk.bn_run_mean = (1.0 - spec.bn_momentum) * blk.bn_run_mean + spec.bn_momentum * mean;
      blk.bn_run_var = (1.0 - spec.bn_momentum) * blk.bn_run_var + spec.bn_momentum * var;
    } else {
      mean = blk.bn_run_mean;
      var = blk.bn_run_var;
    }
    const Eigen::VectorXd inv_sd =
        (var.array() + spec.bn_epsilon).sqrt().inverse().matrix();
    bc.mean = mean;
    bc.inv_sd = inv_sd;

    // normalize + scale/shift + ReLU (+ pool)
    if (keep_caches) {
      bc.xhat.resize(static_cast<std::size_t>(B));
      bc.post.resize(static_cast<std::size_t>(B));
      if (spec.pool_after[blk_i]) bc.argmax.resize(static_cast<std::size_t>(B));
    }
    for (Eigen::Index s = 0; s < B; ++s) {
      auto& a = acts[static_cast<std::size_t>(s)];
      Eigen::MatrixXd xhat(a.rows(), a.cols());
      for (int c = 0; c < f; ++c)
        xhat.col(c) = (a.col(c).array() - mean[c]) * inv_sd[c];
      Eigen::MatrixXd y(a.rows(), a.cols());
      for (int c = 0; c < f; ++c)
        y.col(c) = xhat.col(c) * blk.bn_scale[c] +
                   Eigen::VectorXd::Constant(a.rows(), blk.bn_shift[c]);
      y = relu(y);
      if (keep_caches) {
        bc.xhat[static_cast<std::size_t>(s)] = xhat;
        bc.post[static_cast<std::size_t>(s)] = y;
      }
      if (spec.pool_after[blk_i]) {
        Eigen::MatrixXi am;
        a = maxpool2_forward(y, am);
        if (keep_caches) bc.argmax[static_cast<std::size_t>(s)] = am;
      } else {
        a = y;
      }
    }
    if (keep_caches) cache.blocks.push_back(std::move(bc));
  }

  // flatten (channel-major: the L x C column-major buffer is already flat)
  const int flat_dim = spec.flatten_dim();
  cache.flat.resize(flat_dim, B);
  for (Eigen::Index s = 0; s < B; ++s) {
    const auto& a = acts[static_cast<std::size_t>(s)];
    cache.flat.col(s) = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
  }

  cache.h_pre = (model.fc1.w * cache.flat).colwise() + model.fc1.b;
  cache.h = relu(cache.h_pre);
  Eigen::MatrixXd logits = ((model.fc2.w * cache.h).colwise() + model.fc2.b).transpose();
  cache.probs = softmax_rows(logits);
  return cache;
}

}  // namespace

Eigen::MatrixXd forward(CnnModel& model, const Batch& batch, bool training) {
  return run_forward(model, batch, training, false).probs;
}

double loss_and_gradients(CnnModel& model, const Batch& batch,
                          const std::vector<int>& labels, Gradients& grads) {
  const CnnSpec& spec = model.spec;
  const auto B = static_cast<Eigen::Index>(batch.size());
  if (B != static_cast<Eigen::Index>(labels.size()))
    throw DataError("loss_and_gradients: label count mismatch");

  ForwardCache cache = run_forward(model, batch, true, true);
  const double loss = cross_entropy(cache.probs, labels);

  // d loss / d logits = (P - Y) / B, per sample column.
  Eigen::MatrixXd dlogits = cache.probs.transpose();  // C x B
  for (Eigen::Index s = 0; s < B; ++s)
    dlogits(labels[static_cast<std::size_t>(s)], s) -= 1.0;
  dlogits /= static_cast<double>(B);

  grads.fc2_w = dlogits * cache.h.transpose();
  grads.fc2_b = dlogits.rowwise().sum();
  Eigen::MatrixXd dh = model.fc2.w.transpose() * dlogits;
  dh = (cache.h_pre.array() > 0.0).select(dh, 0.0);
  grads.fc1_w = dh * cache.flat.transpose();
  grads.fc1_b = dh.rowwise().sum();
  Eigen::MatrixXd dflat = model.fc1.w.transpose() * dh;

  const std::size_t n_blocks = model.blocks.size();
  grads.conv_w.assign(n_blocks, {});
  grads.conv_b.assign(n_blocks, {});
  grads.bn_scale.assign(n_blocks, {});
  grads.bn_shift.assign(n_blocks, {});

  // unflatten into per-sample L x C gradients
  const auto lengths = spec.layer_lengths();
  std::vector<Eigen::MatrixXd> da(static_cast<std::size_t>(B));
  {
    const int L = lengths.back();
    const int C = spec.conv_filters.back();
    for (Eigen::Index s = 0; s < B; ++s)
      da[static_cast<std::size_t>(s)] =
          Eigen::Map<const Eigen::MatrixXd>(dflat.col(s).data(), L, C);
  }

  for (int blk_i = static_cast<int>(n_blocks) - 1; blk_i >= 0; --blk_i) {
    ConvBlock& blk = model.blocks[static_cast<std::size_t>(blk_i)];
    const BlockCache& bc = cache.blocks[static_cast<std::size_t>(blk_i)];
    const int f = spec.conv_filters[static_cast<std::size_t>(blk_i)];
    const double count =
        static_cast<double>(B) * static_cast<double>(bc.post[0].rows());

    // through pool (if any) and ReLU
    for (Eigen::Index s = 0; s < B; ++s) {
      auto& d = da[static_cast<std::size_t>(s)];
      const auto& post = bc.post[static_cast<std::size_t>(s)];
      if (spec.pool_after[static_cast<std::size_t>(blk_i)])
        d = maxpool2_backward(d, bc.argmax[static_cast<std::size_t>(s)], post.rows());
      d = (post.array() > 0.0).select(d, 0.0);
    }

    // batch-norm backward (training-mode statistics)
    Eigen::VectorXd dscale = Eigen::VectorXd::Zero(f);
    Eigen::VectorXd dshift = Eigen::VectorXd::Zero(f);
    Eigen::VectorXd dxhat_sum = Eigen::VectorXd::Zero(f);
    Eigen::VectorXd dxhat_dot = Eigen::VectorXd::Zero(f);  // sum(dxhat * xhat)
    for (Eigen::Index s = 0; s < B; ++s) {
      const auto& d = da[static_cast<std::size_t>(s)];
      const auto& xhat = bc.xhat[static_cast<std::size_t>(s)];
      for (int c = 0; c < f; ++c) {
        dscale[c] += (d.col(c).array() * xhat.col(c).array()).sum();
        dshift[c] += d.col(c).sum();
      }
    }
    for (int c = 0; c < f; ++c) {
      dxhat_sum[c] = dshift[c] * blk.bn_scale[c];
      dxhat_dot[c] = dscale[c] * blk.bn_scale[c];
    }
    grads.bn_scale[static_cast<std::size_t>(blk_i)] = dscale;
    grads.bn_shift[static_cast<std::size_t>(blk_i)] = dshift;

    // dX = inv_sd/count * (count*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
    for (Eigen::Index s = 0; s < B; ++s) {
      auto& d = da[static_cast<std::size_t>(s)];
      const auto& xhat = bc.xhat[static_cast<std::size_t>(s)];
      for (int c = 0; c < f; ++c) {
        const double scale = blk.bn_scale[c];
        d.col(c) = (bc.inv_sd[c] / count) *
                   (count * scale * d.col(c).array() - dxhat_sum[c] -
                    xhat.col(c).array() * dxhat_dot[c])
                       .matrix();
      }
    }

    // conv backward, accumulated over the batch in sample order
    const Eigen::MatrixXd wt = blk.w.transpose();
    Eigen::MatrixXd dwt_total = Eigen::MatrixXd::Zero(wt.rows(), wt.cols());
    Eigen::VectorXd db_total = Eigen::VectorXd::Zero(f);
    for (Eigen::Index s = 0; s < B; ++s) {
      Eigen::MatrixXd dxt, dwt;
      Eigen::VectorXd db;
      conv_lc_backward(bc.x[static_cast<std::size_t>(s)], wt,
                       da[static_cast<std::size_t>(s)], spec.kernel_size, dxt, dwt,
                       db);
      dwt_total += dwt;
      db_total += db;
      da[static_cast<std::size_t>(s)] = std::move(dxt);
    }
    grads.conv_w[static_cast<std::size_t>(blk_i)] = dwt_total.transpose();
    grads.conv_b[static_cast<std::size_t>(blk_i)] = db_total;
  }

  return loss;
}

}  // namespace energon
