#include "emotts/model/tape.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "emotts/common/error.h"

namespace emotts::model {
namespace {

int TapOffset(int k, int kernel, int dilation, bool causal) {
  return causal ? (k - (kernel - 1)) * dilation : (k - (kernel - 1) / 2) * dilation;
}

// Valid output columns [t0, t1) for a tap offset over T frames.
std::pair<Eigen::Index, Eigen::Index> TapRange(int offset, Eigen::Index frames) {
  const Eigen::Index t0 = std::max<Eigen::Index>(0, -offset);
  const Eigen::Index t1 = std::min<Eigen::Index>(frames, frames - offset);
  return {t0, std::max(t0, t1)};
}

Matrix Im2Col(const Matrix& x, int kernel, int dilation, bool causal) {
  const Eigen::Index cin = x.rows();
  const Eigen::Index frames = x.cols();
  Matrix cols = Matrix::Zero(cin * kernel, frames);
  for (int k = 0; k < kernel; ++k) {
    const int off = TapOffset(k, kernel, dilation, causal);
    const auto [t0, t1] = TapRange(off, frames);
    if (t1 > t0) cols.block(k * cin, t0, cin, t1 - t0) = x.middleCols(t0 + off, t1 - t0);
  }
  return cols;
}

void Col2ImAdd(const Matrix& dcols, int kernel, int dilation, bool causal, Matrix& dx) {
  const Eigen::Index cin = dx.rows();
  const Eigen::Index frames = dx.cols();
  for (int k = 0; k < kernel; ++k) {
    const int off = TapOffset(k, kernel, dilation, causal);
    const auto [t0, t1] = TapRange(off, frames);
    if (t1 > t0) dx.middleCols(t0 + off, t1 - t0) += dcols.block(k * cin, t0, cin, t1 - t0);
  }
}

double StableSigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void CheckConvShapes(const Matrix& x, const Matrix& w, const Matrix& b, int kernel, int cout_mult,
                     const char* op) {
  if (w.cols() != x.rows() * kernel || b.rows() != w.rows() || b.cols() != 1 ||
      w.rows() % cout_mult != 0) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("{}: x {}x{}, w {}x{}, b {}x{}, kernel {}", op, x.rows(), x.cols(),
                            w.rows(), w.cols(), b.rows(), b.cols(), kernel));
  }
}

}  // namespace

// ---------------------------------------------------------------- ParamSet

void ParamSet::Add(const std::string& name, Matrix value) {
  if (index_.count(name)) {
    throw Error(ErrorCode::kShapeMismatch, "duplicate parameter " + name);
  }
  index_[name] = values_.size();
  names_.push_back(name);
  values_.push_back(std::move(value));
}

size_t ParamSet::IndexOf(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::kShapeMismatch, "no parameter " + name);
  return it->second;
}

size_t ParamSet::ScalarCount() const {
  size_t n = 0;
  for (const auto& v : values_) n += static_cast<size_t>(v.size());
  return n;
}

bool ParamSet::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](const Matrix& m) { return m.allFinite(); });
}

bool ParamSet::BitIdentical(const ParamSet& other) const {
  if (names_ != other.names_) return false;
  for (size_t i = 0; i < values_.size(); ++i) {
    const Matrix& a = values_[i];
    const Matrix& b = other.values_[i];
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<size_t>(a.size())) != 0) {
      return false;
    }
  }
  return true;
}

std::vector<Matrix> ParamSet::ZerosLike() const {
  std::vector<Matrix> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(Matrix::Zero(v.rows(), v.cols()));
  return out;
}

// ---------------------------------------------------------------- Tape core

Var Tape::Push(Matrix value, std::function<void(Tape&, const Matrix&)> backward) {
  Node n;
  n.value = std::move(value);
  if (record_) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Constant(Matrix value) { return Push(std::move(value), nullptr); }

Var Tape::Leaf(const Matrix& value, Matrix* grad_sink) {
  Node n;
  n.ref = &value;
  n.grad_sink = record_ ? grad_sink : nullptr;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::value(Var v) const {
  const Node& n = nodes_[static_cast<size_t>(v.id)];
  return n.ref ? *n.ref : n.value;
}

void Tape::AccumulateGrad(int id, const Matrix& g) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.backward && !n.grad_sink) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

template <typename Fn>
void Tape::AccumulateGradWith(int id, Eigen::Index rows, Eigen::Index cols, Fn&& fn) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.backward && !n.grad_sink) return;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(rows, cols);
  fn(n.grad);
}

void Tape::Backward(Var loss) {
  if (!record_) throw Error(ErrorCode::kShapeMismatch, "Backward on a non-recording tape");
  Node& root = nodes_[static_cast<size_t>(loss.id)];
  root.grad = Matrix::Ones(root.value.rows(), root.value.cols());
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.grad_sink) *n.grad_sink += n.grad;
    n.grad.resize(0, 0);
  }
}

// ---------------------------------------------------------------- ops

Var Tape::Conv1d(Var x, Var w, Var b, int kernel, int dilation, bool causal) {
  const Matrix& xv = value(x);
  const Matrix& wv = value(w);
  const Matrix& bv = value(b);
  CheckConvShapes(xv, wv, bv, kernel, 1, "conv1d");
  Matrix cols = kernel == 1 ? Matrix() : Im2Col(xv, kernel, dilation, causal);
  const Matrix& input = kernel == 1 ? xv : cols;
  Matrix y = wv * input;
  y.colwise() += bv.col(0);
  return Push(std::move(y), [x, w, b, kernel, dilation, causal,
                             cols = std::move(cols)](Tape& t, const Matrix& dy) {
    const Matrix& in = kernel == 1 ? t.value(x) : cols;
    t.AccumulateGradWith(w.id, t.value(w).rows(), t.value(w).cols(),
                         [&](Matrix& g) { g.noalias() += dy * in.transpose(); });
    t.AccumulateGradWith(b.id, dy.rows(), 1,
                         [&](Matrix& g) { g.col(0) += dy.rowwise().sum(); });
    const Matrix& xv = t.value(x);
    t.AccumulateGradWith(x.id, xv.rows(), xv.cols(), [&](Matrix& g) {
      if (kernel == 1) {
        g.noalias() += t.value(w).transpose() * dy;
      } else {
        const Matrix dcols = t.value(w).transpose() * dy;
        Col2ImAdd(dcols, kernel, dilation, causal, g);
      }
    });
  });
}

Var Tape::HighwayConv(Var x, Var w, Var b, int kernel, int dilation, bool causal) {
  const Matrix& xv = value(x);
  const Matrix& wv = value(w);
  const Matrix& bv = value(b);
  CheckConvShapes(xv, wv, bv, kernel, 2, "highway");
  if (wv.rows() != 2 * xv.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "highway: weight must have 2x input channels");
  }
  const Eigen::Index c = xv.rows();
  Matrix cols = kernel == 1 ? Matrix() : Im2Col(xv, kernel, dilation, causal);
  const Matrix& input = kernel == 1 ? xv : cols;
  Matrix h = wv * input;
  h.colwise() += bv.col(0);
  Matrix gate = h.topRows(c).unaryExpr([](double z) { return StableSigmoid(z); });
  Matrix carry = h.bottomRows(c);
  Matrix y = gate.cwiseProduct(carry) + (1.0 - gate.array()).matrix().cwiseProduct(xv);
  return Push(std::move(y), [x, w, b, kernel, dilation, causal, cols = std::move(cols),
                             gate = std::move(gate),
                             carry = std::move(carry)](Tape& t, const Matrix& dy) {
    const Matrix& xv = t.value(x);
    const Eigen::Index c = xv.rows();
    Matrix dh(2 * c, xv.cols());
    dh.bottomRows(c) = gate.cwiseProduct(dy);
    dh.topRows(c) = (dy.array() * (carry - xv).array() * gate.array() * (1.0 - gate.array()))
                        .matrix();
    const Matrix& in = kernel == 1 ? xv : cols;
    t.AccumulateGradWith(w.id, t.value(w).rows(), t.value(w).cols(),
                         [&](Matrix& g) { g.noalias() += dh * in.transpose(); });
    t.AccumulateGradWith(b.id, dh.rows(), 1,
                         [&](Matrix& g) { g.col(0) += dh.rowwise().sum(); });
    t.AccumulateGradWith(x.id, xv.rows(), xv.cols(), [&](Matrix& g) {
      g += ((1.0 - gate.array()) * dy.array()).matrix();
      if (kernel == 1) {
        g.noalias() += t.value(w).transpose() * dh;
      } else {
        const Matrix dcols = t.value(w).transpose() * dh;
        Col2ImAdd(dcols, kernel, dilation, causal, g);
      }
    });
  });
}

Var Tape::ConvTranspose2(Var x, Var w, Var b) {
  const Matrix& xv = value(x);
  const Matrix& wv = value(w);
  const Matrix& bv = value(b);
  if (wv.cols() != xv.rows() || wv.rows() != 2 * bv.rows() || bv.cols() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "conv_transpose2: inconsistent shapes");
  }
  const Eigen::Index cout = bv.rows();
  const Eigen::Index frames = xv.cols();
  const Matrix z = wv * xv;  // (2*Cout) x T
  Matrix y(cout, 2 * frames);
  for (Eigen::Index t = 0; t < frames; ++t) {
    y.col(2 * t) = z.col(t).head(cout) + bv.col(0);
    y.col(2 * t + 1) = z.col(t).tail(cout) + bv.col(0);
  }
  return Push(std::move(y), [x, w, b](Tape& t, const Matrix& dy) {
    const Matrix& xv = t.value(x);
    const Eigen::Index cout = dy.rows();
    const Eigen::Index frames = xv.cols();
    Matrix dz(2 * cout, frames);
    for (Eigen::Index i = 0; i < frames; ++i) {
      dz.col(i).head(cout) = dy.col(2 * i);
      dz.col(i).tail(cout) = dy.col(2 * i + 1);
    }
    t.AccumulateGradWith(w.id, 2 * cout, xv.rows(),
                         [&](Matrix& g) { g.noalias() += dz * xv.transpose(); });
    t.AccumulateGradWith(b.id, cout, 1, [&](Matrix& g) { g.col(0) += dy.rowwise().sum(); });
    t.AccumulateGradWith(x.id, xv.rows(), frames,
                         [&](Matrix& g) { g.noalias() += t.value(w).transpose() * dz; });
  });
}

Var Tape::Relu(Var x) {
  Matrix y = value(x).cwiseMax(0.0);
  return Push(std::move(y), [x](Tape& t, const Matrix& dy) {
    const Matrix& xv = t.value(x);
    t.AccumulateGrad(x.id, (xv.array() > 0.0).select(dy, 0.0));
  });
}

Var Tape::Sigmoid(Var x) {
  Matrix y = value(x).unaryExpr([](double z) { return StableSigmoid(z); });
  Matrix saved = y;
  return Push(std::move(y), [x, saved = std::move(saved)](Tape& t, const Matrix& dy) {
    t.AccumulateGrad(x.id, (dy.array() * saved.array() * (1.0 - saved.array())).matrix());
  });
}

Var Tape::Scale(Var x, double s) {
  return Push(value(x) * s, [x, s](Tape& t, const Matrix& dy) { t.AccumulateGrad(x.id, dy * s); });
}

Var Tape::Add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw Error(ErrorCode::kShapeMismatch, "add: shapes differ");
  }
  return Push(value(a) + value(b), [a, b](Tape& t, const Matrix& dy) {
    t.AccumulateGrad(a.id, dy);
    t.AccumulateGrad(b.id, dy);
  });
}

Var Tape::RowSlice(Var x, int begin, int count) {
  const Matrix& xv = value(x);
  if (begin < 0 || count < 0 || begin + count > xv.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "row slice out of range");
  }
  return Push(xv.middleRows(begin, count), [x, begin, count](Tape& t, const Matrix& dy) {
    const Matrix& xv = t.value(x);
    t.AccumulateGradWith(x.id, xv.rows(), xv.cols(),
                         [&](Matrix& g) { g.middleRows(begin, count) += dy; });
  });
}

Var Tape::ConcatRows(Var top, Var bottom) {
  const Matrix& a = value(top);
  const Matrix& c = value(bottom);
  if (a.cols() != c.cols()) throw Error(ErrorCode::kShapeMismatch, "concat: frame counts differ");
  Matrix y(a.rows() + c.rows(), a.cols());
  y << a, c;
  const Eigen::Index rows_top = a.rows();
  return Push(std::move(y), [top, bottom, rows_top](Tape& t, const Matrix& dy) {
    t.AccumulateGrad(top.id, dy.topRows(rows_top));
    t.AccumulateGrad(bottom.id, dy.bottomRows(dy.rows() - rows_top));
  });
}

Var Tape::MatMulTransA(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.rows() != bv.rows()) throw Error(ErrorCode::kShapeMismatch, "matmul_ta: inner dims");
  return Push(av.transpose() * bv, [a, b](Tape& t, const Matrix& dy) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    t.AccumulateGradWith(a.id, av.rows(), av.cols(),
                         [&](Matrix& g) { g.noalias() += bv * dy.transpose(); });
    t.AccumulateGradWith(b.id, bv.rows(), bv.cols(), [&](Matrix& g) { g.noalias() += av * dy; });
  });
}

Var Tape::MatMul(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.cols() != bv.rows()) throw Error(ErrorCode::kShapeMismatch, "matmul: inner dims");
  return Push(av * bv, [a, b](Tape& t, const Matrix& dy) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    t.AccumulateGradWith(a.id, av.rows(), av.cols(),
                         [&](Matrix& g) { g.noalias() += dy * bv.transpose(); });
    t.AccumulateGradWith(b.id, bv.rows(), bv.cols(),
                         [&](Matrix& g) { g.noalias() += av.transpose() * dy; });
  });
}

Var Tape::SoftmaxColumns(Var x, const AttentionWindows* windows) {
  const Matrix& xv = value(x);
  Matrix y = Matrix::Zero(xv.rows(), xv.cols());
  for (Eigen::Index t = 0; t < xv.cols(); ++t) {
    Eigen::Index lo = 0;
    Eigen::Index hi = xv.rows() - 1;
    if (windows && t < static_cast<Eigen::Index>(windows->size())) {
      lo = std::clamp<Eigen::Index>((*windows)[static_cast<size_t>(t)].first, 0, xv.rows() - 1);
      hi = std::clamp<Eigen::Index>((*windows)[static_cast<size_t>(t)].second, lo, xv.rows() - 1);
    }
    const auto seg = xv.col(t).segment(lo, hi - lo + 1);
    const double m = seg.maxCoeff();
    auto out = y.col(t).segment(lo, hi - lo + 1);
    out = (seg.array() - m).exp().matrix();
    out /= out.sum();
  }
  Matrix saved = y;
  return Push(std::move(y), [x, saved = std::move(saved)](Tape& t, const Matrix& dy) {
    // dS = A ⊙ (dA - <dA, A>) per column; masked entries have A = 0.
    const Eigen::RowVectorXd inner = (dy.array() * saved.array()).colwise().sum();
    Matrix dx = saved.array() * (dy.array().rowwise() - inner.array());
    t.AccumulateGrad(x.id, dx);
  });
}

Var Tape::Embedding(Var table, const std::vector<int>& ids) {
  const Matrix& tv = value(table);
  Matrix y(tv.rows(), static_cast<Eigen::Index>(ids.size()));
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.cols()) {
      throw Error(ErrorCode::kShapeMismatch, fmt::format("embedding id {} out of range", ids[i]));
    }
    y.col(static_cast<Eigen::Index>(i)) = tv.col(ids[i]);
  }
  return Push(std::move(y), [table, ids](Tape& t, const Matrix& dy) {
    const Matrix& tv = t.value(table);
    t.AccumulateGradWith(table.id, tv.rows(), tv.cols(), [&](Matrix& g) {
      for (size_t i = 0; i < ids.size(); ++i) g.col(ids[i]) += dy.col(static_cast<Eigen::Index>(i));
    });
  });
}

Tape::SpectrogramTerms Tape::SpectrogramLoss(Var logits, const Matrix& target) {
  const Matrix& z = value(logits);
  if (z.rows() != target.rows() || z.cols() != target.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("spectrogram loss: {}x{} vs {}x{}", z.rows(), z.cols(), target.rows(),
                            target.cols()));
  }
  const SpectrogramLossValue v = SpectrogramLossFromLogits(z, target);
  Matrix out(1, 1);
  out(0, 0) = v.total;
  Var total = Push(std::move(out), [logits, target](Tape& t, const Matrix& dy) {
    const Matrix& z = t.value(logits);
    const double scale = dy(0, 0) / static_cast<double>(z.size());
    Matrix g(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double zi = z.data()[i];
      const double yi = target.data()[i];
      const double p = StableSigmoid(zi);
      const double diff = p - yi;
      const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
      double gi = sign * p * (1.0 - p);
      if (std::abs(zi) < kLogitClamp) gi += StableSigmoid(zi) - yi;
      g.data()[i] = gi * scale;
    }
    t.AccumulateGrad(logits.id, g);
  });
  return {total, v.l1, v.ce};
}

Var Tape::GuidedAttentionLoss(Var attention, double g) {
  const Matrix& a = value(attention);
  const int n_text = static_cast<int>(a.rows());
  const int frames = static_cast<int>(a.cols());
  Matrix weights(a.rows(), a.cols());
  for (int n = 0; n < n_text; ++n) {
    for (int t = 0; t < frames; ++t) weights(n, t) = GuidedAttentionWeight(n, t, n_text, frames, g);
  }
  Matrix out(1, 1);
  out(0, 0) = a.cwiseProduct(weights).sum() / static_cast<double>(a.size());
  return Push(std::move(out), [attention, weights = std::move(weights)](Tape& t, const Matrix& dy) {
    t.AccumulateGrad(attention.id, weights * (dy(0, 0) / static_cast<double>(weights.size())));
  });
}

Var Tape::Sum(const std::vector<Var>& scalars, double scale) {
  Matrix out = Matrix::Zero(1, 1);
  for (Var v : scalars) out(0, 0) += value(v)(0, 0);
  out *= scale;
  return Push(std::move(out), [scalars, scale](Tape& t, const Matrix& dy) {
    for (Var v : scalars) t.AccumulateGrad(v.id, dy * scale);
  });
}

// ---------------------------------------------------------------- pure helpers

double GuidedAttentionWeight(int n, int t, int text_len, int frames, double g) {
  const double d = static_cast<double>(n) / text_len - static_cast<double>(t) / frames;
  return 1.0 - std::exp(-(d * d) / (2.0 * g * g));
}

SpectrogramLossValue SpectrogramLossFromLogits(const Matrix& logits, const Matrix& target) {
  if (logits.rows() != target.rows() || logits.cols() != target.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "spectrogram loss: shapes differ");
  }
  SpectrogramLossValue v;
  if (logits.size() == 0) return v;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double z = logits.data()[i];
    const double y = target.data()[i];
    v.l1 += std::abs(StableSigmoid(z) - y);
    const double zc = std::clamp(z, -kLogitClamp, kLogitClamp);
    v.ce += std::max(zc, 0.0) - y * zc + std::log1p(std::exp(-std::abs(zc)));
  }
  const double n = static_cast<double>(logits.size());
  v.l1 /= n;
  v.ce /= n;
  v.total = v.l1 + v.ce;
  return v;
}

SpectrogramLossValue SpectrogramLoss(const Matrix& pred, const Matrix& target) {
  const Matrix logits = pred.unaryExpr([](double p) {
    const double eps = std::numeric_limits<double>::min();
    const double q = std::clamp(p, eps, 1.0 - std::numeric_limits<double>::epsilon() / 2);
    return std::log(q) - std::log1p(-q);
  });
  return SpectrogramLossFromLogits(logits, target);
}

double GuidedAttentionLoss(const Matrix& attention, double g) {
  if (attention.size() == 0) return 0.0;
  const int n_text = static_cast<int>(attention.rows());
  const int frames = static_cast<int>(attention.cols());
  double acc = 0.0;
  for (int n = 0; n < n_text; ++n) {
    for (int t = 0; t < frames; ++t) {
      acc += attention(n, t) * GuidedAttentionWeight(n, t, n_text, frames, g);
    }
  }
  return acc / static_cast<double>(attention.size());
}

}  // namespace emotts::model
