#ifndef EMOTTS_MODEL_TAPE_H_
#define EMOTTS_MODEL_TAPE_H_

#include <Eigen/Core>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace emotts::model {

// Feature maps are channels x time; one column per frame.
using Matrix = Eigen::MatrixXd;

// Ordered, named parameter tensors of one network.
class ParamSet {
 public:
  void Add(const std::string& name, Matrix value);

  size_t size() const { return values_.size(); }
  const std::string& name(size_t i) const { return names_[i]; }
  const Matrix& value(size_t i) const { return values_[i]; }
  Matrix& value(size_t i) { return values_[i]; }

  // Index of `name`; throws ShapeMismatch when absent.
  size_t IndexOf(const std::string& name) const;
  bool Contains(const std::string& name) const { return index_.count(name) > 0; }
  const Matrix& Get(const std::string& name) const { return values_[IndexOf(name)]; }

  size_t ScalarCount() const;
  bool AllFinite() const;
  bool BitIdentical(const ParamSet& other) const;

  // Zero matrices with the same shapes, for gradient accumulation.
  std::vector<Matrix> ZerosLike() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::map<std::string, size_t> index_;
};

// Optional per-column restriction of attention to rows [first, last].
using AttentionWindows = std::vector<std::pair<int, int>>;

struct Var {
  int id = -1;
};

// Reverse-mode automatic differentiation over dense matrices. Each op records
// its output value and, when recording, a closure that pushes the output
// gradient back to its inputs.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Matrix value);
  // Leaf that references `value` without copying. Its gradient is added to
  // `*grad_sink` during Backward (nullptr for a frozen parameter).
  Var Leaf(const Matrix& value, Matrix* grad_sink);

  const Matrix& value(Var v) const;
  int size() const { return static_cast<int>(nodes_.size()); }

  // 1-D convolution. `w` is Cout x (kernel * Cin) with tap blocks side by
  // side, `b` is Cout x 1. Causal convolutions only look at past frames.
  Var Conv1d(Var x, Var w, Var b, int kernel, int dilation, bool causal);
  // Highway block: h = conv(x) with 2C outputs, gate = sigmoid(h[:C]),
  // y = gate * h[C:] + (1 - gate) * x.
  Var HighwayConv(Var x, Var w, Var b, int kernel, int dilation, bool causal);
  // Transposed convolution with kernel 2 and stride 2. `w` is (2*Cout) x Cin,
  // rows [j*Cout, (j+1)*Cout) produce output frame 2t + j.
  Var ConvTranspose2(Var x, Var w, Var b);

  Var Relu(Var x);
  Var Sigmoid(Var x);
  Var Scale(Var x, double s);
  Var Add(Var a, Var b);
  Var RowSlice(Var x, int begin, int count);
  Var ConcatRows(Var top, Var bottom);
  // aᵀ b
  Var MatMulTransA(Var a, Var b);
  Var MatMul(Var a, Var b);
  // Column-wise softmax; entries outside an optional window get zero mass.
  Var SoftmaxColumns(Var x, const AttentionWindows* windows = nullptr);
  // Columns of `table` (dim x vocab) picked by `ids`.
  Var Embedding(Var table, const std::vector<int>& ids);

  // Scalar (1x1) losses.
  struct SpectrogramTerms {
    Var total;
    double l1 = 0.0;
    double ce = 0.0;
  };
  // Mean |sigmoid(z) - y| + mean binary cross-entropy on logits clamped to ±15.
  SpectrogramTerms SpectrogramLoss(Var logits, const Matrix& target);
  // mean(A ⊙ W), W[n,t] = 1 - exp(-(n/N - t/T)^2 / (2 g^2)).
  Var GuidedAttentionLoss(Var attention, double g);
  Var Sum(const std::vector<Var>& scalars, double scale = 1.0);

  // Seeds d(loss)/d(loss) = 1 and propagates to every leaf sink.
  void Backward(Var loss);

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Matrix grad;
    Matrix* grad_sink = nullptr;
    std::function<void(Tape&, const Matrix&)> backward;
  };

  Var Push(Matrix value, std::function<void(Tape&, const Matrix&)> backward);
  void AccumulateGrad(int id, const Matrix& g);
  template <typename Fn>
  void AccumulateGradWith(int id, Eigen::Index rows, Eigen::Index cols, Fn&& fn);

  bool record_;
  std::deque<Node> nodes_;
};

// Pure evaluation helpers (no tape).
double GuidedAttentionWeight(int n, int t, int text_len, int frames, double g);
struct SpectrogramLossValue {
  double total = 0.0;
  double l1 = 0.0;
  double ce = 0.0;
};
SpectrogramLossValue SpectrogramLossFromLogits(const Matrix& logits, const Matrix& target);
// `pred` are probabilities in (0, 1); converted to logits before evaluation.
SpectrogramLossValue SpectrogramLoss(const Matrix& pred, const Matrix& target);
double GuidedAttentionLoss(const Matrix& attention, double g);

inline constexpr double kLogitClamp = 15.0;

}  // namespace emotts::model

#endif  // EMOTTS_MODEL_TAPE_H_
