#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "styleobf/common.hpp"

namespace styleobf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Tensor {
  std::string name;
  Mat value;
  Mat grad;
};

// Named parameter matrices with matching gradient buffers.
class ParamStore {
 public:
  int add(const std::string& name, int rows, int cols);
  Tensor& at(int id) { return tensors_[id]; }
  const Tensor& at(int id) const { return tensors_[id]; }
  int find(const std::string& name) const;  // -1 when absent
  size_t size() const { return tensors_.size(); }
  size_t scalar_count() const;
  void zero_grad();
  double grad_norm() const;
  void clip_grad(double max_norm);
  void init_uniform(Rng& rng, double scale);
  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

 private:
  std::vector<Tensor> tensors_;
};

// Adaptive first-order optimizer with per-weight moment estimates and
// bias-corrected steps.
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ParamStore& params);
  long steps_taken() const { return t_; }
  void set_steps_taken(long t) { t_ = t; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mat> m_, v_;
};

// Weight reference used by matrix ops: a trainable tensor id or a frozen
// matrix that receives no gradient.
struct WRef {
  int param_id = -1;
  const Mat* frozen = nullptr;
  static WRef param(int id) { return WRef{id, nullptr}; }
  static WRef fixed(const Mat* m) { return WRef{-1, m}; }
};

// Dynamically built computation graph over vector-valued nodes. Values are
// computed eagerly when a node is created; backward() runs the reverse sweep
// and accumulates parameter gradients into the attached ParamStore.
class Tape {
 public:
  explicit Tape(ParamStore* params) : params_(params) {}

  void reset();
  int size() const { return static_cast<int>(nodes_.size()); }

  int constant(Vec v);
  int scalar_constant(double s);
  int param_vec(int tensor_id);            // (n,1) tensor viewed as a vector
  int param_row(int tensor_id, int row);   // one row of a matrix (embedding)
  int matvec(WRef w, int x);               // W * x
  int matvec_t(WRef w, int x);             // W^T * x
  int add(int a, int b);
  int axpby(double alpha, int a, double beta, int b);
  int scale(int a, double k);
  int concat(const std::vector<int>& parts);
  int slice(int a, int offset, int len);
  int sigmoid(int a);
  int tanh(int a);
  int hadamard(int a, int b);
  int log_softmax(int a);
  int softmax(int a);
  int pick(int a, int index);              // scalar: a[index]
  int dot(int a, int b);                   // scalar
  int pack(const std::vector<int>& scalars);
  int weighted_sum(const std::vector<int>& states, int weights);
  int max_pool(const std::vector<int>& states);
  int logsumexp(const std::vector<int>& scalars);   // scalar
  int min_of(const std::vector<int>& scalars);      // scalar
  int sum(const std::vector<int>& scalars);         // scalar
  // Straight-through sample: forward value is the exact one-hot at
  // argmax(logits + noise); backward flows through softmax((logits+noise)/tau).
  int st_gumbel(int logits, double tau, const Vec& noise);

  const Vec& value(int id) const { return nodes_[id].val; }
  double value_scalar(int id) const { return nodes_[id].val(0); }
  const Vec& gradient(int id) const { return nodes_[id].grad; }

  void backward(int loss_id);

 private:
  enum class Op {
    kConst,
    kParamVec,
    kParamRow,
    kMatVec,
    kMatVecT,
    kAdd,
    kAxpby,
    kScale,
    kConcat,
    kSlice,
    kSigmoid,
    kTanh,
    kHadamard,
    kLogSoftmax,
    kSoftmax,
    kPick,
    kDot,
    kPack,
    kWeightedSum,
    kMaxPool,
    kLogSumExp,
    kMinOf,
    kSum,
    kStGumbel,
  };

  struct Node {
    Op op;
    Vec val;
    Vec grad;
    int a = -1, b = -1;
    int tensor = -1;
    const Mat* frozen = nullptr;
    int aux = 0;
    double k = 0.0, k2 = 0.0;
    std::vector<int> list;
    Vec cache;
    Eigen::VectorXi icache;
  };

  int push(Node n);
  const Mat& weight(const Node& n) const;
  Vec& grad_buf(int id);

  std::vector<Node> nodes_;
  ParamStore* params_;
};

Vec softmax_plain(const Vec& logits);
Vec log_softmax_plain(const Vec& logits);
double logsumexp_plain(const std::vector<double>& xs);

}  // namespace styleobf
