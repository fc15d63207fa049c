#include "styleobf/tape.hpp"

#include <cmath>
#include <limits>

namespace styleobf {

int ParamStore::add(const std::string& name, int rows, int cols) {
  if (rows <= 0 || cols <= 0)
    throw ConfigError("parameter '" + name + "' must have positive shape");
  if (find(name) >= 0)
    throw ConfigError("duplicate parameter name '" + name + "'");
  Tensor t;
  t.name = name;
  t.value = Mat::Zero(rows, cols);
  t.grad = Mat::Zero(rows, cols);
  tensors_.push_back(std::move(t));
  return static_cast<int>(tensors_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
  for (size_t i = 0; i < tensors_.size(); ++i)
    if (tensors_[i].name == name) return static_cast<int>(i);
  return -1;
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<size_t>(t.value.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& t : tensors_) t.grad.setZero();
}

double ParamStore::grad_norm() const {
  double s = 0;
  for (const auto& t : tensors_) s += t.grad.squaredNorm();
  return std::sqrt(s);
}

void ParamStore::clip_grad(double max_norm) {
  if (max_norm <= 0) return;
  const double n = grad_norm();
  if (n > max_norm) {
    const double f = max_norm / n;
    for (auto& t : tensors_) t.grad *= f;
  }
}

void ParamStore::init_uniform(Rng& rng, double scale) {
  for (auto& t : tensors_) {
    for (Eigen::Index c = 0; c < t.value.cols(); ++c)
      for (Eigen::Index r = 0; r < t.value.rows(); ++r)
        t.value(r, c) = (rng.uniform01() * 2.0 - 1.0) * scale;
  }
}

void Adam::step(ParamStore& params) {
  auto& ts = params.tensors();
  if (m_.empty()) {
    for (const auto& t : ts) {
      m_.push_back(Mat::Zero(t.value.rows(), t.value.cols()));
      v_.push_back(Mat::Zero(t.value.rows(), t.value.cols()));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < ts.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * ts[i].grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * ts[i].grad.cwiseProduct(ts[i].grad);
    const Mat mhat = m_[i] / bc1;
    const Mat vhat = v_[i] / bc2;
    ts[i].value -= lr_ * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
  }
}

void Tape::reset() { nodes_.clear(); }

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

const Mat& Tape::weight(const Node& n) const {
  return n.tensor >= 0 ? params_->at(n.tensor).value : *n.frozen;
}

Vec& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Vec::Zero(n.val.size());
  return n.grad;
}

int Tape::constant(Vec v) {
  Node n;
  n.op = Op::kConst;
  n.val = std::move(v);
  return push(std::move(n));
}

int Tape::scalar_constant(double s) {
  Vec v(1);
  v(0) = s;
  return constant(std::move(v));
}

int Tape::param_vec(int tensor_id) {
  const Tensor& t = params_->at(tensor_id);
  if (t.value.cols() != 1)
    throw ConfigError("param_vec requires a single-column tensor: " + t.name);
  Node n;
  n.op = Op::kParamVec;
  n.tensor = tensor_id;
  n.val = t.value.col(0);
  return push(std::move(n));
}

int Tape::param_row(int tensor_id, int row) {
  const Tensor& t = params_->at(tensor_id);
  if (row < 0 || row >= t.value.rows())
    throw DataError("param_row out of range for " + t.name);
  Node n;
  n.op = Op::kParamRow;
  n.tensor = tensor_id;
  n.aux = row;
  n.val = t.value.row(row).transpose();
  return push(std::move(n));
}

int Tape::matvec(WRef w, int x) {
  Node n;
  n.op = Op::kMatVec;
  n.tensor = w.param_id;
  n.frozen = w.frozen;
  n.a = x;
  n.val.noalias() = weight(n) * nodes_[x].val;
  return push(std::move(n));
}

int Tape::matvec_t(WRef w, int x) {
  Node n;
  n.op = Op::kMatVecT;
  n.tensor = w.param_id;
  n.frozen = w.frozen;
  n.a = x;
  n.val.noalias() = weight(n).transpose() * nodes_[x].val;
  return push(std::move(n));
}

int Tape::add(int a, int b) {
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.val = nodes_[a].val + nodes_[b].val;
  return push(std::move(n));
}

int Tape::axpby(double alpha, int a, double beta, int b) {
  Node n;
  n.op = Op::kAxpby;
  n.a = a;
  n.b = b;
  n.k = alpha;
  n.k2 = beta;
  n.val = alpha * nodes_[a].val + beta * nodes_[b].val;
  return push(std::move(n));
}

int Tape::scale(int a, double k) {
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.k = k;
  n.val = k * nodes_[a].val;
  return push(std::move(n));
}

int Tape::concat(const std::vector<int>& parts) {
  Node n;
  n.op = Op::kConcat;
  n.list = parts;
  Eigen::Index total = 0;
  for (int p : parts) total += nodes_[p].val.size();
  n.val.resize(total);
  Eigen::Index off = 0;
  for (int p : parts) {
    n.val.segment(off, nodes_[p].val.size()) = nodes_[p].val;
    off += nodes_[p].val.size();
  }
  return push(std::move(n));
}

int Tape::slice(int a, int offset, int len) {
  if (offset < 0 || len <= 0 || offset + len > nodes_[a].val.size())
    throw DataError("slice out of range");
  Node n;
  n.op = Op::kSlice;
  n.a = a;
  n.aux = offset;
  n.k = len;
  n.val = nodes_[a].val.segment(offset, len);
  return push(std::move(n));
}

int Tape::sigmoid(int a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a;
  n.val = nodes_[a].val.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return push(std::move(n));
}

int Tape::tanh(int a) {
  Node n;
  n.op = Op::kTanh;
  n.a = a;
  n.val = nodes_[a].val.array().tanh().matrix();
  return push(std::move(n));
}

int Tape::hadamard(int a, int b) {
  Node n;
  n.op = Op::kHadamard;
  n.a = a;
  n.b = b;
  n.val = nodes_[a].val.cwiseProduct(nodes_[b].val);
  return push(std::move(n));
}

int Tape::log_softmax(int a) {
  Node n;
  n.op = Op::kLogSoftmax;
  n.a = a;
  n.val = log_softmax_plain(nodes_[a].val);
  n.cache = n.val.array().exp().matrix();
  return push(std::move(n));
}

int Tape::softmax(int a) {
  Node n;
  n.op = Op::kSoftmax;
  n.a = a;
  n.val = softmax_plain(nodes_[a].val);
  return push(std::move(n));
}

int Tape::pick(int a, int index) {
  if (index < 0 || index >= nodes_[a].val.size())
    throw DataError("pick index out of range");
  Node n;
  n.op = Op::kPick;
  n.a = a;
  n.aux = index;
  n.val = Vec::Constant(1, nodes_[a].val(index));
  return push(std::move(n));
}

int Tape::dot(int a, int b) {
  Node n;
  n.op = Op::kDot;
  n.a = a;
  n.b = b;
  n.val = Vec::Constant(1, nodes_[a].val.dot(nodes_[b].val));
  return push(std::move(n));
}

int Tape::pack(const std::vector<int>& scalars) {
  Node n;
  n.op = Op::kPack;
  n.list = scalars;
  n.val.resize(static_cast<Eigen::Index>(scalars.size()));
  for (size_t i = 0; i < scalars.size(); ++i) n.val(static_cast<Eigen::Index>(i)) = nodes_[scalars[i]].val(0);
  return push(std::move(n));
}

int Tape::weighted_sum(const std::vector<int>& states, int weights) {
  if (states.empty()) throw DataError("weighted_sum over empty list");
  if (nodes_[weights].val.size() != static_cast<Eigen::Index>(states.size()))
    throw DataError("weighted_sum weight length mismatch");
  Node n;
  n.op = Op::kWeightedSum;
  n.list = states;
  n.b = weights;
  n.val = Vec::Zero(nodes_[states[0]].val.size());
  for (size_t i = 0; i < states.size(); ++i)
    n.val += nodes_[weights].val(static_cast<Eigen::Index>(i)) * nodes_[states[i]].val;
  return push(std::move(n));
}

int Tape::max_pool(const std::vector<int>& states) {
  if (states.empty()) throw DataError("max_pool over empty list");
  Node n;
  n.op = Op::kMaxPool;
  n.list = states;
  const Eigen::Index d = nodes_[states[0]].val.size();
  n.val = nodes_[states[0]].val;
  n.icache = Eigen::VectorXi::Zero(d);
  for (size_t i = 1; i < states.size(); ++i) {
    const Vec& v = nodes_[states[i]].val;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (v(j) > n.val(j)) {
        n.val(j) = v(j);
        n.icache(j) = static_cast<int>(i);
      }
    }
  }
  return push(std::move(n));
}

int Tape::logsumexp(const std::vector<int>& scalars) {
  if (scalars.empty()) throw DataError("logsumexp over empty list");
  Node n;
  n.op = Op::kLogSumExp;
  n.list = scalars;
  std::vector<double> xs;
  xs.reserve(scalars.size());
  for (int s : scalars) xs.push_back(nodes_[s].val(0));
  const double lse = logsumexp_plain(xs);
  n.cache.resize(static_cast<Eigen::Index>(xs.size()));
  for (size_t i = 0; i < xs.size(); ++i)
    n.cache(static_cast<Eigen::Index>(i)) = std::exp(xs[i] - lse);
  n.val = Vec::Constant(1, lse);
  return push(std::move(n));
}

int Tape::min_of(const std::vector<int>& scalars) {
  if (scalars.empty()) throw DataError("min_of over empty list");
  Node n;
  n.op = Op::kMinOf;
  n.list = scalars;
  int arg = 0;
  double best = nodes_[scalars[0]].val(0);
  for (size_t i = 1; i < scalars.size(); ++i) {
    const double v = nodes_[scalars[i]].val(0);
    if (v < best) {
      best = v;
      arg = static_cast<int>(i);
    }
  }
  n.aux = arg;
  n.val = Vec::Constant(1, best);
  return push(std::move(n));
}

int Tape::sum(const std::vector<int>& scalars) {
  Node n;
  n.op = Op::kSum;
  n.list = scalars;
  double s = 0;
  for (int x : scalars) s += nodes_[x].val(0);
  n.val = Vec::Constant(1, s);
  return push(std::move(n));
}

int Tape::st_gumbel(int logits, double tau, const Vec& noise) {
  if (tau <= 0) throw ConfigError("st_gumbel temperature must be positive");
  const Vec& l = nodes_[logits].val;
  if (noise.size() != l.size()) throw DataError("st_gumbel noise length mismatch");
  Node n;
  n.op = Op::kStGumbel;
  n.a = logits;
  n.k = tau;
  Vec perturbed = l + noise;
  Eigen::Index arg;
  perturbed.maxCoeff(&arg);
  n.cache = softmax_plain(perturbed / tau);
  n.val = Vec::Zero(l.size());
  n.val(arg) = 1.0;
  n.aux = static_cast<int>(arg);
  return push(std::move(n));
}

void Tape::backward(int loss_id) {
  if (nodes_[loss_id].val.size() != 1)
    throw DataError("backward: loss node must be scalar");
  grad_buf(loss_id)(0) = 1.0;
  for (int id = loss_id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    const Vec& g = n.grad;
    auto send = [&](int parent, auto&& fn) {
      if (parent < 0) return;
      if (nodes_[parent].op == Op::kConst) return;
      fn(grad_buf(parent));
    };
    switch (n.op) {
      case Op::kConst:
        break;
      case Op::kParamVec:
        params_->at(n.tensor).grad.col(0) += g;
        break;
      case Op::kParamRow:
        params_->at(n.tensor).grad.row(n.aux) += g.transpose();
        break;
      case Op::kMatVec:
        send(n.a, [&](Vec& ga) { ga.noalias() += weight(n).transpose() * g; });
        if (n.tensor >= 0)
          params_->at(n.tensor).grad.noalias() += g * nodes_[n.a].val.transpose();
        break;
      case Op::kMatVecT:
        send(n.a, [&](Vec& ga) { ga.noalias() += weight(n) * g; });
        if (n.tensor >= 0)
          params_->at(n.tensor).grad.noalias() += nodes_[n.a].val * g.transpose();
        break;
      case Op::kAdd:
        send(n.a, [&](Vec& ga) { ga += g; });
        send(n.b, [&](Vec& gb) { gb += g; });
        break;
      case Op::kAxpby:
        send(n.a, [&](Vec& ga) { ga += n.k * g; });
        send(n.b, [&](Vec& gb) { gb += n.k2 * g; });
        break;
      case Op::kScale:
        send(n.a, [&](Vec& ga) { ga += n.k * g; });
        break;
      case Op::kConcat: {
        Eigen::Index off = 0;
        for (int p : n.list) {
          const Eigen::Index len = nodes_[p].val.size();
          send(p, [&](Vec& gp) { gp += g.segment(off, len); });
          off += len;
        }
        break;
      }
      case Op::kSlice:
        send(n.a, [&](Vec& ga) {
          ga.segment(n.aux, static_cast<Eigen::Index>(n.k)) += g;
        });
        break;
      case Op::kSigmoid:
        send(n.a, [&](Vec& ga) {
          ga.array() += g.array() * n.val.array() * (1.0 - n.val.array());
        });
        break;
      case Op::kTanh:
        send(n.a, [&](Vec& ga) {
          ga.array() += g.array() * (1.0 - n.val.array().square());
        });
        break;
      case Op::kHadamard:
        send(n.a, [&](Vec& ga) { ga.array() += g.array() * nodes_[n.b].val.array(); });
        send(n.b, [&](Vec& gb) { gb.array() += g.array() * nodes_[n.a].val.array(); });
        break;
      case Op::kLogSoftmax: {
        const double gs = g.sum();
        send(n.a, [&](Vec& ga) { ga += g - gs * n.cache; });
        break;
      }
      case Op::kSoftmax: {
        const double gs = n.val.dot(g);
        send(n.a, [&](Vec& ga) {
          ga.array() += n.val.array() * (g.array() - gs);
        });
        break;
      }
      case Op::kPick:
        send(n.a, [&](Vec& ga) { ga(n.aux) += g(0); });
        break;
      case Op::kDot:
        send(n.a, [&](Vec& ga) { ga += g(0) * nodes_[n.b].val; });
        send(n.b, [&](Vec& gb) { gb += g(0) * nodes_[n.a].val; });
        break;
      case Op::kPack:
        for (size_t i = 0; i < n.list.size(); ++i)
          send(n.list[i], [&](Vec& gp) { gp(0) += g(static_cast<Eigen::Index>(i)); });
        break;
      case Op::kWeightedSum: {
        for (size_t i = 0; i < n.list.size(); ++i) {
          const double w = nodes_[n.b].val(static_cast<Eigen::Index>(i));
          send(n.list[i], [&](Vec& gp) { gp += w * g; });
        }
        send(n.b, [&](Vec& gw) {
          for (size_t i = 0; i < n.list.size(); ++i)
            gw(static_cast<Eigen::Index>(i)) += g.dot(nodes_[n.list[i]].val);
        });
        break;
      }
      case Op::kMaxPool:
        for (Eigen::Index j = 0; j < n.val.size(); ++j) {
          const int src = n.list[static_cast<size_t>(n.icache(j))];
          send(src, [&](Vec& gp) { gp(j) += g(j); });
        }
        break;
      case Op::kLogSumExp:
        for (size_t i = 0; i < n.list.size(); ++i)
          send(n.list[i], [&](Vec& gp) {
            gp(0) += g(0) * n.cache(static_cast<Eigen::Index>(i));
          });
        break;
      case Op::kMinOf:
        send(n.list[static_cast<size_t>(n.aux)], [&](Vec& gp) { gp(0) += g(0); });
        break;
      case Op::kSum:
        for (int p : n.list) send(p, [&](Vec& gp) { gp(0) += g(0); });
        break;
      case Op::kStGumbel: {
        // d softmax(z/tau) applied to upstream grad
        const double gs = n.cache.dot(g);
        send(n.a, [&](Vec& ga) {
          ga.array() += (n.cache.array() * (g.array() - gs)) / n.k;
        });
        break;
      }
    }
  }
}

Vec softmax_plain(const Vec& logits) {
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

Vec log_softmax_plain(const Vec& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

double logsumexp_plain(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace styleobf
