#include "styleobf/nn.hpp"

#include <cmath>

namespace styleobf {

LstmNodes lstm_step(Tape& t, const LstmSpec& spec, int x, const LstmNodes& prev) {
  const int H = spec.hidden;
  const int xh = t.concat({x, prev.h});
  int z = t.matvec(spec.w, xh);
  z = t.add(z, spec.b.param_id >= 0 ? t.param_vec(spec.b.param_id)
                                    : t.constant(spec.b.frozen->col(0)));
  const int i = t.sigmoid(t.slice(z, 0, H));
  const int f = t.sigmoid(t.slice(z, H, H));
  const int g = t.tanh(t.slice(z, 2 * H, H));
  const int o = t.sigmoid(t.slice(z, 3 * H, H));
  LstmNodes out;
  out.c = t.add(t.hadamard(f, prev.c), t.hadamard(i, g));
  out.h = t.hadamard(o, t.tanh(out.c));
  return out;
}

void lstm_step_plain(const Mat& w, const Vec& b, const Vec& x, Vec& h, Vec& c) {
  const int H = static_cast<int>(h.size());
  Vec xh(x.size() + h.size());
  xh << x, h;
  Vec z = w * xh + b;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (int j = 0; j < H; ++j) {
    const double i = sig(z(j));
    const double f = sig(z(H + j));
    const double g = std::tanh(z(2 * H + j));
    const double o = sig(z(3 * H + j));
    c(j) = f * c(j) + i * g;
    h(j) = o * std::tanh(c(j));
  }
}

int attention_readout(Tape& t, WRef w_att, WRef w_ctx, const std::vector<int>& enc_states, int h_dec) {
  const int wh = t.matvec(w_att, h_dec);
  std::vector<int> scores;
  scores.reserve(enc_states.size());
  for (int e : enc_states) scores.push_back(t.dot(e, wh));
  const int alpha = t.softmax(t.pack(scores));
  const int ctx = t.weighted_sum(enc_states, alpha);
  return t.tanh(t.matvec(w_ctx, t.concat({h_dec, ctx})));
}

Vec attention_readout_plain(const Mat& w_att, const Mat& w_ctx, const std::vector<Vec>& enc_states, const Vec& h_dec) {
  Vec wh = w_att * h_dec;
  Vec scores(static_cast<Eigen::Index>(enc_states.size()));
  for (size_t i = 0; i < enc_states.size(); ++i)
    scores(static_cast<Eigen::Index>(i)) = enc_states[i].dot(wh);
  Vec alpha = softmax_plain(scores);
  Vec ctx = Vec::Zero(h_dec.size());
  for (size_t i = 0; i < enc_states.size(); ++i)
    ctx += alpha(static_cast<Eigen::Index>(i)) * enc_states[i];
  Vec hc(h_dec.size() + ctx.size());
  hc << h_dec, ctx;
  return (w_ctx * hc).array().tanh().matrix();
}

Vec dropout_mask(int n, double p, Rng& rng) {
  Vec m(n);
  if (p <= 0) {
    m.setOnes();
    return m;
  }
  const double keep = 1.0 - p;
  for (int i = 0; i < n; ++i) m(i) = rng.uniform01() < p ? 0.0 : 1.0 / keep;
  return m;
}

}  // namespace styleobf
