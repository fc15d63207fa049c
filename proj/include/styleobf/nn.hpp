#pragma once

#include <vector>

#include "styleobf/tape.hpp"

namespace styleobf {

// Single-layer LSTM parameters: one fused gate matrix over [input; hidden]
// producing [i; f; g; o], plus a bias.
struct LstmSpec {
  WRef w;       // (4H, in + H)
  WRef b;       // (4H, 1) when trainable; frozen path uses b_frozen
  int hidden = 0;
  int input = 0;
};

struct LstmNodes {
  int h = -1;
  int c = -1;
};

LstmNodes lstm_step(Tape& t, const LstmSpec& spec, int x, const LstmNodes& prev);

// Plain (gradient-free) LSTM step for inference and scoring.
void lstm_step_plain(const Mat& w, const Vec& b, const Vec& x, Vec& h, Vec& c);

// Bilinear attention over encoder states: score_i = h_dec^T W_a h_enc_i,
// context = sum softmax(score) * h_enc_i, readout = tanh(W_c [h_dec; ctx]).
int attention_readout(Tape& t, WRef w_att, WRef w_ctx, const std::vector<int>& enc_states, int h_dec);
Vec attention_readout_plain(const Mat& w_att, const Mat& w_ctx, const std::vector<Vec>& enc_states, const Vec& h_dec);

// Inverted dropout mask: entries are 0 with probability p, else 1/(1-p).
Vec dropout_mask(int n, double p, Rng& rng);

}  // namespace styleobf
