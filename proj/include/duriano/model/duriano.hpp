#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "duriano/align/plan.hpp"
#include "duriano/model/config.hpp"
#include "duriano/nn/layers.hpp"

namespace duriano::model {

using nn::ForwardContext;
using nn::Tensor;
using nn::Var;

enum class DecodeMode { teacher_forced, free_running };

struct DecodeResult {
  Var mel;         // [T, mel_bins]
  Var gru_states;  // [ceil(T / 2), decoder_gru]
};

struct ModelOutput {
  Var mel;     // [T, mel_bins]
  Var linear;  // [T, linear_bins]
};

struct LossTerms {
  Var total;
  double mel = 0.0;
  double linear = 0.0;
  double l2 = 0.0;
};

// f0 in Hz to the baseline's scalar: hz / 600 clipped to [0, 1.5], 0 when
// unvoiced.
double normalize_f0(double hz);
std::vector<double> normalize_f0(std::span<const double> hz);

// Phoneme encoder, identity fusion, frame-level conditioning, two-frame
// autoregressive decoder and post-CBHG linear head.
class DurianoModel {
 public:
  // Parameters are drawn from `seed`; the configuration is validated first.
  DurianoModel(const ModelConfig& cfg, std::uint64_t seed);
  DurianoModel(const DurianoModel&) = delete;
  DurianoModel& operator=(const DurianoModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  // [N] -> [N, encoder_out]
  Var encode_phonemes(std::span<const int> phoneme_ids, const ForwardContext& ctx) const;
  // [N, encoder_out] -> [N, identity_fused]
  Var fuse_identity(const Var& encoded, int singer_id, int role_type_id) const;
  // Note mode: [T, fused + pitch + state + 1].
  Var build_conditions(const Var& fused, const align::FrameFeaturePlan& plan) const;
  // Baseline mode: [T, fused + 2] from normalized f0 and positions.
  Var build_conditions_f0(const Var& fused, std::span<const int> durations, std::span<const double> f0_norm,
                          std::span<const double> positions) const;
  // Dispatches on the configured mode; `f0_hz` is only read in f0 mode.
  Var conditions(const align::FrameFeaturePlan& plan, std::span<const double> f0_hz, const ForwardContext& ctx) const;

  // Teacher forcing requires `targets` [T, mel_bins]. The decoder pre-net
  // applies dropout whenever ctx carries a dropout seed.
  DecodeResult decode(const Var& conditions, const Tensor* targets, DecodeMode mode, const ForwardContext& ctx) const;
  Var postnet_linear(const Var& mel, const ForwardContext& ctx) const;

  ModelOutput forward(const align::FrameFeaturePlan& plan, std::span<const double> f0_hz, const Tensor* mel_targets,
                      DecodeMode mode, const ForwardContext& ctx) const;

  // lambda * sum of squares over all trainable parameters.
  Var l2_penalty() const;

 private:
  void check_plan(const align::FrameFeaturePlan& plan) const;

  ModelConfig cfg_;
  nn::ParamStore store_;
  nn::Embedding phoneme_table_, singer_table_, role_table_, note_pitch_table_, note_state_table_;
  nn::Prenet encoder_prenet_;
  nn::Linear encoder_linear_;
  nn::Cbhg encoder_cbhg_;
  nn::Linear fusion_;
  nn::Prenet decoder_prenet_;
  nn::Gru decoder_gru_;
  nn::Linear mel_projection_;
  nn::Cbhg post_cbhg_;
  nn::Linear linear_projection_;
};

// Mean absolute errors plus the parameter penalty. With several examples
// the absolute errors are pooled over all frames, as with padding and
// masking.
LossTerms loss(const std::vector<ModelOutput>& outputs, const std::vector<const Tensor*>& mel_targets,
               const std::vector<const Tensor*>& linear_targets, const DurianoModel& model, double lambda);
LossTerms loss(const ModelOutput& output, const Tensor& mel_target, const Tensor& linear_target,
               const DurianoModel& model, double lambda);

}  // namespace duriano::model
