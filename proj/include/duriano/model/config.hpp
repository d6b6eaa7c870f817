#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "duriano/nn/layers.hpp"
#include "duriano/util/key_value.hpp"

namespace duriano::model {

enum class ConditioningMode { note, f0_scalar };

std::string mode_name(ConditioningMode mode);
ConditioningMode parse_mode(const std::string& name);

struct ModelConfig {
  ConditioningMode mode = ConditioningMode::note;

  std::size_t phoneme_vocab = 39;
  std::size_t singer_vocab = 1;
  std::size_t role_vocab = 1;

  std::size_t phoneme_emb = 256;
  std::size_t singer_emb = 256;
  std::size_t role_emb = 256;
  std::size_t note_pitch_emb = 64;
  std::size_t note_state_emb = 16;

  std::vector<std::size_t> encoder_prenet = {256, 128};
  double encoder_dropout = 0.5;  // training only
  std::size_t encoder_linear = 128;
  nn::CbhgConfig encoder_cbhg{16, 128, {128, 128}, 4, 128, 128};

  std::size_t identity_fused = 256;

  std::vector<std::size_t> decoder_prenet = {256, 128};
  double decoder_dropout = 0.5;  // training and inference
  std::size_t decoder_gru = 256;
  std::size_t frames_per_step = 2;

  std::size_t mel_bins = 80;
  std::size_t linear_bins = 2049;
  nn::CbhgConfig post_cbhg{8, 128, {256, 80}, 4, 128, 128};

  double l2 = 1e-6;

  // When set, construction checks every size fixed by the reference design.
  bool enforce_reference_sizes = true;

  std::size_t encoder_out() const { return encoder_cbhg.output_dim(); }
  std::size_t condition_dim() const;

  // Throws ConfigError("invalid config: ...") on structural problems and,
  // with enforce_reference_sizes, on any deviation from the reference sizes.
  void validate() const;

  // Tiny sizes for gradient checks and the desk-scale toy corpus; the
  // reference size checks are disabled.
  static ModelConfig miniature();
  // Width-32 variant that fits the two-phrase toy corpus within a few
  // hundred updates; reference size checks are disabled.
  static ModelConfig toy();

  void write(KeyValueConfig& kv) const;
  // Unspecified keys keep the values of `base`.
  static ModelConfig read(const KeyValueConfig& kv, const ModelConfig& base);
  static ModelConfig read(const KeyValueConfig& kv);
};

}  // namespace duriano::model
