#include "duriano/model/config.hpp"

#include <sstream>

#include "duriano/util/error.hpp"

namespace duriano::model {

std::string mode_name(ConditioningMode mode) { return mode == ConditioningMode::note ? "note" : "f0"; }

ConditioningMode parse_mode(const std::string& name) {
  if (name == "note") return ConditioningMode::note;
  if (name == "f0" || name == "f0_scalar") return ConditioningMode::f0_scalar;
  throw ConfigError("invalid config: conditioning mode must be 'note' or 'f0', got '" + name + "'");
}

std::size_t ModelConfig::condition_dim() const {
  if (mode == ConditioningMode::note) return identity_fused + note_pitch_emb + note_state_emb + 1;
  return identity_fused + 2;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid config: " + what);
}

void check_size(const char* name, std::size_t got, std::size_t expected) {
  if (got != expected)
    throw ConfigError("invalid config: " + std::string(name) + " is " + std::to_string(got) + ", reference size is " +
                      std::to_string(expected));
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::vector<std::size_t> sizes(const KeyValueConfig& kv, const std::string& key, const std::vector<std::size_t>& base) {
  std::vector<long long> fallback(base.begin(), base.end());
  std::vector<std::size_t> out;
  for (long long v : kv.get_int_list(key, fallback)) {
    require(v > 0, key + " entries must be positive");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::size_t size(const KeyValueConfig& kv, const std::string& key, std::size_t base) {
  const long long v = kv.get_int(key, static_cast<long long>(base));
  require(v >= 0, key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

void write_cbhg(KeyValueConfig& kv, const std::string& prefix, const nn::CbhgConfig& c) {
  kv.set(prefix + ".bank_k", std::to_string(c.bank_k));
  kv.set(prefix + ".bank_channels", std::to_string(c.bank_channels));
  kv.set(prefix + ".projections", join_sizes(c.projections));
  kv.set(prefix + ".highway_layers", std::to_string(c.highway_layers));
  kv.set(prefix + ".highway_dim", std::to_string(c.highway_dim));
  kv.set(prefix + ".gru_units", std::to_string(c.gru_units));
}

nn::CbhgConfig read_cbhg(const KeyValueConfig& kv, const std::string& prefix, const nn::CbhgConfig& base) {
  nn::CbhgConfig c;
  c.bank_k = size(kv, prefix + ".bank_k", base.bank_k);
  c.bank_channels = size(kv, prefix + ".bank_channels", base.bank_channels);
  c.projections = sizes(kv, prefix + ".projections", base.projections);
  c.highway_layers = size(kv, prefix + ".highway_layers", base.highway_layers);
  c.highway_dim = size(kv, prefix + ".highway_dim", base.highway_dim);
  c.gru_units = size(kv, prefix + ".gru_units", base.gru_units);
  return c;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void ModelConfig::validate() const {
  require(phoneme_vocab > 0 && singer_vocab > 0 && role_vocab > 0, "vocabulary sizes must be positive");
  require(phoneme_emb > 0 && singer_emb > 0 && role_emb > 0 && identity_fused > 0, "embedding sizes must be positive");
  if (mode == ConditioningMode::note) require(note_pitch_emb > 0 && note_state_emb > 0, "note embeddings must be positive");
  require(!encoder_prenet.empty() && !decoder_prenet.empty(), "prenets need at least one layer");
  require(encoder_dropout >= 0.0 && encoder_dropout < 1.0, "encoder_dropout must lie in [0, 1)");
  require(decoder_dropout >= 0.0 && decoder_dropout < 1.0, "decoder_dropout must lie in [0, 1)");
  require(encoder_cbhg.bank_k >= 1 && post_cbhg.bank_k >= 1, "CBHG bank K must be >= 1");
  require(!encoder_cbhg.projections.empty() && encoder_cbhg.projections.back() == encoder_linear,
          "encoder CBHG last projection must equal encoder_linear (" + std::to_string(encoder_linear) + ")");
  require(!post_cbhg.projections.empty() && post_cbhg.projections.back() == mel_bins,
          "post CBHG last projection must equal mel_bins (" + std::to_string(mel_bins) + ")");
  require(decoder_gru > 0 && mel_bins > 0 && linear_bins > 0, "decoder sizes must be positive");
  check_size("frames_per_step", frames_per_step, 2);
  require(l2 >= 0.0, "l2 must be >= 0");
  if (!enforce_reference_sizes) return;
  check_size("phoneme_emb", phoneme_emb, 256);
  check_size("singer_emb", singer_emb, 256);
  check_size("role_emb", role_emb, 256);
  check_size("note_pitch_emb", note_pitch_emb, 64);
  check_size("note_state_emb", note_state_emb, 16);
  check_size("encoder_out", encoder_out(), 256);
  check_size("identity_fused", identity_fused, 256);
  check_size("mel_bins", mel_bins, 80);
  check_size("linear_bins", linear_bins, 2049);
  check_size("condition_dim", condition_dim(), mode == ConditioningMode::note ? 337 : 258);
}

ModelConfig ModelConfig::miniature() {
  ModelConfig c;
  c.phoneme_emb = 8;
  c.singer_emb = 4;
  c.role_emb = 4;
  c.note_pitch_emb = 6;
  c.note_state_emb = 3;
  c.encoder_prenet = {8, 8};
  c.encoder_linear = 8;
  c.encoder_cbhg = {2, 4, {8, 8}, 1, 8, 4};
  c.identity_fused = 8;
  c.decoder_prenet = {8, 8};
  c.decoder_gru = 8;
  c.post_cbhg = {2, 4, {8, 80}, 1, 8, 4};
  c.enforce_reference_sizes = false;
  return c;
}

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.phoneme_emb = 32;
  c.singer_emb = 4;
  c.role_emb = 4;
  c.note_pitch_emb = 32;
  c.note_state_emb = 4;
  c.encoder_prenet = {32, 32};
  c.encoder_linear = 32;
  c.encoder_cbhg = {4, 32, {32, 32}, 2, 32, 16};
  c.identity_fused = 32;
  c.decoder_prenet = {32, 32};
  c.decoder_gru = 64;
  c.post_cbhg = {4, 32, {32, 80}, 2, 32, 16};
  c.enforce_reference_sizes = false;
  return c;
}

void ModelConfig::write(KeyValueConfig& kv) const {
  kv.set("mode", mode_name(mode));
  kv.set("phoneme_vocab", std::to_string(phoneme_vocab));
  kv.set("singer_vocab", std::to_string(singer_vocab));
  kv.set("role_vocab", std::to_string(role_vocab));
  kv.set("phoneme_emb", std::to_string(phoneme_emb));
  kv.set("singer_emb", std::to_string(singer_emb));
  kv.set("role_emb", std::to_string(role_emb));
  kv.set("note_pitch_emb", std::to_string(note_pitch_emb));
  kv.set("note_state_emb", std::to_string(note_state_emb));
  kv.set("encoder_prenet", join_sizes(encoder_prenet));
  kv.set("encoder_dropout", fmt(encoder_dropout));
  kv.set("encoder_linear", std::to_string(encoder_linear));
  write_cbhg(kv, "encoder_cbhg", encoder_cbhg);
  kv.set("identity_fused", std::to_string(identity_fused));
  kv.set("decoder_prenet", join_sizes(decoder_prenet));
  kv.set("decoder_dropout", fmt(decoder_dropout));
  kv.set("decoder_gru", std::to_string(decoder_gru));
  kv.set("frames_per_step", std::to_string(frames_per_step));
  kv.set("mel_bins", std::to_string(mel_bins));
  kv.set("linear_bins", std::to_string(linear_bins));
  write_cbhg(kv, "post_cbhg", post_cbhg);
  kv.set("l2", fmt(l2));
  kv.set("enforce_reference_sizes", enforce_reference_sizes ? "1" : "0");
}

ModelConfig ModelConfig::read(const KeyValueConfig& kv, const ModelConfig& base) {
  ModelConfig c;
  c.mode = parse_mode(kv.get("mode", mode_name(base.mode)));
  c.phoneme_vocab = size(kv, "phoneme_vocab", base.phoneme_vocab);
  c.singer_vocab = size(kv, "singer_vocab", base.singer_vocab);
  c.role_vocab = size(kv, "role_vocab", base.role_vocab);
  c.phoneme_emb = size(kv, "phoneme_emb", base.phoneme_emb);
  c.singer_emb = size(kv, "singer_emb", base.singer_emb);
  c.role_emb = size(kv, "role_emb", base.role_emb);
  c.note_pitch_emb = size(kv, "note_pitch_emb", base.note_pitch_emb);
  c.note_state_emb = size(kv, "note_state_emb", base.note_state_emb);
  c.encoder_prenet = sizes(kv, "encoder_prenet", base.encoder_prenet);
  c.encoder_dropout = kv.get_double("encoder_dropout", base.encoder_dropout);
  c.encoder_linear = size(kv, "encoder_linear", base.encoder_linear);
  c.encoder_cbhg = read_cbhg(kv, "encoder_cbhg", base.encoder_cbhg);
  c.identity_fused = size(kv, "identity_fused", base.identity_fused);
  c.decoder_prenet = sizes(kv, "decoder_prenet", base.decoder_prenet);
  c.decoder_dropout = kv.get_double("decoder_dropout", base.decoder_dropout);
  c.decoder_gru = size(kv, "decoder_gru", base.decoder_gru);
  c.frames_per_step = size(kv, "frames_per_step", base.frames_per_step);
  c.mel_bins = size(kv, "mel_bins", base.mel_bins);
  c.linear_bins = size(kv, "linear_bins", base.linear_bins);
  c.post_cbhg = read_cbhg(kv, "post_cbhg", base.post_cbhg);
  c.l2 = kv.get_double("l2", base.l2);
  c.enforce_reference_sizes = kv.get_int("enforce_reference_sizes", base.enforce_reference_sizes ? 1 : 0) != 0;
  return c;
}

ModelConfig ModelConfig::read(const KeyValueConfig& kv) { return read(kv, ModelConfig{}); }

}  // namespace duriano::model
