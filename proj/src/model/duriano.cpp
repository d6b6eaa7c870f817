#include "duriano/model/duriano.hpp"

#include <algorithm>

#include "duriano/util/error.hpp"

namespace duriano::model {

double normalize_f0(double hz) {
  if (!(hz > 0.0)) return 0.0;
  return std::clamp(hz / 600.0, 0.0, 1.5);
}

std::vector<double> normalize_f0(std::span<const double> hz) {
  std::vector<double> out(hz.size());
  std::transform(hz.begin(), hz.end(), out.begin(), [](double v) { return normalize_f0(v); });
  return out;
}

DurianoModel::DurianoModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  phoneme_table_ = nn::Embedding(store_, "phoneme_embedding", cfg_.phoneme_vocab, cfg_.phoneme_emb, rng);
  singer_table_ = nn::Embedding(store_, "singer_embedding", cfg_.singer_vocab, cfg_.singer_emb, rng);
  role_table_ = nn::Embedding(store_, "role_embedding", cfg_.role_vocab, cfg_.role_emb, rng);
  if (cfg_.mode == ConditioningMode::note) {
    note_pitch_table_ = nn::Embedding(store_, "note_pitch_embedding", align::kNotePitchVocab, cfg_.note_pitch_emb, rng);
    note_state_table_ = nn::Embedding(store_, "note_state_embedding", align::kNoteStateVocab, cfg_.note_state_emb, rng);
  }
  encoder_prenet_ = nn::Prenet(store_, "encoder.prenet", cfg_.phoneme_emb, cfg_.encoder_prenet, cfg_.encoder_dropout, rng, 0);
  encoder_linear_ = nn::Linear(store_, "encoder.linear", cfg_.encoder_prenet.back(), cfg_.encoder_linear,
                               nn::Activation::identity, rng);
  encoder_cbhg_ = nn::Cbhg(store_, "encoder.cbhg", cfg_.encoder_linear, cfg_.encoder_cbhg, rng);
  fusion_ = nn::Linear(store_, "fusion", cfg_.encoder_out() + cfg_.singer_emb + cfg_.role_emb, cfg_.identity_fused,
                       nn::Activation::tanh, rng);
  decoder_prenet_ = nn::Prenet(store_, "decoder.prenet", cfg_.mel_bins, cfg_.decoder_prenet, cfg_.decoder_dropout, rng, 1);
  decoder_gru_ = nn::Gru(store_, "decoder.gru", cfg_.decoder_prenet.back() + cfg_.condition_dim(), cfg_.decoder_gru, rng);
  mel_projection_ = nn::Linear(store_, "decoder.projection", cfg_.decoder_gru, cfg_.frames_per_step * cfg_.mel_bins,
                               nn::Activation::identity, rng);
  post_cbhg_ = nn::Cbhg(store_, "post.cbhg", cfg_.mel_bins, cfg_.post_cbhg, rng);
  linear_projection_ = nn::Linear(store_, "post.projection", cfg_.post_cbhg.output_dim(), cfg_.linear_bins,
                                  nn::Activation::identity, rng);
  store_.round_to_float();
}

Var DurianoModel::encode_phonemes(std::span<const int> phoneme_ids, const ForwardContext& ctx) const {
  if (phoneme_ids.empty()) throw InputError("encode_phonemes: empty phoneme sequence");
  ForwardContext enc = ctx;
  if (!ctx.training) enc.dropout_seed.reset();
  Var x = phoneme_table_(phoneme_ids);
  x = encoder_prenet_(x, enc);
  x = encoder_linear_(x);
  return encoder_cbhg_(x, ctx);
}

Var DurianoModel::fuse_identity(const Var& encoded, int singer_id, int role_type_id) const {
  const std::vector<int> singers(encoded.rows(), singer_id);
  const std::vector<int> roles(encoded.rows(), role_type_id);
  if (singer_id < 0 || static_cast<std::size_t>(singer_id) >= cfg_.singer_vocab)
    throw InputError("singer id " + std::to_string(singer_id) + " out of range");
  if (role_type_id < 0 || static_cast<std::size_t>(role_type_id) >= cfg_.role_vocab)
    throw InputError("role type id " + std::to_string(role_type_id) + " out of range");
  return fusion_(nn::concat_cols({encoded, singer_table_(singers), role_table_(roles)}));
}

void DurianoModel::check_plan(const align::FrameFeaturePlan& plan) const {
  plan.validate();
  if (plan.frames() == 0) throw InputError("plan '" + plan.phrase_id + "' has no frames");
}

Var DurianoModel::build_conditions(const Var& fused, const align::FrameFeaturePlan& plan) const {
  if (cfg_.mode != ConditioningMode::note) throw InputError("build_conditions: model is in f0 mode");
  check_plan(plan);
  if (fused.rows() != plan.durations.size())
    throw InputError("build_conditions: " + std::to_string(fused.rows()) + " phoneme rows for " +
                     std::to_string(plan.durations.size()) + " durations");
  const std::size_t t = plan.frames();
  return nn::concat_cols({nn::repeat_rows(fused, plan.durations), note_pitch_table_(plan.note_pitch_ids),
                          note_state_table_(plan.note_state_ids), nn::constant(Tensor(t, 1, plan.positions))});
}

Var DurianoModel::build_conditions_f0(const Var& fused, std::span<const int> durations, std::span<const double> f0_norm,
                                      std::span<const double> positions) const {
  if (fused.rows() != durations.size())
    throw InputError("build_conditions_f0: " + std::to_string(fused.rows()) + " phoneme rows for " +
                     std::to_string(durations.size()) + " durations");
  long long total = 0;
  for (int d : durations) total += d;
  if (static_cast<std::size_t>(total) != f0_norm.size() || positions.size() != f0_norm.size())
    throw InputError("build_conditions_f0: f0 has " + std::to_string(f0_norm.size()) + " frames, durations sum to " +
                     std::to_string(total) + ", positions " + std::to_string(positions.size()));
  const std::size_t t = f0_norm.size();
  return nn::concat_cols({nn::repeat_rows(fused, durations),
                          nn::constant(Tensor(t, 1, std::vector<double>(f0_norm.begin(), f0_norm.end()))),
                          nn::constant(Tensor(t, 1, std::vector<double>(positions.begin(), positions.end())))});
}

Var DurianoModel::conditions(const align::FrameFeaturePlan& plan, std::span<const double> f0_hz,
                             const ForwardContext& ctx) const {
  check_plan(plan);
  const Var fused = fuse_identity(encode_phonemes(plan.phoneme_ids, ctx), plan.singer_id, plan.role_type_id);
  if (cfg_.mode == ConditioningMode::note) return build_conditions(fused, plan);
  if (f0_hz.size() != plan.frames())
    throw InputError("f0 contour has " + std::to_string(f0_hz.size()) + " frames, plan '" + plan.phrase_id + "' has " +
                     std::to_string(plan.frames()));
  return build_conditions_f0(fused, plan.durations, normalize_f0(f0_hz), plan.positions);
}

DecodeResult DurianoModel::decode(const Var& conditions, const Tensor* targets, DecodeMode mode,
                                  const ForwardContext& ctx) const {
  const std::size_t t = conditions.rows();
  const std::size_t bins = cfg_.mel_bins;
  const std::size_t fps = cfg_.frames_per_step;
  if (t == 0) throw InputError("decode: empty condition sequence");
  if (conditions.cols() != cfg_.condition_dim())
    throw InputError("decode: condition width " + std::to_string(conditions.cols()) + " != " +
                     std::to_string(cfg_.condition_dim()));
  const bool teacher = mode == DecodeMode::teacher_forced;
  if (teacher && !targets) throw InputError("decode: teacher forcing requires target frames");
  if (teacher && (targets->rows() != t || targets->cols() != bins))
    throw InputError("decode: targets " + targets->shape_string() + " do not match " + std::to_string(t) + " frames");

  // An odd final step sees the last frame's condition, as if the sequence
  // were padded by repetition; the padded output frame is dropped.
  const std::size_t steps = (t + fps - 1) / fps;
  std::vector<int> step_rows(steps);
  for (std::size_t k = 0; k < steps; ++k) step_rows[k] = static_cast<int>(k * fps);
  const Var step_conditions = nn::gather_rows(conditions, step_rows);

  std::vector<Var> states;
  states.reserve(steps);
  Var h = decoder_gru_.zero_state();
  Var frames;
  if (teacher) {
    Tensor previous(steps, bins);
    for (std::size_t k = 1; k < steps; ++k) {
      const auto src = targets->row(k * fps - 1);
      std::copy(src.begin(), src.end(), previous.row(k).begin());
    }
    const Var pre = decoder_prenet_(nn::constant(std::move(previous)), ctx, 0);
    const Var projected = decoder_gru_.input_projection(nn::concat_cols({pre, step_conditions}));
    for (std::size_t k = 0; k < steps; ++k) {
      h = decoder_gru_.step(nn::slice_rows(projected, k, 1), h);
      states.push_back(h);
    }
    frames = mel_projection_(nn::concat_rows(states));
  } else {
    std::vector<Var> outputs;
    outputs.reserve(steps);
    Var previous = nn::constant(Tensor(1, bins));
    for (std::size_t k = 0; k < steps; ++k) {
      const Var pre = decoder_prenet_(previous, ctx, k);
      h = decoder_gru_.cell(nn::concat_cols({pre, nn::slice_rows(step_conditions, k, 1)}), h);
      states.push_back(h);
      const Var out = mel_projection_(h);
      outputs.push_back(out);
      previous = nn::slice_cols(out, (fps - 1) * bins, bins);
    }
    frames = nn::concat_rows(outputs);
  }
  Var mel = nn::reshape(frames, steps * fps, bins);
  if (steps * fps != t) mel = nn::slice_rows(mel, 0, t);
  return {mel, nn::concat_rows(states)};
}

Var DurianoModel::postnet_linear(const Var& mel, const ForwardContext& ctx) const {
  if (mel.cols() != cfg_.mel_bins)
    throw InputError("postnet_linear: input width " + std::to_string(mel.cols()) + " != " + std::to_string(cfg_.mel_bins));
  return linear_projection_(post_cbhg_(mel, ctx));
}

ModelOutput DurianoModel::forward(const align::FrameFeaturePlan& plan, std::span<const double> f0_hz,
                                  const Tensor* mel_targets, DecodeMode mode, const ForwardContext& ctx) const {
  const Var cond = conditions(plan, f0_hz, ctx);
  const DecodeResult dec = decode(cond, mel_targets, mode, ctx);
  return {dec.mel, postnet_linear(dec.mel, ctx)};
}

Var DurianoModel::l2_penalty() const {
  std::vector<Var> terms;
  for (const auto& p : store_.parameters()) terms.push_back(nn::sum_squares(p.var));
  Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = nn::add(total, terms[i]);
  return nn::affine(total, cfg_.l2, 0.0);
}

namespace {

Var pooled_mae(const std::vector<Var>& preds, const std::vector<const Tensor*>& targets, const char* what) {
  double count = 0.0;
  Var total;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!targets[i] || !preds[i].value().same_shape(*targets[i]))
      throw InputError(std::string("loss: ") + what + " prediction " + preds[i].value().shape_string() +
                       " does not match target " + (targets[i] ? targets[i]->shape_string() : "<none>"));
    const Var term = nn::sum_abs_diff(preds[i], *targets[i]);
    total = total.defined() ? nn::add(total, term) : term;
    count += static_cast<double>(targets[i]->size());
  }
  return nn::affine(total, 1.0 / count, 0.0);
}

}  // namespace

LossTerms loss(const std::vector<ModelOutput>& outputs, const std::vector<const Tensor*>& mel_targets,
               const std::vector<const Tensor*>& linear_targets, const DurianoModel& model, double lambda) {
  if (outputs.empty() || outputs.size() != mel_targets.size() || outputs.size() != linear_targets.size())
    throw InputError("loss: outputs and targets differ in count");
  std::vector<Var> mels, linears;
  for (const auto& o : outputs) {
    mels.push_back(o.mel);
    linears.push_back(o.linear);
  }
  LossTerms terms;
  const Var mel = pooled_mae(mels, mel_targets, "mel");
  const Var linear = pooled_mae(linears, linear_targets, "linear");
  terms.mel = mel.value()[0];
  terms.linear = linear.value()[0];
  terms.total = nn::add(mel, linear);
  if (lambda != 0.0) {
    Var sq;
    for (const auto& p : model.params().parameters()) {
      const Var s = nn::sum_squares(p.var);
      sq = sq.defined() ? nn::add(sq, s) : s;
    }
    const Var l2 = nn::affine(sq, lambda, 0.0);
    terms.l2 = l2.value()[0];
    terms.total = nn::add(terms.total, l2);
  }
  return terms;
}

LossTerms loss(const ModelOutput& output, const Tensor& mel_target, const Tensor& linear_target,
               const DurianoModel& model, double lambda) {
  return loss(std::vector<ModelOutput>{output}, {&mel_target}, {&linear_target}, model, lambda);
}

}  // namespace duriano::model
