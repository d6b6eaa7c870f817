#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "duriano/align/plan.hpp"
#include "duriano/corpus/dataset.hpp"
#include "duriano/model/checkpoint.hpp"
#include "duriano/model/synthesize.hpp"
#include "duriano/model/trainer.hpp"
#include "duriano/util/error.hpp"
#include "gradcheck.hpp"
#include "toy_corpus.hpp"

using namespace duriano;
using namespace duriano::model;
using nn::constant;
using testsupport::check_gradients;
using testsupport::random_tensor;

namespace {

align::FrameFeaturePlan tiny_plan(std::vector<int> ids, std::vector<int> durations) {
  align::FrameFeaturePlan plan;
  plan.phrase_id = "tiny";
  plan.phoneme_ids = std::move(ids);
  plan.durations = std::move(durations);
  const auto frames = align::expand_durations(plan.phoneme_ids, plan.durations);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const bool voiced = frames[t] >= 22;
    plan.note_pitch_ids.push_back(voiced ? 20 + static_cast<int>(t % 3) : 0);
    plan.note_state_ids.push_back(voiced ? (t == 0 || frames[t - 1] < 22 ? 1 : 2) : 0);
  }
  plan.positions = align::frame_positions(frames.size());
  plan.validate();
  return plan;
}

const std::vector<corpus::TrainingExample>& toy_examples() {
  static const auto examples = [] {
    std::vector<corpus::TrainingExample> out;
    const auto cfg = dsp::StftConfig::canonical();
    const auto fb = dsp::build_mel_filterbank(cfg);
    for (const auto& p : testsupport::make_toy_corpus()) {
      const std::vector<double> f0 = testsupport::note_contour(p.notes);
      out.push_back(corpus::prepare_training_example({p.annotation, p.audio, p.notes, 0, 0, &f0}, cfg, fb));
    }
    return out;
  }();
  return examples;
}

ForwardContext training_context(std::uint64_t seed) {
  ForwardContext ctx;
  ctx.training = true;
  ctx.dropout_seed = seed;
  return ctx;
}

}  // namespace

TEST_CASE("reference sizes are enforced at construction") {
  ModelConfig cfg;
  CHECK(cfg.condition_dim() == 337);
  cfg.mode = ConditioningMode::f0_scalar;
  CHECK(cfg.condition_dim() == 258);
  for (auto mutate : std::vector<void (*)(ModelConfig&)>{
           [](ModelConfig& c) { c.phoneme_emb = 128; }, [](ModelConfig& c) { c.singer_emb = 64; },
           [](ModelConfig& c) { c.role_emb = 255; }, [](ModelConfig& c) { c.note_pitch_emb = 32; },
           [](ModelConfig& c) { c.note_state_emb = 8; }, [](ModelConfig& c) { c.mel_bins = 40; },
           [](ModelConfig& c) { c.linear_bins = 1025; }, [](ModelConfig& c) { c.identity_fused = 128; }}) {
    ModelConfig bad;
    mutate(bad);
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("invalid config"), ConfigError);
  }
  ModelConfig three = ModelConfig::miniature();
  three.frames_per_step = 3;
  CHECK_THROWS_AS(three.validate(), ConfigError);
  CHECK_NOTHROW(ModelConfig::miniature().validate());
}

TEST_CASE("model configuration round trips through key-value text") {
  ModelConfig cfg = ModelConfig::miniature();
  cfg.mode = ConditioningMode::f0_scalar;
  cfg.singer_vocab = 3;
  KeyValueConfig kv;
  cfg.write(kv);
  const auto back = ModelConfig::read(kv);
  CHECK(back.mode == cfg.mode);
  CHECK(back.singer_vocab == 3);
  CHECK(back.post_cbhg.projections == cfg.post_cbhg.projections);
  CHECK(back.encoder_prenet == cfg.encoder_prenet);
  CHECK(back.enforce_reference_sizes == false);
  CHECK(back.condition_dim() == cfg.condition_dim());
}

TEST_CASE("reference model shapes") {
  DurianoModel model(ModelConfig{}, 1);
  nn::NoGradGuard guard;
  ForwardContext infer;
  const std::vector<int> ids = {0, 3, 22, 5, 23, 0, 7, 24, 30, 1, 25, 0};
  const auto enc = model.encode_phonemes(ids, infer);
  CHECK(enc.value().shape() == std::array<std::size_t, 2>{12, 256});
  CHECK(model.encode_phonemes(ids, infer).value() == enc.value());
  auto swapped = ids;
  std::swap(swapped[1], swapped[10]);
  const auto enc2 = model.encode_phonemes(swapped, infer);
  double diff = 0.0;
  for (std::size_t r = 4; r < 8; ++r)
    for (std::size_t c = 0; c < 256; ++c) diff += std::abs(enc2.value()(r, c) - enc.value()(r, c));
  CHECK(diff > 0.0);

  const auto fused = model.fuse_identity(enc, 0, 0);
  CHECK(fused.value().shape() == std::array<std::size_t, 2>{12, 256});
  CHECK_THROWS_AS(model.fuse_identity(enc, 1, 0), InputError);

  const auto plan = tiny_plan({0, 22}, {2, 3});
  const auto cond = model.build_conditions(model.fuse_identity(model.encode_phonemes(plan.phoneme_ids, infer), 0, 0), plan);
  CHECK(cond.value().shape() == std::array<std::size_t, 2>{5, 337});
  for (std::size_t t = 0; t < 5; ++t) CHECK(cond.value()(t, 336) == static_cast<double>(t) / 5.0);
  // Silence frames share the silence note embeddings.
  for (std::size_t c = 256; c < 336; ++c) CHECK(cond.value()(0, c) == cond.value()(1, c));

  const auto dec = model.decode(constant(Tensor(6, 337)), nullptr, DecodeMode::free_running, ForwardContext{});
  CHECK(dec.mel.value().shape() == std::array<std::size_t, 2>{6, 80});
  CHECK(dec.gru_states.value().rows() == 3);
  CHECK_THROWS_AS(model.decode(constant(Tensor(6, 337)), nullptr, DecodeMode::teacher_forced, infer), InputError);

  const auto lin = model.postnet_linear(constant(random_tensor(100, 80, *std::make_unique<Rng>(1), 0.5)), infer);
  CHECK(lin.value().shape() == std::array<std::size_t, 2>{100, 2049});

  DurianoModel f0(ModelConfig{.mode = ConditioningMode::f0_scalar}, 1);
  const std::vector<double> f0n = {0.0, 0.0, 0.5, 0.6, 0.0};
  const auto cf = f0.build_conditions_f0(f0.fuse_identity(f0.encode_phonemes(plan.phoneme_ids, infer), 0, 0),
                                         plan.durations, f0n, plan.positions);
  CHECK(cf.value().shape() == std::array<std::size_t, 2>{5, 258});
  CHECK(cf.value()(0, 256) == 0.0);
  CHECK(cf.value()(3, 256) == 0.6);
  const std::vector<double> shifted = {0.1, 0.1, 0.6, 0.7, 0.1};
  const auto cs = f0.build_conditions_f0(f0.fuse_identity(f0.encode_phonemes(plan.phoneme_ids, infer), 0, 0),
                                         plan.durations, shifted, plan.positions);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t c = 0; c < 258; ++c)
      if (c != 256) CHECK(cs.value()(t, c) == cf.value()(t, c));
  CHECK_THROWS_AS(f0.build_conditions_f0(cf, plan.durations, std::vector<double>(4, 0.0), plan.positions), InputError);
}

TEST_CASE("note and f0 variants differ only in the conditioning slice") {
  DurianoModel note(ModelConfig::miniature(), 3);
  auto mc = ModelConfig::miniature();
  mc.mode = ConditioningMode::f0_scalar;
  DurianoModel f0(mc, 3);
  std::set<std::string> note_names, f0_names;
  for (const auto& p : note.params().parameters()) note_names.insert(p.name);
  for (const auto& p : f0.params().parameters()) {
    f0_names.insert(p.name);
    const auto* other = note.params().find(p.name);
    REQUIRE(other != nullptr);
    if (p.name != "decoder.gru.w_x") CHECK(other->var.value().shape() == p.var.value().shape());
  }
  for (const auto& n : note_names)
    if (!f0_names.count(n)) CHECK((n == "note_pitch_embedding.table" || n == "note_state_embedding.table"));
}

TEST_CASE("normalized f0 encoding") {
  CHECK(normalize_f0(0.0) == 0.0);
  CHECK(normalize_f0(300.0) == 0.5);
  CHECK(normalize_f0(5000.0) == 1.5);
}

TEST_CASE("decoder: zero parameters give zero mel, step 0 agrees across modes") {
  DurianoModel model(ModelConfig::miniature(), 4);
  const std::size_t c = model.config().condition_dim();
  {
    DurianoModel zero(ModelConfig::miniature(), 4);
    for (const auto& p : zero.params().parameters()) {
      nn::Var v = p.var;
      v.value().fill(0.0);
    }
    const auto mel = zero.decode(constant(Tensor(6, c)), nullptr, DecodeMode::free_running, ForwardContext{}).mel;
    for (double v : mel.value().values()) CHECK(v == 0.0);
  }
  Rng rng(5);
  const Tensor cond = random_tensor(7, c, rng);
  const Tensor targets = random_tensor(7, 80, rng);
  ForwardContext ctx;
  ctx.dropout_seed = 9;
  const auto tf = model.decode(constant(cond), &targets, DecodeMode::teacher_forced, ctx).mel.value();
  const auto fr = model.decode(constant(cond), nullptr, DecodeMode::free_running, ctx).mel.value();
  CHECK(tf.rows() == 7);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t b = 0; b < 80; ++b) CHECK(tf(r, b) == fr(r, b));
  bool later_differs = false;
  for (std::size_t b = 0; b < 80; ++b) later_differs |= tf(2, b) != fr(2, b);
  CHECK(later_differs);
}

TEST_CASE("teacher forcing feeds the target frame 2k-1") {
  DurianoModel model(ModelConfig::miniature(), 6);
  Rng rng(6);
  const Tensor cond = random_tensor(6, model.config().condition_dim(), rng);
  Tensor targets = random_tensor(6, 80, rng);
  const auto a = model.decode(constant(cond), &targets, DecodeMode::teacher_forced, ForwardContext{}).mel.value();
  // Even target frames (other than the last pair) are never fed back.
  targets(0, 3) += 1.0;
  targets(2, 5) += 1.0;
  targets(5, 0) += 1.0;
  const auto b = model.decode(constant(cond), &targets, DecodeMode::teacher_forced, ForwardContext{}).mel.value();
  CHECK(a == b);
  targets(1, 0) += 1.0;
  const auto c = model.decode(constant(cond), &targets, DecodeMode::teacher_forced, ForwardContext{}).mel.value();
  for (std::size_t bin = 0; bin < 80; ++bin) CHECK(c(0, bin) == a(0, bin));
  CHECK_FALSE(c == a);
}

TEST_CASE("loss examples") {
  DurianoModel model(ModelConfig::miniature(), 7);
  Rng rng(7);
  const Tensor mel = random_tensor(4, 80, rng), lin = random_tensor(4, 2049, rng);
  ModelOutput out{constant(mel), constant(lin)};
  CHECK(loss(out, mel, lin, model, 0.0).total.value()[0] == 0.0);
  Tensor mel_lo = mel, lin_lo = lin;
  for (auto& v : mel_lo.values()) v -= 0.5;
  for (auto& v : lin_lo.values()) v -= 0.5;
  CHECK(loss(out, mel_lo, lin_lo, model, 0.0).total.value()[0] == doctest::Approx(1.0).epsilon(1e-12));
  double sq = 0.0;
  for (const auto& p : model.params().parameters())
    for (double v : p.var.value().values()) sq += v * v;
  const auto terms = loss(out, mel, lin, model, 1e-6);
  CHECK(terms.total.value()[0] == doctest::Approx(1e-6 * sq).epsilon(1e-12));
  CHECK(terms.l2 == doctest::Approx(1e-6 * sq).epsilon(1e-12));
  CHECK(model.l2_penalty().value()[0] == doctest::Approx(model.config().l2 * sq).epsilon(1e-12));
  CHECK_THROWS_AS(loss(out, Tensor(3, 80), lin, model, 0.0), InputError);
}

TEST_CASE("whole-model gradient check on the miniature configuration") {
  for (auto mode : {ConditioningMode::note, ConditioningMode::f0_scalar}) {
    auto cfg = ModelConfig::miniature();
    cfg.mode = mode;
    DurianoModel model(cfg, 8);
    // Move parameters away from float32 rounding artefacts and tiny values.
    Rng rng(8);
    for (const auto& p : model.params().parameters()) {
      nn::Var v = p.var;
      for (auto& x : v.value().values()) x += rng.uniform(-0.1, 0.1);
    }
    const auto plan = tiny_plan({0, 5, 22, 0}, {2, 2, 4, 1});
    const std::vector<double> f0(9, 220.0);
    const Tensor mel_t = random_tensor(9, 80, rng, 0.5), lin_t = random_tensor(9, 2049, rng, 0.5);
    const auto ctx = training_context(11);
    auto scalar = [&] {
      const auto out = model.forward(plan, f0, &mel_t, DecodeMode::teacher_forced, ctx);
      return loss(out, mel_t, lin_t, model, 1e-3).total;
    };
    std::vector<testsupport::GradLeaf> leaves;
    for (const auto& p : model.params().parameters()) leaves.push_back({p.name, p.var});
    const auto res = check_gradients(scalar, leaves, 6, 3);
    CHECK_MESSAGE(res.max_rel_error < 1e-4, mode_name(mode) << ": " << res.worst);
    CHECK(res.checked > 100);
  }
}

TEST_CASE("fusion and post-net gradient checks") {
  DurianoModel model(ModelConfig::miniature(), 9);
  Rng rng(9);
  nn::Var enc(random_tensor(3, model.config().encoder_out(), rng), true);
  const auto proj = testsupport::random_projection(3, 8, 1);
  std::vector<testsupport::GradLeaf> leaves = {{"encoded", enc}};
  for (const auto& p : model.params().parameters())
    if (p.name.rfind("fusion", 0) == 0 || p.name == "singer_embedding.table") leaves.push_back({p.name, p.var});
  const auto res = check_gradients([&] { return proj(model.fuse_identity(enc, 0, 0)); }, leaves);
  CHECK_MESSAGE(res.max_rel_error < 1e-4, res.worst);

  nn::Var mel(random_tensor(5, 80, rng, 0.5), true);
  const auto proj2 = testsupport::random_projection(5, 2049, 2);
  std::vector<testsupport::GradLeaf> post = {{"mel", mel}};
  for (const auto& p : model.params().parameters())
    if (p.name.rfind("post.", 0) == 0) post.push_back({p.name, p.var});
  ForwardContext train;
  train.training = true;
  const auto res2 = check_gradients([&] { return proj2(model.postnet_linear(mel, train)); }, post, 8, 4);
  CHECK_MESSAGE(res2.max_rel_error < 1e-4, res2.worst);
}

TEST_CASE("training: zero learning rate leaves parameters unchanged, runs are deterministic") {
  const auto& examples = toy_examples();
  std::vector<PreparedExample> data;
  for (const auto& ex : examples) data.push_back(prepare(ex));

  TrainConfig tc;
  tc.batch_size = 2;
  tc.seed = 3;
  {
    DurianoModel model(ModelConfig::miniature(), 1);
    auto adam_cfg = tc.adam;
    adam_cfg.learning_rate = 0.0;
    nn::Adam adam(adam_cfg, model.params());
    std::vector<Tensor> before;
    for (const auto& p : model.params().parameters()) before.push_back(p.var.value());
    train(model, adam, data, tc, 2, [](const StepLog&) {});
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(model.params().parameters()[i].var.value() == before[i]);
  }

  std::vector<std::vector<std::string>> logs(2);
  for (int run = 0; run < 2; ++run) {
    DurianoModel model(ModelConfig::miniature(), 1);
    nn::Adam adam(tc.adam, model.params());
    train(model, adam, data, tc, 4, [&](const StepLog& log) {
      CHECK(std::isfinite(log.total()));
      logs[run].push_back(format_log_line(log).substr(0, format_log_line(log).rfind('\t')));
    });
  }
  CHECK(logs[0] == logs[1]);
  CHECK(logs[0].size() == 4);
}

TEST_CASE("batch selection depends only on seed and step") {
  const auto a = batch_indices(5, 4, 7, 1);
  CHECK(a == batch_indices(5, 4, 7, 1));
  CHECK(a.size() == 4);
  // Over one epoch's worth of updates every example is visited.
  std::set<std::size_t> seen;
  for (std::uint64_t step = 1; step <= 5; ++step)
    for (auto i : batch_indices(5, 1, step, 2)) seen.insert(i);
  CHECK(seen.size() == 5);
}

TEST_CASE("resumed training matches uninterrupted training") {
  const auto& examples = toy_examples();
  std::vector<PreparedExample> data;
  for (const auto& ex : examples) data.push_back(prepare(ex));
  TrainConfig tc;
  tc.batch_size = 2;
  const auto dir = std::filesystem::temp_directory_path() / "duriano_test_resume";
  std::filesystem::create_directories(dir);
  corpus::Vocabulary singers, roles;
  singers.add("toy_singer");
  roles.add("laosheng");

  std::vector<std::string> straight;
  DurianoModel a(ModelConfig::miniature(), 2);
  nn::Adam adam_a(tc.adam, a.params());
  train(a, adam_a, data, tc, 4, [&](const StepLog& log) { straight.push_back(format_log_line(log)); });

  DurianoModel b(ModelConfig::miniature(), 2);
  nn::Adam adam_b(tc.adam, b.params());
  std::vector<std::string> resumed;
  train(b, adam_b, data, tc, 2, [&](const StepLog& log) { resumed.push_back(format_log_line(log)); });
  save_checkpoint(dir / "c.dian", b, singers, roles, 2, &adam_b);
  auto ck = load_checkpoint(dir / "c.dian");
  CHECK(ck.step == 2);
  CHECK(ck.has_optimizer_state());
  nn::Adam adam_c(tc.adam, ck.model->params());
  adam_c.import_state(ck.archive, ck.model->params(), ck.step);
  train(*ck.model, adam_c, data, tc, 4, [&](const StepLog& log) { resumed.push_back(format_log_line(log)); });
  REQUIRE(resumed.size() == 4);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(straight[i].substr(0, straight[i].rfind('\t')) == resumed[i].substr(0, resumed[i].rfind('\t')));
  std::filesystem::remove_all(dir);
}

TEST_CASE("synthesis: length, determinism, checkpoint round trip") {
  DurianoModel model(ModelConfig::miniature(), 12);
  const auto plan = tiny_plan({0, 5, 22, 23, 0}, {3, 2, 8, 6, 3});
  SynthesisOptions opts;
  opts.griffin_lim_iterations = 5;
  const auto a = synthesize(model, plan, {}, opts);
  const auto t = plan.frames();
  CHECK(a.mel.frames.rows() == t);
  CHECK(a.linear.frames.cols() == 2049);
  const double expected = static_cast<double>(t) * opts.stft.hop_length;
  CHECK(std::abs(static_cast<double>(a.audio.samples.size()) - expected) <= opts.stft.win_length);
  for (double v : a.linear.frames.storage()) CHECK((v >= 0.0 && v <= 1.0));
  const auto b = synthesize(model, plan, {}, opts);
  CHECK(a.audio.samples == b.audio.samples);

  const auto path = std::filesystem::temp_directory_path() / "duriano_test_model.dian";
  corpus::Vocabulary singers, roles;
  singers.add("s");
  roles.add("r");
  save_checkpoint(path, model, singers, roles, 17);
  const auto ck = load_checkpoint(path);
  CHECK(ck.step == 17);
  CHECK_FALSE(ck.has_optimizer_state());
  CHECK(ck.singers.names() == singers.names());
  for (const auto& p : model.params().parameters()) CHECK(ck.model->params().find(p.name)->var.value() == p.var.value());
  const auto c = synthesize(*ck.model, plan, {}, opts);
  CHECK(c.audio.samples == a.audio.samples);
  std::filesystem::remove(path);
}
