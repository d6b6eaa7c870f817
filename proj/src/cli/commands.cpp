#include "duriano/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "duriano/align/score.hpp"
#include "duriano/corpus/dataset.hpp"
#include "duriano/corpus/inventory.hpp"
#include "duriano/dsp/griffin_lim.hpp"
#include "duriano/dsp/io.hpp"
#include "duriano/eval/metrics.hpp"
#include "duriano/model/checkpoint.hpp"
#include "duriano/model/synthesize.hpp"
#include "duriano/model/trainer.hpp"
#include "duriano/pitch/notes.hpp"
#include "duriano/util/error.hpp"
#include "duriano/util/key_value.hpp"

namespace duriano::cli {

fs::path manifest_path(const fs::path& workdir) { return workdir / "manifest.tsv"; }
fs::path cache_dir(const fs::path& workdir) { return workdir / "cache"; }
fs::path identities_path(const fs::path& workdir) { return workdir / "identities.cfg"; }
fs::path checkpoint_dir(const fs::path& workdir) { return workdir / "checkpoints"; }
fs::path train_log_path(const fs::path& workdir) { return workdir / "train.log"; }

fs::path checkpoint_path(const fs::path& workdir, std::uint64_t step) {
  char name[48];
  std::snprintf(name, sizeof name, "step_%08llu.dian", static_cast<unsigned long long>(step));
  return checkpoint_dir(workdir) / name;
}

std::optional<fs::path> latest_checkpoint(const fs::path& workdir) {
  const fs::path dir = checkpoint_dir(workdir);
  if (!fs::is_directory(dir)) return std::nullopt;
  std::optional<fs::path> best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("step_", 0) != 0 || entry.path().extension() != ".dian") continue;
    if (!best || name > best->filename().string()) best = entry.path();
  }
  return best;
}

namespace {

constexpr double kDefaultF0Min = 65.0;
constexpr double kDefaultF0Max = 1050.0;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  os << text;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void write_stft(KeyValueConfig& kv, const dsp::StftConfig& cfg, const dsp::Compression& c) {
  kv.set("sample_rate", std::to_string(cfg.sample_rate));
  kv.set("win_length", std::to_string(cfg.win_length));
  kv.set("hop_length", std::to_string(cfg.hop_length));
  kv.set("fft_size", std::to_string(cfg.fft_size));
  kv.set("window", "hann");
  kv.set("mel_bins", std::to_string(dsp::kMelBins));
  kv.set("floor_db", fmt(c.floor_db));
  kv.set("ref_db", fmt(c.ref_db));
}

std::vector<fs::path> find_annotations(const fs::path& root) {
  if (!fs::is_directory(root)) throw InputError("corpus directory " + root.string() + " does not exist");
  std::vector<fs::path> out;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().extension() == ".lab") out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no annotation files (*.lab) under " + root.string());
  return out;
}

}  // namespace

void cmd_preprocess(const PreprocessArgs& args, std::ostream& log) {
  const auto annotation_files = find_annotations(args.corpus);
  KeyValueConfig corpus_cfg;
  if (fs::exists(args.corpus / "corpus.cfg")) corpus_cfg = KeyValueConfig::load(args.corpus / "corpus.cfg");
  const double f0_min = corpus_cfg.get_double("f0_min", kDefaultF0Min);
  const double f0_max = corpus_cfg.get_double("f0_max", kDefaultF0Max);
  if (!(f0_min > 0.0 && f0_max > f0_min)) throw ConfigError("invalid config: need 0 < f0_min < f0_max");

  std::vector<corpus::PhraseAnnotation> phrases;
  std::map<std::string, fs::path> seen;
  for (const auto& path : annotation_files) {
    auto ann = corpus::load_annotation(path);
    const auto [it, fresh] = seen.emplace(ann.phrase_id, path);
    if (!fresh)
      throw InputError(path.string() + ": phrase id '" + ann.phrase_id + "' also used by " + it->second.string());
    phrases.push_back(std::move(ann));
  }

  corpus::Vocabulary singers, roles;
  std::vector<corpus::PhraseRef> refs;
  std::vector<std::string> pieces;
  for (const auto& p : phrases) {
    singers.add(p.singer);
    roles.add(p.role_type);
    refs.push_back({p.phrase_id, p.piece});
    if (std::find(pieces.begin(), pieces.end(), p.piece) == pieces.end()) pieces.push_back(p.piece);
  }
  std::sort(pieces.begin(), pieces.end());
  std::string holdout = corpus_cfg.get("holdout_piece", pieces.size() >= 2 ? pieces.back() : std::string());
  const corpus::DatasetManifest manifest =
      holdout.empty() ? corpus::split_dataset(refs) : corpus::split_dataset(refs, holdout);

  const dsp::StftConfig stft = dsp::StftConfig::canonical();
  const dsp::Compression compression;
  const auto filterbank = dsp::build_mel_filterbank(stft);
  fs::create_directories(cache_dir(args.workdir));
  double seconds = 0.0;
  for (const auto& ann : phrases) {
    const dsp::AudioBuffer audio = dsp::read_wav(ann.audio_path);
    seconds += audio.duration_seconds();
    const pitch::PitchContour contour = pitch::extract_f0(audio, stft.hop_length, f0_min, f0_max);
    const fs::path notes_file = fs::path(ann.audio_path).replace_extension(".notes");
    const pitch::NoteEventSequence notes = fs::exists(notes_file)
                                               ? pitch::load_events(notes_file, stft.hop_seconds())
                                               : pitch::segment_notes(contour);
    corpus::ExampleInputs in{ann, audio, notes, singers.id_of(ann.singer), roles.id_of(ann.role_type), &contour.f0};
    try {
      const auto ex = corpus::prepare_training_example(in, stft, filterbank, compression);
      corpus::save_example(cache_dir(args.workdir), ex);
    } catch (const InputError& e) {
      throw InputError(ann.audio_path.string() + ": " + e.what());
    }
  }
  corpus::save_manifest(manifest_path(args.workdir), manifest);

  KeyValueConfig ids;
  ids.set("singers", singers.join());
  ids.set("roles", roles.join());
  write_text(identities_path(args.workdir), ids.dump());

  KeyValueConfig resolved;
  resolved.set("corpus", fs::absolute(args.corpus).lexically_normal().string());
  resolved.set("holdout_piece", holdout);
  resolved.set("f0_min", fmt(f0_min));
  resolved.set("f0_max", fmt(f0_max));
  write_stft(resolved, stft, compression);
  write_text(args.workdir / "preprocess.cfg", resolved.dump());

  char hours[32];
  std::snprintf(hours, sizeof hours, "%.4f", seconds / 3600.0);
  log << "preprocessed " << phrases.size() << " phrases (train " << manifest.train().size() << ", validation "
      << manifest.validation().size() << "), " << hours << " hours\n";
}

void cmd_transcribe(const TranscribeArgs& args, std::ostream& log) {
  const dsp::AudioBuffer audio = dsp::read_wav(args.wav);
  const dsp::StftConfig stft = dsp::StftConfig::canonical();
  const int hop = static_cast<int>(std::lround(stft.hop_seconds() * audio.sample_rate));
  pitch::Transcription tr = pitch::transcribe(audio, hop, kDefaultF0Min, kDefaultF0Max);
  pitch::save_transcription(args.out, tr);
  std::size_t notes = 0;
  for (const auto& e : tr.notes.events)
    if (e.state == pitch::NoteState::onset) ++notes;
  log << "transcribed " << tr.contour.size() << " frames, " << tr.contour.voiced_count() << " voiced, " << notes
      << " notes\n";
}

namespace {

KeyValueConfig resolve_train_config(const TrainArgs& args, model::ModelConfig& mcfg, model::TrainConfig& tcfg) {
  KeyValueConfig kv;
  if (args.config) kv = KeyValueConfig::load(*args.config);
  const std::string preset = kv.get("model_preset", "reference");
  model::ModelConfig base;
  if (preset == "miniature") base = model::ModelConfig::miniature();
  else if (preset == "toy") base = model::ModelConfig::toy();
  else if (preset != "reference")
    throw ConfigError("invalid config: model_preset must be 'reference', 'toy' or 'miniature'");
  mcfg = model::ModelConfig::read(kv, base);
  tcfg = model::TrainConfig::read(kv, model::TrainConfig{});
  if (args.seed) tcfg.seed = *args.seed;
  KeyValueConfig resolved;
  resolved.set("model_preset", preset);
  mcfg.write(resolved);
  tcfg.write(resolved);
  return resolved;
}

std::vector<std::string> read_log_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream is(path);
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

}  // namespace

void cmd_train(const TrainArgs& args, std::ostream& log) {
  if (!fs::exists(manifest_path(args.workdir)) || !fs::exists(identities_path(args.workdir)))
    throw InputError("no preprocessed data in " + args.workdir.string() + "; run `duriano preprocess` first");
  const auto manifest = corpus::load_manifest(manifest_path(args.workdir));
  const auto ids = KeyValueConfig::load(identities_path(args.workdir));
  const auto singers = corpus::Vocabulary::parse(ids.get("singers", ""));
  const auto roles = corpus::Vocabulary::parse(ids.get("roles", ""));

  model::ModelConfig mcfg;
  model::TrainConfig tcfg;
  KeyValueConfig resolved = resolve_train_config(args, mcfg, tcfg);
  mcfg.phoneme_vocab = corpus::PhonemeInventory::standard().size();
  mcfg.singer_vocab = std::max<std::size_t>(singers.size(), 1);
  mcfg.role_vocab = std::max<std::size_t>(roles.size(), 1);

  const auto train_ids = manifest.train();
  if (train_ids.empty()) throw InputError("the manifest in " + args.workdir.string() + " has no training phrases");
  std::vector<corpus::TrainingExample> examples;
  for (const auto& id : train_ids) {
    if (!fs::exists(cache_dir(args.workdir) / (id + ".plan")))
      throw InputError("missing cached features for '" + id + "'; run `duriano preprocess` first");
    examples.push_back(corpus::load_example(cache_dir(args.workdir), id, dsp::StftConfig::canonical()));
  }
  std::vector<model::PreparedExample> data;
  for (const auto& ex : examples) data.push_back(model::prepare(ex));

  std::unique_ptr<model::DurianoModel> net;
  nn::Adam adam;
  std::vector<std::string> kept_log;
  const auto latest = args.resume ? latest_checkpoint(args.workdir) : std::nullopt;
  if (latest) {
    auto ck = model::load_checkpoint(*latest);
    if (!ck.has_optimizer_state()) throw InputError(latest->string() + " has no optimizer state to resume from");
    net = std::move(ck.model);
    adam = nn::Adam(tcfg.adam, net->params());
    adam.import_state(ck.archive, net->params(), ck.step);
    mcfg = net->config();
    const std::string preset = resolved.get("model_preset", "reference");
    resolved = KeyValueConfig{};
    // The checkpoint's own configuration wins; the preset name is kept for
    // the record only.
    resolved.set("model_preset", preset);
    mcfg.write(resolved);
    tcfg.write(resolved);
    for (const auto& line : read_log_lines(train_log_path(args.workdir))) {
      if (line.rfind("step", 0) == 0) continue;
      if (std::stoull(line) > ck.step) break;
      kept_log.push_back(line);
    }
    log << "resuming from " << latest->string() << " at step " << ck.step << '\n';
  } else {
    if (args.resume) log << "no checkpoint to resume from; starting fresh\n";
    net = std::make_unique<model::DurianoModel>(mcfg, tcfg.seed);
    adam = nn::Adam(tcfg.adam, net->params());
  }
  write_text(args.workdir / "train.cfg", resolved.dump());
  fs::create_directories(checkpoint_dir(args.workdir));

  std::ofstream train_log(train_log_path(args.workdir), std::ios::binary | std::ios::trunc);
  if (!train_log) throw InputError("cannot write " + train_log_path(args.workdir).string());
  train_log << model::log_header() << '\n';
  for (const auto& line : kept_log) train_log << line << '\n';
  train_log.flush();

  const std::uint64_t first = adam.steps() + 1;
  model::train(*net, adam, data, tcfg, tcfg.steps, [&](const model::StepLog& s) {
    train_log << model::format_log_line(s) << '\n';
    train_log.flush();
    const bool last = s.step == tcfg.steps;
    if (last || (tcfg.checkpoint_every > 0 && s.step % tcfg.checkpoint_every == 0))
      model::save_checkpoint(checkpoint_path(args.workdir, s.step), *net, singers, roles, s.step, &adam);
    if (s.step == first || last || s.step % 10 == 0) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "step %llu loss %.6f", static_cast<unsigned long long>(s.step), s.total());
      log << buf << '\n';
    }
  });
  log << "trained to step " << adam.steps() << "; checkpoints in " << checkpoint_dir(args.workdir).string() << '\n';
}

void cmd_synth(const SynthArgs& args, std::ostream& log) {
  const auto mode = model::parse_mode(args.mode);
  auto ck = model::load_checkpoint(args.checkpoint);
  const model::DurianoModel& net = *ck.model;
  if (net.config().mode != mode)
    throw InputError(args.checkpoint.string() + " was trained in " + model::mode_name(net.config().mode) +
                     " mode, not " + args.mode);
  const dsp::StftConfig stft = dsp::StftConfig::canonical();
  const double hop = stft.hop_seconds();

  const corpus::PhraseAnnotation ann = corpus::load_annotation(args.phonemes);
  const corpus::FrameDurations durations = corpus::durations_in_frames(ann, hop);
  for (const auto& w : durations.warnings) log << "warning: " << w << '\n';
  const auto identity = [&](const corpus::Vocabulary& vocab, const std::string& name, const char* what) {
    for (std::size_t i = 0; i < vocab.size(); ++i)
      if (vocab.names()[i] == name) return static_cast<int>(i);
    if (name == "unknown") return 0;
    throw InputError(args.phonemes.string() + ": " + what + " '" + name + "' is not known to the checkpoint");
  };
  const int singer = identity(ck.singers, ann.singer, "singer");
  const int role = identity(ck.roles, ann.role_type, "role type");

  align::FrameFeaturePlan plan;
  std::vector<double> f0;
  const std::string phrase = args.phonemes.stem().string();
  if (mode == model::ConditioningMode::note) {
    const align::Score score = align::load_score(args.score);
    align::PhonemeTrack track{durations.phoneme_ids, durations.frames,
                              corpus::initial_consonant_flags(durations.phoneme_ids)};
    try {
      plan = align::score_to_plan(score, track, hop, singer, role, phrase);
    } catch (const InputError& e) {
      throw InputError(args.score.string() + ": " + e.what());
    }
  } else {
    long long total = 0;
    for (int d : durations.frames) total += d;
    pitch::NoteEventSequence silent;
    silent.hop_seconds = hop;
    silent.events.assign(static_cast<std::size_t>(total), pitch::NoteEvent{});
    plan = align::make_plan(phrase, durations.phoneme_ids, durations.frames, silent, singer, role);
    const pitch::PitchContour contour = pitch::load_f0(args.score, hop);
    if (plan.frames() >= 2)
      f0 = eval::resample_contour(contour.f0, plan.frames());
    else
      f0.assign(plan.frames(), contour.f0.front());
  }

  model::SynthesisOptions opts;
  opts.stft = stft;
  const auto result = model::synthesize(net, plan, f0, opts);
  dsp::write_wav(args.out, result.audio);
  fs::path spec_path = args.out;
  spec_path.replace_extension(".lin");
  dsp::save_container(spec_path, result.linear.frames);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", result.audio.duration_seconds());
  log << "wrote " << args.out.string() << " (" << plan.frames() << " frames, " << buf << " s) and "
      << spec_path.string() << '\n';
}

void cmd_vocode(const VocodeArgs& args, std::ostream& log) {
  if (args.iters < 1) throw InputError("--iters must be >= 1");
  dsp::LinearSpectrogram spec;
  spec.frames = dsp::load_container(args.spec);
  spec.config = dsp::StftConfig::canonical();
  if (spec.frames.cols() != spec.config.bins())
    throw InputError(args.spec.string() + ": expected " + std::to_string(spec.config.bins()) + " bins, found " +
                     std::to_string(spec.frames.cols()));
  if (spec.frames.rows() == 0) throw InputError(args.spec.string() + ": no frames");
  try {
    spec.validate();
  } catch (const InputError& e) {
    throw InputError(args.spec.string() + ": " + e.what());
  }
  const auto result = dsp::griffin_lim(spec, args.iters);
  dsp::write_wav(args.out, result.audio);
  log << "wrote " << args.out.string() << " after " << args.iters << " iterations (final error "
      << result.errors.back() << ")\n";
}

void cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& log) {
  if (args.wavs.size() < 2) throw InputError("eval needs at least two --wav files");
  if (!args.labels.empty() && args.labels.size() != args.wavs.size())
    throw InputError("eval: " + std::to_string(args.labels.size()) + " labels for " + std::to_string(args.wavs.size()) +
                     " files");
  eval::ContourSet set;
  for (std::size_t i = 0; i < args.wavs.size(); ++i) {
    const dsp::AudioBuffer audio = dsp::read_wav(args.wavs[i]);
    eval::ContourOptions opts;
    opts.hop = static_cast<int>(std::lround(0.01 * audio.sample_rate));
    auto contour = eval::contour_from_audio(audio, opts);
    if (contour.voiced_count() == 0) throw InputError(args.wavs[i].string() + ": no voiced frames");
    set.emplace_back(args.labels.empty() ? args.wavs[i].stem().string() : args.labels[i], std::move(contour));
  }
  const std::string report = eval::format_report(eval::eval_report(set));
  if (args.out) {
    write_text(*args.out, report);
    log << "wrote " << args.out->string() << '\n';
  } else {
    out << report;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"duration-informed singing voice synthesis pipeline", "duriano"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "ingest an annotated corpus into a workdir");
  c_pre->add_option("--corpus", pre.corpus, "corpus root with *.lab annotations and audio")->required();
  c_pre->add_option("--workdir", pre.workdir, "output directory")->required();

  TranscribeArgs tr;
  auto* c_tr = app.add_subcommand("transcribe", "pitch-track a recording and segment notes");
  c_tr->add_option("--wav", tr.wav, "input WAV")->required();
  c_tr->add_option("--out", tr.out, "output transcription TSV")->required();

  TrainArgs train;
  std::string train_config;
  std::uint64_t train_seed = 0;
  auto* c_train = app.add_subcommand("train", "train the synthesis model");
  c_train->add_option("--workdir", train.workdir, "preprocessed workdir")->required();
  auto* o_config = c_train->add_option("--config", train_config, "key=value configuration file");
  auto* o_seed = c_train->add_option("--seed", train_seed, "random seed");
  c_train->add_flag("--resume", train.resume, "continue from the latest checkpoint");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "synthesize a phrase from a score");
  c_synth->add_option("--score", synth.score, "score file (f0 contour file in f0 mode)")->required();
  c_synth->add_option("--phonemes", synth.phonemes, "phoneme annotation file")->required();
  c_synth->add_option("--checkpoint", synth.checkpoint, "model checkpoint")->required();
  c_synth->add_option("--out", synth.out, "output WAV")->required();
  c_synth->add_option("--mode", synth.mode, "conditioning mode")->check(CLI::IsMember({"note", "f0"}));

  VocodeArgs voc;
  auto* c_voc = app.add_subcommand("vocode", "Griffin-Lim reconstruction of a linear spectrogram");
  c_voc->add_option("--spec", voc.spec, "linear spectrogram container")->required();
  c_voc->add_option("--out", voc.out, "output WAV")->required();
  c_voc->add_option("--iters", voc.iters, "iterations")->capture_default_str();

  EvalArgs ev;
  std::string eval_out;
  auto* c_eval = app.add_subcommand("eval", "pitch-contour correlation and distribution report");
  c_eval->add_option("--wav", ev.wavs, "WAV files")->required()->expected(1, -1);
  c_eval->add_option("--labels", ev.labels, "system labels")->expected(1, -1);
  auto* o_eval_out = c_eval->add_option("--out", eval_out, "report TSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (*c_pre) cmd_preprocess(pre, out);
    else if (*c_tr) cmd_transcribe(tr, out);
    else if (*c_train) {
      if (*o_config) train.config = train_config;
      if (*o_seed) train.seed = train_seed;
      cmd_train(train, out);
    } else if (*c_synth) cmd_synth(synth, out);
    else if (*c_voc) cmd_vocode(voc, out);
    else if (*c_eval) {
      if (*o_eval_out) ev.out = eval_out;
      cmd_eval(ev, out, err);
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace duriano::cli
