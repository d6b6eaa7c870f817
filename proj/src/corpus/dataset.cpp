#include "duriano/corpus/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "duriano/dsp/io.hpp"
#include "duriano/util/error.hpp"
#include "duriano/util/key_value.hpp"

namespace duriano::corpus {

std::vector<std::string> DatasetManifest::train() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (e.split == Split::train) out.push_back(e.phrase_id);
  return out;
}

std::vector<std::string> DatasetManifest::validation() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (e.split == Split::validation) out.push_back(e.phrase_id);
  return out;
}

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries)
    if (!seen.insert(e.phrase_id).second) throw InputError("manifest: duplicate phrase id '" + e.phrase_id + "'");
}

DatasetManifest split_dataset(const std::vector<PhraseRef>& phrases, const std::string& holdout_piece) {
  const bool present =
      std::any_of(phrases.begin(), phrases.end(), [&](const PhraseRef& p) { return p.piece == holdout_piece; });
  if (!present) throw InputError("holdout piece '" + holdout_piece + "' has no phrases");
  DatasetManifest m;
  for (const auto& p : phrases)
    m.entries.push_back({p.phrase_id, p.piece == holdout_piece ? Split::validation : Split::train, p.piece});
  m.validate();
  return m;
}

DatasetManifest split_dataset(const std::vector<PhraseRef>& phrases) {
  DatasetManifest m;
  for (const auto& p : phrases) m.entries.push_back({p.phrase_id, Split::train, p.piece});
  m.validate();
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  for (const auto& e : manifest.entries)
    os << e.phrase_id << '\t' << (e.split == Split::train ? "train" : "validation") << '\t' << e.piece << '\n';
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot read manifest " + path.string());
  DatasetManifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), '\t');
    if (f.size() != 3 || (f[1] != "train" && f[1] != "validation"))
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected phrase_id<TAB>train|validation<TAB>piece");
    m.entries.push_back({f[0], f[1] == "train" ? Split::train : Split::validation, f[2]});
  }
  m.validate();
  return m;
}

void TrainingExample::validate() const {
  plan.validate();
  mel.validate();
  linear.validate();
  if (mel.frames.rows() != linear.frames.rows())
    throw InputError("example '" + phrase_id + "': mel and linear frame counts differ");
  if (plan.frames() != mel.frames.rows())
    throw InputError("example '" + phrase_id + "': plan frame count differs from targets");
  if (!f0.empty() && f0.size() != plan.frames())
    throw InputError("example '" + phrase_id + "': f0 length differs from targets");
}

pitch::NoteEventSequence reconcile_events(const pitch::NoteEventSequence& events, std::size_t frames,
                                          std::size_t tolerance) {
  const std::size_t have = events.size();
  const std::size_t diff = have > frames ? have - frames : frames - have;
  if (diff > tolerance)
    throw InputError("note events have " + std::to_string(have) + " frames, targets have " + std::to_string(frames));
  if (have == 0) throw InputError("note events are empty");
  pitch::NoteEventSequence out = events;
  out.events.resize(std::min(have, frames));
  while (out.events.size() < frames) {
    pitch::NoteEvent e = out.events.back();
    if (e.state == pitch::NoteState::onset) e.state = pitch::NoteState::sustain;
    out.events.push_back(e);
  }
  return out;
}

TrainingExample prepare_training_example(const ExampleInputs& in, const dsp::StftConfig& cfg,
                                         const dsp::MelFilterbank& fb, const dsp::Compression& compression) {
  if (in.audio.sample_rate != cfg.sample_rate)
    throw InputError("phrase '" + in.annotation.phrase_id + "': audio sample rate " +
                     std::to_string(in.audio.sample_rate) + " != " + std::to_string(cfg.sample_rate));
  TrainingExample ex;
  ex.phrase_id = in.annotation.phrase_id;
  auto spectra = dsp::analyze(in.audio, cfg, fb, compression);
  ex.mel = std::move(spectra.mel);
  ex.linear = std::move(spectra.linear);
  const std::size_t frames = ex.mel.frames.rows();

  const FrameDurations durations =
      durations_in_frames(in.annotation, cfg.hop_seconds(), static_cast<int>(frames));
  const auto events = reconcile_events(in.note_events, frames);
  ex.plan = align::make_plan(ex.phrase_id, durations.phoneme_ids, durations.frames, events, in.singer_id,
                             in.role_type_id);
  if (in.f0 != nullptr) {
    const std::size_t have = in.f0->size();
    const std::size_t diff = have > frames ? have - frames : frames - have;
    if (diff > 2 || have == 0)
      throw InputError("phrase '" + ex.phrase_id + "': f0 contour length " + std::to_string(have) +
                       " cannot be reconciled with " + std::to_string(frames) + " frames");
    ex.f0 = *in.f0;
    ex.f0.resize(frames, in.f0->back());
  }
  ex.validate();
  return ex;
}

void save_example(const std::filesystem::path& dir, const TrainingExample& ex) {
  ex.validate();
  dsp::save_container(dir / (ex.phrase_id + ".mel"), ex.mel.frames);
  dsp::save_container(dir / (ex.phrase_id + ".lin"), ex.linear.frames);
  Matrix f0(1, ex.f0.size());
  for (std::size_t t = 0; t < ex.f0.size(); ++t) f0(0, t) = ex.f0[t];
  dsp::save_container(dir / (ex.phrase_id + ".f0"), f0);
  align::save_plan(dir / (ex.phrase_id + ".plan"), ex.plan);
}

TrainingExample load_example(const std::filesystem::path& dir, const std::string& phrase_id,
                             const dsp::StftConfig& cfg, const dsp::Compression& compression) {
  TrainingExample ex;
  ex.phrase_id = phrase_id;
  ex.mel.frames = dsp::load_container(dir / (phrase_id + ".mel"));
  ex.linear.frames = dsp::load_container(dir / (phrase_id + ".lin"));
  ex.linear.config = cfg;
  ex.linear.compression = compression;
  const Matrix f0 = dsp::load_container(dir / (phrase_id + ".f0"));
  ex.f0.assign(f0.data().begin(), f0.data().end());
  ex.plan = align::load_plan(dir / (phrase_id + ".plan"));
  ex.validate();
  return ex;
}

}  // namespace duriano::corpus
