#include "duriano/align/plan.hpp"

#include <cmath>
#include <fstream>

#include "duriano/dsp/io.hpp"
#include "duriano/util/binary_io.hpp"
#include "duriano/util/error.hpp"

namespace duriano::align {

void FrameFeaturePlan::validate() const {
  const auto fail = [&](const std::string& why) { throw InputError("plan '" + phrase_id + "': " + why); };
  if (phoneme_ids.size() != durations.size()) fail("phoneme_ids and durations differ in length");
  long long total = 0;
  for (int d : durations) {
    if (d < 1) fail("durations must be >= 1");
    total += d;
  }
  const std::size_t t = note_pitch_ids.size();
  if (static_cast<std::size_t>(total) != t) fail("duration sum " + std::to_string(total) + " != frame count " + std::to_string(t));
  if (note_state_ids.size() != t || positions.size() != t) fail("per-frame arrays differ in length");
  for (std::size_t i = 0; i < t; ++i) {
    if (note_pitch_ids[i] < 0 || note_pitch_ids[i] >= kNotePitchVocab) fail("note pitch id out of range");
    if (note_state_ids[i] < 0 || note_state_ids[i] >= kNoteStateVocab) fail("note state id out of range");
    if ((note_pitch_ids[i] == 0) != (note_state_ids[i] == 0)) fail("silence pitch and silence state must coincide");
    if (positions[i] != static_cast<double>(i) / static_cast<double>(t)) fail("positions must equal t/T");
  }
}

std::vector<int> expand_durations(std::span<const int> ids, std::span<const int> durations) {
  if (ids.size() != durations.size()) throw InputError("expand_durations: ids and durations differ in length");
  std::vector<int> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (durations[i] < 1) throw InputError("expand_durations: duration must be >= 1");
    out.insert(out.end(), static_cast<std::size_t>(durations[i]), ids[i]);
  }
  return out;
}

std::pair<std::vector<int>, std::vector<int>> run_length_encode(std::span<const int> frames) {
  std::pair<std::vector<int>, std::vector<int>> out;
  for (int id : frames) {
    if (!out.first.empty() && out.first.back() == id) {
      ++out.second.back();
    } else {
      out.first.push_back(id);
      out.second.push_back(1);
    }
  }
  return out;
}

int note_pitch_id(int midi) {
  if (midi == pitch::kSilence) return 0;
  if (midi < pitch::kMinMidi || midi > pitch::kMaxMidi)
    throw InputError("note pitch MIDI " + std::to_string(midi) + " outside 36..84");
  return midi - (pitch::kMinMidi - 1);
}

NoteIdFrames events_to_id_frames(const pitch::NoteEventSequence& events) {
  NoteIdFrames out;
  out.pitch_ids.reserve(events.size());
  out.state_ids.reserve(events.size());
  for (const auto& e : events.events) {
    out.pitch_ids.push_back(note_pitch_id(e.pitch));
    out.state_ids.push_back(static_cast<int>(e.state));
  }
  return out;
}

std::vector<double> frame_positions(std::size_t frames) {
  std::vector<double> pos(frames);
  for (std::size_t t = 0; t < frames; ++t) pos[t] = static_cast<double>(t) / static_cast<double>(frames);
  return pos;
}

FrameFeaturePlan make_plan(std::string phrase_id, std::vector<int> phoneme_ids, std::vector<int> durations,
                           const pitch::NoteEventSequence& events, int singer_id, int role_type_id) {
  FrameFeaturePlan plan;
  plan.phrase_id = std::move(phrase_id);
  plan.phoneme_ids = std::move(phoneme_ids);
  plan.durations = std::move(durations);
  auto ids = events_to_id_frames(events);
  plan.note_pitch_ids = std::move(ids.pitch_ids);
  plan.note_state_ids = std::move(ids.state_ids);
  plan.positions = frame_positions(plan.note_pitch_ids.size());
  plan.singer_id = singer_id;
  plan.role_type_id = role_type_id;
  plan.validate();
  return plan;
}

namespace {

template <typename T>
Matrix as_row(const std::vector<T>& v) {
  Matrix m(1, v.size());
  for (std::size_t i = 0; i < v.size(); ++i) m(0, i) = static_cast<double>(v[i]);
  return m;
}

std::vector<int> int_row(const Matrix& m, std::size_t expected, const char* what) {
  if (m.rows() != 1 || m.cols() != expected) throw InputError(std::string("plan file: bad shape for ") + what);
  std::vector<int> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    const double v = m(0, i);
    if (v != std::round(v)) throw InputError(std::string("plan file: non-integer value in ") + what);
    out[i] = static_cast<int>(v);
  }
  return out;
}

}  // namespace

void save_plan(const std::filesystem::path& path, const FrameFeaturePlan& plan) {
  plan.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  io::write_magic(os, "PLAN");
  io::write_le<std::uint32_t>(os, 1);
  io::write_string(os, plan.phrase_id);
  io::write_le<std::uint64_t>(os, plan.frames());
  io::write_le<std::uint64_t>(os, plan.phoneme_ids.size());
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(plan.singer_id));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(plan.role_type_id));
  dsp::write_container(os, as_row(plan.phoneme_ids));
  dsp::write_container(os, as_row(plan.durations));
  dsp::write_container(os, as_row(plan.note_pitch_ids));
  dsp::write_container(os, as_row(plan.note_state_ids));
  dsp::write_container(os, as_row(plan.positions));
}

FrameFeaturePlan load_plan(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot read " + path.string());
  try {
    io::expect_magic(is, "PLAN", "plan file");
    const auto version = io::read_le<std::uint32_t>(is);
    if (version != 1) throw InputError("plan file: unsupported version " + std::to_string(version));
    FrameFeaturePlan plan;
    plan.phrase_id = io::read_string(is);
    const auto frames = io::read_le<std::uint64_t>(is);
    const auto phonemes = io::read_le<std::uint64_t>(is);
    plan.singer_id = static_cast<int>(io::read_le<std::uint32_t>(is));
    plan.role_type_id = static_cast<int>(io::read_le<std::uint32_t>(is));
    plan.phoneme_ids = int_row(dsp::read_container(is), phonemes, "phoneme_ids");
    plan.durations = int_row(dsp::read_container(is), phonemes, "durations");
    plan.note_pitch_ids = int_row(dsp::read_container(is), frames, "note_pitch_ids");
    plan.note_state_ids = int_row(dsp::read_container(is), frames, "note_state_ids");
    const Matrix stored = dsp::read_container(is);
    if (stored.rows() != 1 || stored.cols() != frames) throw InputError("plan file: bad shape for positions");
    // Positions are stored at float precision; the exact values are t / T.
    plan.positions = frame_positions(frames);
    for (std::size_t t = 0; t < frames; ++t)
      if (static_cast<float>(stored(0, t)) != static_cast<float>(plan.positions[t]))
        throw InputError("plan file: positions inconsistent with frame count");
    plan.validate();
    return plan;
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace duriano::align
