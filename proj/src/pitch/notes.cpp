#include "duriano/pitch/notes.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "duriano/util/error.hpp"
#include "duriano/util/key_value.hpp"

namespace duriano::pitch {

const char* state_name(NoteState s) {
  switch (s) {
    case NoteState::silence: return "silence";
    case NoteState::onset: return "onset";
    case NoteState::sustain: return "sustain";
  }
  return "?";
}

void NoteEventSequence::validate() const {
  for (std::size_t t = 0; t < events.size(); ++t) {
    const auto& e = events[t];
    const std::string where = "note event " + std::to_string(t) + ": ";
    if ((e.state == NoteState::silence) != (e.pitch == kSilence))
      throw InputError(where + "silence state and silence pitch must coincide");
    if (e.voiced() && (e.pitch < kMinMidi || e.pitch > kMaxMidi))
      throw InputError(where + "pitch " + std::to_string(e.pitch) + " outside MIDI 36..84");
    const bool run_start = e.voiced() && (t == 0 || events[t - 1].pitch != e.pitch);
    if (run_start && e.state != NoteState::onset) throw InputError(where + "voiced run must start with onset");
  }
}

NoteEventSequence events_from_labels(const std::vector<int>& labels, double hop_seconds) {
  NoteEventSequence seq;
  seq.hop_seconds = hop_seconds;
  seq.events.reserve(labels.size());
  for (std::size_t t = 0; t < labels.size(); ++t) {
    NoteEvent e;
    e.pitch = labels[t];
    if (e.pitch == kSilence)
      e.state = NoteState::silence;
    else
      e.state = (t == 0 || labels[t - 1] != e.pitch) ? NoteState::onset : NoteState::sustain;
    seq.events.push_back(e);
  }
  return seq;
}

namespace {

struct Run {
  int label;
  std::size_t start;
  std::size_t length;
};

std::vector<Run> runs_of(const std::vector<int>& labels) {
  std::vector<Run> runs;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (runs.empty() || runs.back().label != labels[t])
      runs.push_back({labels[t], t, 1});
    else
      ++runs.back().length;
  }
  return runs;
}

void coalesce(std::vector<Run>& runs) {
  std::vector<Run> out;
  for (const auto& r : runs) {
    if (!out.empty() && out.back().label == r.label)
      out.back().length += r.length;
    else
      out.push_back(r);
  }
  runs.swap(out);
}

}  // namespace

NoteEventSequence segment_notes(const PitchContour& contour, const SegmentOptions& options) {
  const std::size_t frames = contour.f0.size();
  if (frames == 0) return NoteEventSequence{{}, contour.hop_seconds};

  // State 0 is silence, state s >= 1 is MIDI kMinMidi + s - 1.
  constexpr std::size_t kStates = kMaxMidi - kMinMidi + 2;
  const double inv_two_var = 1.0 / (2.0 * options.sigma * options.sigma);
  auto emission = [&](std::size_t t, std::size_t s) {
    const double f = contour.f0[t];
    if (!(f > 0.0)) return s == 0 ? 0.0 : options.voicing_mismatch_cost;
    if (s == 0) return options.voicing_mismatch_cost;
    const double d = static_cast<double>(kMinMidi + static_cast<int>(s) - 1) - hz_to_midi(f);
    return d * d * inv_two_var;
  };

  std::vector<double> cost(kStates), next(kStates);
  std::vector<std::vector<std::uint8_t>> back(frames, std::vector<std::uint8_t>(kStates, 0));
  for (std::size_t s = 0; s < kStates; ++s) cost[s] = emission(0, s);
  for (std::size_t t = 1; t < frames; ++t) {
    // Lowest-index argmin, so ties resolve toward the lower state.
    std::size_t best = 0;
    for (std::size_t s = 1; s < kStates; ++s)
      if (cost[s] < cost[best]) best = s;
    for (std::size_t s = 0; s < kStates; ++s) {
      const double change = cost[best] + options.change_penalty;
      std::size_t arg = s;
      double c = cost[s];
      if (change < c || (change == c && best < s)) {
        c = change;
        arg = best;
      }
      next[s] = c + emission(t, s);
      back[t][s] = static_cast<std::uint8_t>(arg);
    }
    cost.swap(next);
  }
  std::size_t state = 0;
  for (std::size_t s = 1; s < kStates; ++s)
    if (cost[s] < cost[state]) state = s;
  std::vector<int> labels(frames);
  for (std::size_t t = frames; t-- > 0;) {
    labels[t] = state == 0 ? kSilence : kMinMidi + static_cast<int>(state) - 1;
    if (t > 0) state = back[t][state];
  }

  const auto min_frames = static_cast<std::size_t>(
      std::max(1.0, std::ceil(options.min_duration_seconds / contour.hop_seconds - 1e-9)));
  std::vector<Run> runs = runs_of(labels);
  while (runs.size() > 1) {
    std::size_t victim = runs.size();
    for (std::size_t i = 0; i < runs.size(); ++i)
      if (runs[i].length < min_frames && (victim == runs.size() || runs[i].length < runs[victim].length)) victim = i;
    if (victim == runs.size()) break;
    std::size_t into;
    if (victim == 0)
      into = 1;
    else if (victim + 1 == runs.size())
      into = victim - 1;
    else
      into = runs[victim + 1].length > runs[victim - 1].length ? victim + 1 : victim - 1;
    runs[victim].label = runs[into].label;
    coalesce(runs);
  }
  for (const auto& r : runs)
    for (std::size_t t = r.start; t < r.start + r.length; ++t) labels[t] = r.label;
  return events_from_labels(labels, contour.hop_seconds);
}

void write_events(std::ostream& os, const NoteEventSequence& seq) {
  for (std::size_t t = 0; t < seq.events.size(); ++t) {
    const auto& e = seq.events[t];
    os << t << '\t' << (e.voiced() ? std::to_string(e.pitch) : std::string("SIL")) << '\t' << state_name(e.state)
       << '\n';
  }
}

NoteEventSequence read_events(std::istream& is, double hop_seconds) {
  NoteEventSequence seq;
  seq.hop_seconds = hop_seconds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), '\t');
    const std::string where = "note events line " + std::to_string(lineno) + ": ";
    if (fields.size() != 3 && fields.size() != 4) throw InputError(where + "expected 3 or 4 tab-separated fields");
    if (std::stoul(fields[0]) != seq.events.size()) throw InputError(where + "frame index out of order");
    NoteEvent e;
    if (fields[1] == "SIL") {
      e.pitch = kSilence;
    } else {
      try {
        e.pitch = std::stoi(fields[1]);
      } catch (const std::exception&) {
        throw InputError(where + "bad pitch '" + fields[1] + "'");
      }
    }
    if (fields[2] == "silence") e.state = NoteState::silence;
    else if (fields[2] == "onset") e.state = NoteState::onset;
    else if (fields[2] == "sustain") e.state = NoteState::sustain;
    else throw InputError(where + "bad state '" + fields[2] + "'");
    seq.events.push_back(e);
  }
  seq.validate();
  return seq;
}

void save_events(const std::filesystem::path& path, const NoteEventSequence& seq) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  write_events(os, seq);
}

NoteEventSequence load_events(const std::filesystem::path& path, double hop_seconds) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot read " + path.string());
  try {
    return read_events(is, hop_seconds);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

Transcription transcribe(const dsp::AudioBuffer& audio, int hop, double fmin, double fmax) {
  Transcription tr;
  tr.contour = extract_f0(audio, hop, fmin, fmax);
  tr.notes = segment_notes(tr.contour);
  return tr;
}

void write_transcription(std::ostream& os, const Transcription& tr) {
  if (tr.contour.size() != tr.notes.size()) throw InputError("transcription: contour and notes differ in length");
  char buf[32];
  for (std::size_t t = 0; t < tr.notes.events.size(); ++t) {
    const auto& e = tr.notes.events[t];
    std::snprintf(buf, sizeof buf, "%.4f", tr.contour.f0[t]);
    os << t << '\t' << (e.voiced() ? std::to_string(e.pitch) : std::string("SIL")) << '\t' << state_name(e.state)
       << '\t' << buf << '\n';
  }
}

void save_transcription(const std::filesystem::path& path, const Transcription& tr) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  write_transcription(os, tr);
}

PitchContour load_f0(const std::filesystem::path& path, double hop_seconds) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot read f0 file " + path.string());
  PitchContour contour;
  contour.hop_seconds = hop_seconds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split(t, '\t');
    if (fields.size() != 1 && fields.size() != 4)
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected one f0 value or a transcription line");
    try {
      const double hz = std::stod(fields.back());
      if (!std::isfinite(hz) || hz < 0.0) throw std::invalid_argument("negative");
      contour.f0.push_back(hz);
    } catch (const std::exception&) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": bad f0 value '" + fields.back() + "'");
    }
  }
  if (contour.f0.empty()) throw InputError(path.string() + ": no f0 values");
  return contour;
}

}  // namespace duriano::pitch
