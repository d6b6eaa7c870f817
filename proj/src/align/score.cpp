#include "duriano/align/score.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "duriano/util/error.hpp"
#include "duriano/util/key_value.hpp"
#include "duriano/util/rounding.hpp"

namespace duriano::align {

void Score::validate() const {
  if (notes.empty()) throw InputError("score: no notes");
  if (!(seconds_per_beat > 0.0)) throw InputError("score: tempo must be positive");
  for (std::size_t i = 0; i < notes.size(); ++i) {
    const auto& n = notes[i];
    const std::string where = "score note " + std::to_string(i) + ": ";
    if (!(n.duration_beats > 0.0)) throw InputError(where + "duration must be positive");
    if (n.pitch != pitch::kSilence && (n.pitch < pitch::kMinMidi || n.pitch > pitch::kMaxMidi))
      throw InputError(where + "MIDI " + std::to_string(n.pitch) + " outside 36..84");
    if (i > 0 && n.onset_beats < notes[i - 1].onset_beats + notes[i - 1].duration_beats - 1e-9)
      throw InputError(where + "notes must be sorted and non-overlapping");
  }
  const auto with_index = std::count_if(notes.begin(), notes.end(), [](const ScoreNote& n) { return n.phoneme_index.has_value(); });
  if (with_index != 0 && static_cast<std::size_t>(with_index) != notes.size())
    throw InputError("score: either every note or no note may carry a phoneme index");
}

bool Score::explicit_mapping() const { return !notes.empty() && notes.front().phoneme_index.has_value(); }

Score read_score(std::istream& is) {
  Score score;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto eq = t.find("tempo=");
      if (eq != std::string::npos) score.seconds_per_beat = std::stod(t.substr(eq + 6));
      continue;
    }
    const auto f = split(t, '\t');
    const std::string where = "score line " + std::to_string(lineno) + ": ";
    if (f.size() != 3 && f.size() != 4) throw InputError(where + "expected 3 or 4 tab-separated fields");
    ScoreNote n;
    try {
      n.onset_beats = std::stod(f[0]);
      n.duration_beats = std::stod(f[1]);
      n.pitch = f[2] == "SIL" ? pitch::kSilence : std::stoi(f[2]);
      if (f.size() == 4) n.phoneme_index = std::stoul(f[3]);
    } catch (const std::exception&) {
      throw InputError(where + "unparsable field");
    }
    score.notes.push_back(n);
  }
  score.validate();
  return score;
}

Score load_score(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot read " + path.string());
  try {
    return read_score(is);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

FrameFeaturePlan score_to_plan(const Score& score, const PhonemeTrack& phonemes, double hop_seconds, int singer_id,
                               int role_type_id, std::string phrase_id) {
  score.validate();
  const std::size_t n_ph = phonemes.ids.size();
  if (n_ph == 0) throw InputError("score_to_plan: no phonemes");
  if (phonemes.durations.size() != n_ph || phonemes.consonant.size() != n_ph)
    throw InputError("score_to_plan: phoneme ids, durations and consonant flags differ in length");
  if (!(hop_seconds > 0.0)) throw InputError("score_to_plan: hop must be positive");
  const bool explicit_map = score.explicit_mapping();
  if (explicit_map)
    for (const auto& n : score.notes)
      if (*n.phoneme_index >= n_ph) throw InputError("score_to_plan: note phoneme index beyond phoneme list");

  FrameFeaturePlan plan;
  plan.phrase_id = std::move(phrase_id);
  plan.phoneme_ids = phonemes.ids;
  plan.durations = phonemes.durations;
  plan.singer_id = singer_id;
  plan.role_type_id = role_type_id;

  std::size_t cursor = 0;
  // Note index sounding on the previous frame; -1 after silence.
  long long previous_note = -1;
  for (std::size_t i = 0; i < n_ph; ++i) {
    const int frames = phonemes.durations[i];
    if (frames < 1) throw InputError("score_to_plan: phoneme " + std::to_string(i) + " has non-positive duration");
    if (phonemes.consonant[i] || phonemes.ids[i] == 0) {
      plan.note_pitch_ids.insert(plan.note_pitch_ids.end(), static_cast<std::size_t>(frames), 0);
      plan.note_state_ids.insert(plan.note_state_ids.end(), static_cast<std::size_t>(frames), 0);
      previous_note = -1;
      cursor += static_cast<std::size_t>(frames);
      continue;
    }

    std::vector<std::size_t> notes;
    std::vector<double> weights;
    const double span_begin = static_cast<double>(cursor) * hop_seconds / score.seconds_per_beat;
    const double span_end = static_cast<double>(cursor + frames) * hop_seconds / score.seconds_per_beat;
    for (std::size_t k = 0; k < score.notes.size(); ++k) {
      const auto& n = score.notes[k];
      double w = 0.0;
      if (explicit_map) {
        if (*n.phoneme_index == i) w = n.duration_beats;
      } else {
        w = std::min(span_end, n.onset_beats + n.duration_beats) - std::max(span_begin, n.onset_beats);
        if (w < 1e-9) w = 0.0;
      }
      if (w > 0.0) {
        notes.push_back(k);
        weights.push_back(w);
      }
    }
    if (notes.empty())
      throw InputError("score_to_plan: phoneme " + std::to_string(i) + " (frames " + std::to_string(cursor) + "-" +
                       std::to_string(cursor + frames) + ") has no overlapping score note");

    // Segments that round to zero frames vanish; their share went to the
    // largest remainders.
    const std::vector<int> counts = largest_remainder(weights, frames);
    for (std::size_t j = 0; j < notes.size(); ++j) {
      const auto& note = score.notes[notes[j]];
      for (int f = 0; f < counts[j]; ++f) {
        if (note.pitch == pitch::kSilence) {
          plan.note_pitch_ids.push_back(0);
          plan.note_state_ids.push_back(0);
          previous_note = -1;
          continue;
        }
        plan.note_pitch_ids.push_back(note_pitch_id(note.pitch));
        const bool onset = previous_note != static_cast<long long>(notes[j]);
        plan.note_state_ids.push_back(onset ? static_cast<int>(pitch::NoteState::onset)
                                            : static_cast<int>(pitch::NoteState::sustain));
        previous_note = static_cast<long long>(notes[j]);
      }
    }
    cursor += static_cast<std::size_t>(frames);
  }
  plan.positions = frame_positions(cursor);
  plan.validate();
  return plan;
}

}  // namespace duriano::align
