#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "duriano/align/plan.hpp"

namespace duriano::align {

struct ScoreNote {
  int pitch = pitch::kSilence;  // MIDI 36..84 or kSilence
  double onset_beats = 0.0;
  double duration_beats = 0.0;
  // Explicit phoneme assignment (optional fourth score column). When every
  // note carries one, time overlap is not consulted.
  std::optional<std::size_t> phoneme_index;
};

struct Score {
  std::vector<ScoreNote> notes;
  double seconds_per_beat = 0.5;

  void validate() const;
  bool explicit_mapping() const;
};

// Lines `onset_beats<TAB>duration_beats<TAB>midi_or_SIL[<TAB>phoneme_index]`;
// an optional `# tempo=<seconds per beat>` line sets the tempo.
Score read_score(std::istream& is);
Score load_score(const std::filesystem::path& path);

struct PhonemeTrack {
  std::vector<int> ids;
  std::vector<int> durations;  // frames
  std::vector<bool> consonant;  // initial consonants are rendered as silence
};

// Builds a synthesis plan from a score:
//  - each voiced phoneme's frames are divided among its notes in proportion
//    to their beat durations (largest-remainder rounding),
//  - initial consonants and silence phonemes carry silence pitch and state,
//  - the first frame of each note is an onset, the rest sustain.
FrameFeaturePlan score_to_plan(const Score& score, const PhonemeTrack& phonemes, double hop_seconds, int singer_id,
                               int role_type_id, std::string phrase_id = "synth");

}  // namespace duriano::align
