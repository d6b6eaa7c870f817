#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "duriano/pitch/notes.hpp"

namespace duriano::align {

// Note-pitch ids: 0 = silence, 1..49 = MIDI 36..84.
inline constexpr int kNotePitchVocab = 50;
// Note-state ids: 0 = silence, 1 = onset, 2 = sustain.
inline constexpr int kNoteStateVocab = 3;

// Integer, frame-aligned conditioning for one phrase.
struct FrameFeaturePlan {
  std::string phrase_id;
  std::vector<int> phoneme_ids;     // per phoneme
  std::vector<int> durations;       // per phoneme, frames
  std::vector<int> note_pitch_ids;  // per frame
  std::vector<int> note_state_ids;  // per frame
  std::vector<double> positions;    // per frame, t / T
  int singer_id = 0;
  int role_type_id = 0;

  std::size_t frames() const { return note_pitch_ids.size(); }
  // Checks the length, range and position invariants.
  void validate() const;
};

std::vector<int> expand_durations(std::span<const int> ids, std::span<const int> durations);

// Inverse of expand_durations: (ids, run lengths).
std::pair<std::vector<int>, std::vector<int>> run_length_encode(std::span<const int> frames);

struct NoteIdFrames {
  std::vector<int> pitch_ids;
  std::vector<int> state_ids;
};

int note_pitch_id(int midi);
NoteIdFrames events_to_id_frames(const pitch::NoteEventSequence& events);

std::vector<double> frame_positions(std::size_t frames);

// Assembles and validates a plan from per-phoneme durations and note events.
FrameFeaturePlan make_plan(std::string phrase_id, std::vector<int> phoneme_ids, std::vector<int> durations,
                           const pitch::NoteEventSequence& events, int singer_id, int role_type_id);

// Binary plan file: "PLAN", version u32, phrase_id, T u64, N u64, singer u32,
// role u32, then phoneme_ids, durations, note_pitch_ids, note_state_ids and
// positions, each as a one-row DSPC container.
void save_plan(const std::filesystem::path& path, const FrameFeaturePlan& plan);
FrameFeaturePlan load_plan(const std::filesystem::path& path);

}  // namespace duriano::align
