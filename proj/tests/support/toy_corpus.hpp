#pragma once

// Deterministic synthetic singing corpus: harmonic tones following a note
// sequence, vowel-dependent spectral envelopes and noise-burst consonants.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "duriano/corpus/annotation.hpp"
#include "duriano/dsp/stft.hpp"
#include "duriano/pitch/notes.hpp"

namespace testsupport {

struct ToyPhrase {
  duriano::corpus::PhraseAnnotation annotation;
  duriano::dsp::AudioBuffer audio;
  duriano::pitch::NoteEventSequence notes;  // one event per STFT frame
};

std::vector<ToyPhrase> make_toy_corpus(std::uint64_t seed = 7);

// Writes <id>.lab, <id>.wav and <id>.notes for every phrase.
void write_toy_corpus(const std::filesystem::path& dir, const std::vector<ToyPhrase>& phrases);

// Per-frame MIDI pitch of the generating notes (0 where silent).
std::vector<double> note_contour(const duriano::pitch::NoteEventSequence& notes);

}  // namespace testsupport
