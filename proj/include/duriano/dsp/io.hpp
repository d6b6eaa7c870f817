#pragma once

#include <filesystem>
#include <iosfwd>

#include "duriano/dsp/stft.hpp"
#include "duriano/util/matrix.hpp"

namespace duriano::dsp {

// Flat matrix container: "DSPC", version u32, rows u64, cols u64, then
// row-major little-endian float32 values.
inline constexpr std::uint32_t kContainerVersion = 1;

void write_container(std::ostream& os, const Matrix& m);
Matrix read_container(std::istream& is);
void save_container(const std::filesystem::path& path, const Matrix& m);
Matrix load_container(const std::filesystem::path& path);

// RIFF WAV, 16-bit PCM, mono.
AudioBuffer read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

}  // namespace duriano::dsp
