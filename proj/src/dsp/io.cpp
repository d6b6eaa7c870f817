#include "duriano/dsp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "duriano/util/binary_io.hpp"
#include "duriano/util/error.hpp"

namespace duriano::dsp {

void write_container(std::ostream& os, const Matrix& m) {
  io::write_magic(os, "DSPC");
  io::write_le<std::uint32_t>(os, kContainerVersion);
  io::write_le<std::uint64_t>(os, m.rows());
  io::write_le<std::uint64_t>(os, m.cols());
  for (double v : m.data()) io::write_f32(os, static_cast<float>(v));
}

Matrix read_container(std::istream& is) {
  io::expect_magic(is, "DSPC", "spectrogram container");
  const auto version = io::read_le<std::uint32_t>(is);
  if (version != kContainerVersion) throw InputError("spectrogram container: unsupported version " + std::to_string(version));
  const auto rows = io::read_le<std::uint64_t>(is);
  const auto cols = io::read_le<std::uint64_t>(is);
  if (cols != 0 && rows > (1ULL << 40) / cols) throw InputError("spectrogram container: implausible shape");
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = io::read_f32(is);
  return m;
}

void save_container(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  write_container(os, m);
}

Matrix load_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot read " + path.string());
  try {
    return read_container(is);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot read " + path.string());
  const auto fail = [&](const std::string& why) { throw InputError(path.string() + ": " + why); };
  try {
    io::expect_magic(is, "RIFF", "wav");
    io::read_le<std::uint32_t>(is);
    io::expect_magic(is, "WAVE", "wav");
    int channels = 0, bits = 0, format = 0;
    AudioBuffer audio;
    bool have_fmt = false;
    while (true) {
      char id[4];
      if (!is.read(id, 4)) fail("no data chunk");
      const auto size = io::read_le<std::uint32_t>(is);
      if (std::memcmp(id, "fmt ", 4) == 0) {
        format = io::read_le<std::uint16_t>(is);
        channels = io::read_le<std::uint16_t>(is);
        audio.sample_rate = static_cast<int>(io::read_le<std::uint32_t>(is));
        io::read_le<std::uint32_t>(is);
        io::read_le<std::uint16_t>(is);
        bits = io::read_le<std::uint16_t>(is);
        is.ignore(size - 16 + (size & 1));
        have_fmt = true;
      } else if (std::memcmp(id, "data", 4) == 0) {
        if (!have_fmt) fail("data chunk before fmt chunk");
        if (format != 1 || bits != 16 || channels != 1) fail("only 16-bit PCM mono is supported");
        audio.samples.resize(size / 2);
        for (auto& s : audio.samples) s = static_cast<std::int16_t>(io::read_le<std::uint16_t>(is)) / 32768.0;
        return audio;
      } else {
        is.ignore(size + (size & 1));
      }
    }
  } catch (const InputError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path.string(), 0) == 0) throw;
    fail(msg);
  }
  return {};
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  io::write_magic(os, "RIFF");
  io::write_le<std::uint32_t>(os, 36 + data_bytes);
  io::write_magic(os, "WAVE");
  io::write_magic(os, "fmt ");
  io::write_le<std::uint32_t>(os, 16);
  io::write_le<std::uint16_t>(os, 1);
  io::write_le<std::uint16_t>(os, 1);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(audio.sample_rate));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(audio.sample_rate * 2));
  io::write_le<std::uint16_t>(os, 2);
  io::write_le<std::uint16_t>(os, 16);
  io::write_magic(os, "data");
  io::write_le<std::uint32_t>(os, data_bytes);
  for (double s : audio.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(std::clamp(c * 32768.0, -32768.0, 32767.0)));
    io::write_le<std::uint16_t>(os, static_cast<std::uint16_t>(q));
  }
}

}  // namespace duriano::dsp
