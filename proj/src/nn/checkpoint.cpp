#include "duriano/nn/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "duriano/util/binary_io.hpp"
#include "duriano/util/error.hpp"

namespace duriano::nn {

const Tensor* TensorArchive::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.tensor;
  return nullptr;
}

const Tensor& TensorArchive::at(const std::string& name) const {
  const Tensor* t = find(name);
  if (!t) throw InputError("checkpoint has no tensor '" + name + "'");
  return *t;
}

void write_archive(std::ostream& os, const TensorArchive& archive) {
  io::write_magic(os, "DIAN");
  io::write_le<std::uint32_t>(os, kArchiveVersion);
  io::write_string(os, archive.meta);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(archive.tensors.size()));
  for (const auto& t : archive.tensors) {
    io::write_string(os, t.name);
    io::write_le<std::uint64_t>(os, t.tensor.rows());
    io::write_le<std::uint64_t>(os, t.tensor.cols());
  }
  for (const auto& t : archive.tensors)
    for (double v : t.tensor.values()) io::write_f32(os, static_cast<float>(v));
}

TensorArchive read_archive(std::istream& is, const std::string& origin) {
  io::expect_magic(is, "DIAN", origin);
  const auto version = io::read_le<std::uint32_t>(is);
  if (version != kArchiveVersion)
    throw InputError(origin + ": unsupported checkpoint version " + std::to_string(version));
  TensorArchive archive;
  archive.meta = io::read_string(is);
  const auto count = io::read_le<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = io::read_string(is);
    const auto rows = io::read_le<std::uint64_t>(is);
    const auto cols = io::read_le<std::uint64_t>(is);
    if (rows * cols > (std::uint64_t{1} << 32)) throw InputError(origin + ": implausible tensor shape for " + t.name);
    t.tensor = Tensor(rows, cols);
    archive.tensors.push_back(std::move(t));
  }
  for (auto& t : archive.tensors)
    for (double& v : t.tensor.values()) v = io::read_f32(is);
  return archive;
}

void save_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw InputError("cannot write " + tmp);
    write_archive(os, archive);
    if (!os) throw InputError("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

TensorArchive load_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open checkpoint " + path.string());
  try {
    return read_archive(is, path.string());
  } catch (const InputError& e) {
    const std::string msg = e.what();
    if (msg.find(path.string()) != std::string::npos) throw;
    throw InputError(path.string() + ": " + msg);
  }
}

}  // namespace duriano::nn
