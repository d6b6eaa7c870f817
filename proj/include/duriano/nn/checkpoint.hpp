#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "duriano/nn/tensor.hpp"

namespace duriano::nn {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Named-tensor container: magic "DIAN", version, metadata string, name and
// shape table, then little-endian float32 payload in table order.
struct TensorArchive {
  std::string meta;
  std::vector<NamedTensor> tensors;

  const Tensor* find(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
};

inline constexpr std::uint32_t kArchiveVersion = 1;

void write_archive(std::ostream& os, const TensorArchive& archive);
TensorArchive read_archive(std::istream& is, const std::string& origin);
void save_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive load_archive(const std::filesystem::path& path);

}  // namespace duriano::nn
