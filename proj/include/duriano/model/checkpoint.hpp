#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "duriano/corpus/inventory.hpp"
#include "duriano/model/duriano.hpp"
#include "duriano/nn/optim.hpp"

namespace duriano::model {

struct ModelCheckpoint {
  std::unique_ptr<DurianoModel> model;
  corpus::Vocabulary singers;
  corpus::Vocabulary roles;
  std::uint64_t step = 0;
  // Raw archive, kept so optimizer state can be restored on resume.
  nn::TensorArchive archive;

  bool has_optimizer_state() const;
};

// Parameters, batch-norm buffers and (optionally) Adam moments. The metadata
// string holds the model configuration, identity vocabularies and step.
void save_checkpoint(const std::filesystem::path& path, const DurianoModel& model, const corpus::Vocabulary& singers,
                     const corpus::Vocabulary& roles, std::uint64_t step, const nn::Adam* optimizer = nullptr);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace duriano::model
