#include "duriano/model/checkpoint.hpp"

#include "duriano/util/error.hpp"
#include "duriano/util/key_value.hpp"

namespace duriano::model {

bool ModelCheckpoint::has_optimizer_state() const {
  for (const auto& t : archive.tensors)
    if (t.name.rfind("adam.", 0) == 0) return true;
  return false;
}

void save_checkpoint(const std::filesystem::path& path, const DurianoModel& model, const corpus::Vocabulary& singers,
                     const corpus::Vocabulary& roles, std::uint64_t step, const nn::Adam* optimizer) {
  KeyValueConfig meta;
  model.config().write(meta);
  meta.set("singers", singers.join());
  meta.set("roles", roles.join());
  meta.set("step", std::to_string(step));
  nn::TensorArchive archive;
  archive.meta = meta.dump();
  for (const auto& p : model.params().parameters()) archive.tensors.push_back({p.name, p.var.value()});
  for (const auto& b : model.params().buffers()) archive.tensors.push_back({b.name, *b.tensor});
  if (optimizer) optimizer->export_state(archive);
  nn::save_archive(path, archive);
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  ModelCheckpoint ck;
  ck.archive = nn::load_archive(path);
  const auto meta = KeyValueConfig::parse(ck.archive.meta, path.string());
  ck.singers = corpus::Vocabulary::parse(meta.get("singers", ""));
  ck.roles = corpus::Vocabulary::parse(meta.get("roles", ""));
  ck.step = static_cast<std::uint64_t>(meta.get_int("step", 0));
  ck.model = std::make_unique<DurianoModel>(ModelConfig::read(meta), 0);
  for (const auto& p : ck.model->params().parameters()) {
    const nn::Tensor& t = ck.archive.at(p.name);
    if (!t.same_shape(p.var.value()))
      throw InputError(path.string() + ": tensor " + p.name + " has shape " + t.shape_string() + ", model expects " +
                       p.var.value().shape_string());
    nn::Var v = p.var;
    v.value() = t;
  }
  for (const auto& b : ck.model->params().buffers()) {
    const nn::Tensor& t = ck.archive.at(b.name);
    if (!t.same_shape(*b.tensor)) throw InputError(path.string() + ": buffer " + b.name + " has the wrong shape");
    *b.tensor = t;
  }
  return ck;
}

}  // namespace duriano::model
