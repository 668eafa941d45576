#include "scada/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scada/error.hpp"

namespace scada {

using nlohmann::json;

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::SourceOnly:
      return "source_only";
    case Provenance::Adapted:
      return "adapted";
    case Provenance::Unlearned:
      return "unlearned";
  }
  return "unknown";
}

namespace {

Provenance provenance_from_string(const std::string& s) {
  if (s == "source_only") return Provenance::SourceOnly;
  if (s == "adapted") return Provenance::Adapted;
  if (s == "unlearned") return Provenance::Unlearned;
  throw InvalidArgument("unknown provenance '" + s + "'");
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const auto& m = ckpt.model;
  json j;
  j["format"] = "scada-checkpoint";
  j["version"] = kCheckpointFormatVersion;
  j["architecture"] = {{"layers", m.architecture().layers}, {"activation", to_string(m.architecture().activation)}};
  j["num_classes"] = m.num_classes();
  j["parameters"] = std::vector<double>(m.parameters().data(), m.parameters().data() + m.parameters().size());
  j["meta"] = {{"label_space", {{"num_classes", m.num_classes()}, {"forget_classes", ckpt.meta.forget_classes}}},
               {"provenance", to_string(ckpt.meta.provenance)},
               {"seed", ckpt.meta.seed},
               {"config_hash", ckpt.meta.config_hash}};
  return j.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "scada-checkpoint") throw InvalidArgument("not a scada checkpoint");
  const int version = j.value("version", 0);
  if (version != kCheckpointFormatVersion)
    throw InvalidArgument("unsupported checkpoint version " + std::to_string(version));
  try {
    Architecture arch;
    arch.layers = j.at("architecture").at("layers").get<std::vector<int>>();
    arch.activation = activation_from_string(j.at("architecture").at("activation").get<std::string>());
    const auto values = j.at("parameters").get<std::vector<double>>();
    Vector params = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    Classifier model(arch, j.at("num_classes").get<int>(), std::move(params));
    CheckpointMeta meta;
    const auto& jm = j.at("meta");
    meta.forget_classes = jm.at("label_space").at("forget_classes").get<std::vector<int>>();
    meta.provenance = provenance_from_string(jm.at("provenance").get<std::string>());
    meta.seed = jm.at("seed").get<std::uint64_t>();
    meta.config_hash = jm.at("config_hash").get<std::string>();
    return {std::move(model), std::move(meta)};
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << checkpoint_to_json(ckpt) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace scada
