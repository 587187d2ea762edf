#include "dagaf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "dagaf/errors.hpp"

namespace dagaf {

namespace {

using nlohmann::json;

constexpr const char* kSchema = "dagaf-checkpoint/1";

void writeDoublesLE(std::ofstream& out, const double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 8));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      char bytes[8];
      std::memcpy(bytes, &data[i], 8);
      std::reverse(bytes, bytes + 8);
      out.write(bytes, 8);
    }
  }
}

void readDoublesLE(std::ifstream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * 8));
  if (!in) throw IoError("checkpoint binary truncated");
  if constexpr (std::endian::native != std::endian::little) {
    for (std::size_t i = 0; i < count; ++i) {
      char bytes[8];
      std::memcpy(bytes, &data[i], 8);
      std::reverse(bytes, bytes + 8);
      std::memcpy(&data[i], bytes, 8);
    }
  }
}

}  // namespace

void saveCheckpoint(const std::string& prefix, const FcmModel& model, const Critic* critic,
                    const TrainConfig& cfg) {
  std::ofstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw IoError("cannot open '" + prefix + ".bin' for writing");

  json entries = json::array();
  std::size_t offset = 0;
  auto emit = [&](const Param& p) {
    entries.push_back({{"key", p.name},
                       {"rows", p.value.rows()},
                       {"cols", p.value.cols()},
                       {"offset", offset}});
    writeDoublesLE(bin, p.value.data(), p.value.size());
    offset += p.value.size();
  };
  for (const Param* p : model.allParams()) emit(*p);
  if (critic != nullptr)
    for (const Param* p : critic->params()) emit(*p);
  if (!bin) throw IoError("write failed for '" + prefix + ".bin'");
  bin.close();

  json manifest;
  manifest["schema"] = kSchema;
  manifest["assumption"] = toString(model.assumption());
  manifest["d"] = model.d();
  manifest["latent_h"] = model.latentH();
  manifest["first_layer_frozen"] = model.firstLayerFrozen();
  manifest["has_critic"] = critic != nullptr;
  manifest["config"] = configToMap(cfg);
  manifest["entries"] = std::move(entries);

  std::ofstream mf(prefix + ".json");
  if (!mf) throw IoError("cannot open '" + prefix + ".json' for writing");
  mf << manifest.dump(2) << '\n';
  if (!mf) throw IoError("write failed for '" + prefix + ".json'");
}

LoadedCheckpoint loadCheckpoint(const std::string& prefix) {
  const std::string manifestPath = prefix + ".json";
  std::ifstream mf(manifestPath);
  if (!mf) throw IoError("cannot open checkpoint manifest '" + manifestPath + "'");
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint manifest '" + manifestPath + "': " + e.what());
  }
  if (!manifest.contains("schema") || manifest["schema"] != kSchema)
    throw IoError("unsupported checkpoint schema in '" + manifestPath + "'");

  TrainConfig cfg;
  for (auto& [key, value] : manifest.at("config").items())
    applyConfigOverride(cfg, key, value.get<std::string>());

  const std::size_t d = manifest.at("d").get<std::size_t>();
  const std::size_t latentH = manifest.at("latent_h").get<std::size_t>();
  const Assumption assumption = assumptionFromString(manifest.at("assumption").get<std::string>());

  Rng initRng(cfg.seed);
  FcmModel model(d, latentH, assumption, initRng);
  std::optional<Critic> critic;
  if (manifest.value("has_critic", false)) critic.emplace(d, cfg.criticHidden, cfg.dropout, initRng);

  std::ifstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw IoError("cannot open '" + prefix + ".bin' for reading");

  std::vector<Param*> params;
  for (Param* p : model.allParams()) params.push_back(p);
  if (critic)
    for (Param* p : critic->params()) params.push_back(p);

  for (const auto& entry : manifest.at("entries")) {
    const std::string key = entry.at("key").get<std::string>();
    const std::size_t rows = entry.at("rows").get<std::size_t>();
    const std::size_t cols = entry.at("cols").get<std::size_t>();
    const std::size_t offset = entry.at("offset").get<std::size_t>();
    Param* target = nullptr;
    for (Param* p : params) {
      if (p->name == key) {
        target = p;
        break;
      }
    }
    if (target == nullptr)
      throw IoError("unknown checkpoint key '" + key + "' in '" + manifestPath + "'");
    if (target->value.rows() != rows || target->value.cols() != cols)
      throw IoError("shape mismatch for checkpoint key '" + key + "' in '" + manifestPath + "'");
    bin.seekg(static_cast<std::streamoff>(offset * 8));
    readDoublesLE(bin, target->value.data(), target->value.size());
  }

  if (manifest.value("first_layer_frozen", false)) model.freezeFirstLayer();
  return LoadedCheckpoint{std::move(model), std::move(critic), cfg};
}

}  // namespace dagaf
