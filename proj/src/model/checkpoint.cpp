#include "prokd/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "prokd/error.hpp"

namespace prokd::model {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {
constexpr const char* kMagic = "PROKD-CHECKPOINT v1";
}

void save_checkpoint(std::ostream& out, const NerModel& model, const corpus::LabelScheme& scheme) {
  const auto& cfg = model.config();
  nlohmann::json meta;
  meta["encoder"] = {{"embedding_dim", cfg.embedding_dim}, {"hidden_dim", cfg.hidden_dim},
                     {"window_radius", cfg.window_radius}, {"dropout", cfg.dropout},
                     {"freeze_embeddings", cfg.freeze_embeddings}, {"seed", cfg.seed},
                     {"num_tags", cfg.num_tags}};
  meta["entity_types"] = scheme.entity_types();
  meta["vocabulary"] = model.vocabulary().tokens();
  auto& params = meta["parameters"] = nlohmann::json::array();
  for (const auto* p : model.parameters()) params.push_back({{"name", p->name}, {"shape", p->value.shape()}});
  out << kMagic << '\n' << meta.dump() << '\n';
  for (const auto* p : model.parameters())
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  if (!out) throw Error("model", "checkpoint write failed");
}

void save_checkpoint_file(const std::string& path, const NerModel& model, const corpus::LabelScheme& scheme) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("model", "cannot write checkpoint " + path);
  save_checkpoint(out, model, scheme);
}

LoadedModel load_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw Error("model", "not a checkpoint (bad header line)");
  if (!std::getline(in, line)) throw Error("model", "truncated checkpoint metadata");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error("model", std::string("corrupt checkpoint metadata: ") + e.what());
  }
  EncoderConfig cfg;
  const auto& enc = meta.at("encoder");
  cfg.embedding_dim = enc.at("embedding_dim");
  cfg.hidden_dim = enc.at("hidden_dim");
  cfg.window_radius = enc.at("window_radius");
  cfg.dropout = enc.at("dropout");
  cfg.freeze_embeddings = enc.at("freeze_embeddings");
  cfg.seed = enc.at("seed");
  cfg.num_tags = enc.at("num_tags");
  Vocabulary vocab;
  for (const auto& t : meta.at("vocabulary")) vocab.add(t.get<std::string>());
  LoadedModel loaded{NerModel(cfg, std::move(vocab)),
                     corpus::LabelScheme(meta.at("entity_types").get<std::vector<std::string>>())};
  const auto& entries = meta.at("parameters");
  auto params = loaded.model.parameters();
  if (entries.size() != params.size()) throw Error("model", "checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (entries[i].at("name") != params[i]->name ||
        entries[i].at("shape").get<std::vector<std::size_t>>() != params[i]->value.shape())
      throw Error("model", "checkpoint parameter layout mismatch at " + params[i]->name);
    in.read(reinterpret_cast<char*>(params[i]->value.data()),
            static_cast<std::streamsize>(params[i]->value.size() * sizeof(double)));
    if (!in) throw Error("model", "truncated checkpoint data for " + params[i]->name);
  }
  return loaded;
}

LoadedModel load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("model", "cannot open checkpoint " + path);
  return load_checkpoint(in);
}

}  // namespace prokd::model
