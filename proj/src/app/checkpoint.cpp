// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/app/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

namespace geotag::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

void put_f32(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

double get_f32(const std::string& in, std::size_t at) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
  return static_cast<double>(std::bit_cast<float>(bits));
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

void save_checkpoint(const GeoModel& model, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CheckpointError("cannot create " + dir.string() + ": " + ec.message());

  std::string blob;
  json tensors = json::array();
  for (const auto* set : model.parameter_sets())
    for (const auto& p : *set) {
      tensors.push_back({{"name", p.name},
                         {"shape", p.value.shape()},
                         {"offset", blob.size()},
                         {"bytes", p.value.size() * 4}});
      for (double v : p.value.storage()) put_f32(blob, v);
    }

  json categories = json::array();
  for (const auto& c : model.spec().categories) categories.push_back(c.values());
  json prior_only = json::array();
  if (const auto* l = model.lcpn())
    for (const auto& lc : l->locals())
      if (lc.prior_only) prior_only.push_back(l->tree().node(lc.node).id);

  json manifest = {{"version", kFormatVersion},
                   {"config", model.config()},
                   {"schema", model.spec().schema},
                   {"vocab", "vocab.txt"},
                   {"vocab_size", model.spec().vocab->size()},
                   {"pois", "pois.json"},
                   {"tree", model.tree() ? json("tree.json") : json(nullptr)},
                   {"categories", categories},
                   {"prior_only", prior_only},
                   {"blob", kBlobFile},
                   {"blob_bytes", blob.size()},
                   {"tensors", tensors}};

  model.spec().vocab->save(dir / "vocab.txt");
  data::save_pois(dir / "pois.json", model.pois());
  if (model.tree()) write_file(dir / "tree.json", json(*model.tree()).dump(1) + "\n");
  write_file(dir / kBlobFile, blob);
  write_file(dir / kManifestFile, manifest.dump(1) + "\n");
}

GeoModel load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw CheckpointError("checkpoint directory " + dir.string() + " does not exist");
  json m;
  try {
    m = json::parse(read_file(dir / kManifestFile));
    if (m.at("version").get<int>() != kFormatVersion)
      throw CheckpointError("unsupported checkpoint version " + m.at("version").dump());

    RunConfig cfg = m.at("config").get<RunConfig>();
    fusion::ModelSpec spec;
    spec.schema = m.at("schema").get<fusion::FeatureSchema>();
    if (!(spec.schema == cfg.schema)) throw CheckpointError("manifest schema disagrees with its config");
    spec.encoder = cfg.encoder;
    spec.fusion = cfg.fusion;
    spec.time_minute = cfg.time_minute;
    spec.vocab = std::make_shared<const textenc::Vocab>(
        textenc::Vocab::load(dir / m.at("vocab").get<std::string>()));
    if (spec.vocab->size() != m.at("vocab_size").get<std::size_t>())
      throw CheckpointError("vocabulary has " + std::to_string(spec.vocab->size()) + " tokens, manifest says " +
                            m.at("vocab_size").dump());
    spec.encoder.vocab_size = spec.vocab->size();
    for (const auto& c : m.at("categories")) spec.categories.emplace_back(c.get<std::vector<std::string>>());
    auto pois = data::load_pois(dir / m.at("pois").get<std::string>());

    GeoModel model(cfg, std::move(pois), std::move(spec));

    if (!m.at("tree").is_null()) {
      const hierarchy::PoiTree saved =
          json::parse(read_file(dir / m.at("tree").get<std::string>())).get<hierarchy::PoiTree>();
      if (!model.tree() || !(saved == *model.tree())) throw CheckpointError("saved tree disagrees with the POI list");
    }
    if (auto* l = model.lcpn()) {
      std::set<std::string> flagged;
      for (const auto& id : m.at("prior_only")) flagged.insert(id.get<std::string>());
      for (auto& lc : l->locals()) lc.prior_only = flagged.count(l->tree().node(lc.node).id) > 0;
    }

    const std::string blob = read_file(dir / m.at("blob").get<std::string>());
    if (blob.size() != m.at("blob_bytes").get<std::size_t>())
      throw CheckpointError("parameter blob has " + std::to_string(blob.size()) + " bytes, manifest expects " +
                            m.at("blob_bytes").dump() + " (truncated?)");

    std::map<std::string, const json*> index;
    for (const auto& t : m.at("tensors")) {
      const std::string name = t.at("name").get<std::string>();
      const auto off = t.at("offset").get<std::size_t>();
      const auto bytes = t.at("bytes").get<std::size_t>();
      if (off + bytes > blob.size()) throw CheckpointError("tensor " + name + " lies beyond the end of the blob");
      if (!index.emplace(name, &t).second) throw CheckpointError("tensor " + name + " listed twice");
    }
    std::size_t used = 0;
    for (auto* set : model.parameter_sets())
      for (auto& p : *set) {
        auto it = index.find(p.name);
        if (it == index.end()) throw CheckpointError("tensor " + p.name + " missing from checkpoint");
        const json& t = *it->second;
        if (t.at("shape").get<numerics::Shape>() != p.value.shape())
          throw CheckpointError("tensor " + p.name + " has shape " + t.at("shape").dump() + ", model expects " +
                                json(p.value.shape()).dump());
        if (t.at("bytes").get<std::size_t>() != p.value.size() * 4)
          throw CheckpointError("tensor " + p.name + " byte count does not match its shape");
        const auto off = t.at("offset").get<std::size_t>();
        for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = get_f32(blob, off + 4 * i);
        ++used;
      }
    if (used != index.size())
      throw CheckpointError("checkpoint has " + std::to_string(index.size()) + " tensors, model uses " +
                            std::to_string(used));
    return model;
  } catch (const json::exception& e) {
    throw CheckpointError("malformed manifest in " + dir.string() + ": " + e.what());
  } catch (const data::DataError& e) {
    throw CheckpointError(e.what());
  }
}

}  // namespace geotag::app
