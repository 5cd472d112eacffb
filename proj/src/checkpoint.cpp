#include <bit>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "migdir/errors.hpp"
#include "migdir/model.hpp"

// Checkpoint layout: JSON header, NUL, raw little-endian float64 parameters
// (weights then bias, in layer order).

static_assert(std::endian::native == std::endian::little,
              "checkpoint blob is written in host byte order");

namespace migdir {
namespace {

nlohmann::json layer_to_json(const LayerSpec& spec) {
  if (const auto* conv = std::get_if<ConvSpec>(&spec)) {
    return {{"type", "conv"},
            {"kh", conv->kh},
            {"kw", conv->kw},
            {"out_channels", conv->out_channels}};
  }
  if (std::holds_alternative<PoolSpec>(spec)) return {{"type", "pool"}};
  if (std::holds_alternative<FlattenSpec>(spec)) return {{"type", "flatten"}};
  return {{"type", "dense"}, {"units", std::get<DenseSpec>(spec).units}};
}

LayerSpec layer_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "conv") {
    return ConvSpec{j.at("kh").get<int>(), j.at("kw").get<int>(),
                    j.at("out_channels").get<int>()};
  }
  if (type == "pool") return PoolSpec{};
  if (type == "flatten") return FlattenSpec{};
  if (type == "dense") return DenseSpec{j.at("units").get<int>()};
  throw ConfigError("unknown layer type: " + type);
}

}  // namespace

void save_model(const Model& m, const std::string& path) {
  nlohmann::json j;
  j["version"] = 1;
  j["input_size"] = m.input_size;
  j["head_arity"] = m.head_arity;
  j["head_activation"] = to_string(m.head_activation);
  j["init_seed"] = m.init_seed;
  j["layers"] = nlohmann::json::array();
  for (const LayerSpec& spec : m.layers) {
    j["layers"].push_back(layer_to_json(spec));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  const std::string header = j.dump();
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  f.put('\0');
  for (const LayerParams& p : m.params) {
    f.write(reinterpret_cast<const char*>(p.w.data.data()),
            static_cast<std::streamsize>(p.w.data.size() * sizeof(double)));
    f.write(reinterpret_cast<const char*>(p.b.data.data()),
            static_cast<std::streamsize>(p.b.data.size() * sizeof(double)));
  }
  f.flush();
  if (!f) throw std::runtime_error("write failed: " + path);
}

Model load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError(path + ": cannot open");

  std::string header;
  if (!std::getline(f, header, '\0')) {
    throw ParseError(path + ": missing NUL-terminated header");
  }

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": bad checkpoint header: " + e.what());
  }

  Model m;
  try {
    if (j.at("version").get<int>() != 1) {
      throw ConfigError("unsupported checkpoint version");
    }
    std::vector<LayerSpec> layers;
    for (const nlohmann::json& lj : j.at("layers")) {
      layers.push_back(layer_from_json(lj));
    }
    m = build_model(j.at("input_size").get<int>(), std::move(layers),
                    j.at("head_arity").get<int>(),
                    activation_from_string(
                        j.at("head_activation").get<std::string>()),
                    j.at("init_seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": bad checkpoint header: " + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(path + ": " + e.what());
  }

  for (LayerParams& p : m.params) {
    for (Tensor* t : {&p.w, &p.b}) {
      if (t->data.empty()) continue;
      f.read(reinterpret_cast<char*>(t->data.data()),
             static_cast<std::streamsize>(t->data.size() * sizeof(double)));
      if (!f) {
        throw ParseError(path + ": parameter blob truncated (have " +
                         std::to_string(f.gcount()) + " of " +
                         std::to_string(t->data.size() * sizeof(double)) +
                         " bytes for a tensor)");
      }
    }
  }
  if (f.peek() != std::char_traits<char>::eof()) {
    throw ParseError(path + ": trailing bytes after parameter blob");
  }
  return m;
}

}  // namespace migdir
