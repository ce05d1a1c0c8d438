#include "vitreg/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "vitreg/config_json.hpp"
#include "vitreg/error.hpp"

namespace vitreg {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'V', 'I', 'T', 'R', 'G', 'C', 'K', '1'};

void put_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t float_bits(float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  return u;
}

float bits_float(std::uint32_t u) {
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

}  // namespace

void save_checkpoint(const VitWeights& weights, const std::filesystem::path& path, const json& meta) {
  weights.validate();
  const ParameterLayout layout = weights.layout();
  json tensors = json::array();
  for (const TensorSpec& s : layout.tensors()) tensors.push_back({{"name", s.name}, {"shape", {s.rows, s.cols}}});
  const json header{{"format_version", kCheckpointFormatVersion},
                    {"config", to_json(weights.config)},
                    {"tensors", tensors},
                    {"meta", meta}};
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::kIo, "cannot write checkpoint '" + path.string() + "'");
  out.write(kMagic, sizeof(kMagic));
  put_u64_le(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  std::vector<unsigned char> payload(weights.values.size() * 4);
  for (std::size_t i = 0; i < weights.values.size(); ++i) {
    const std::uint32_t u = float_bits(weights.values[i]);
    for (int k = 0; k < 4; ++k) payload[4 * i + k] = static_cast<unsigned char>(u >> (8 * k));
  }
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  out.flush();
  require(out.good(), ErrorKind::kIo, "failed writing checkpoint '" + path.string() + "'");
}

namespace {

struct RawCheckpoint {
  json header;
  std::vector<unsigned char> payload;
};

RawCheckpoint read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kCheckpoint, "cannot open checkpoint '" + path.string() + "'");
  const std::string where = "checkpoint '" + path.string() + "'";

  char magic[8];
  in.read(magic, 8);
  require(in.gcount() == 8 && std::memcmp(magic, kMagic, 8) == 0, ErrorKind::kCheckpoint,
          where + " has no valid magic header");
  unsigned char len_bytes[8];
  in.read(reinterpret_cast<char*>(len_bytes), 8);
  require(in.gcount() == 8, ErrorKind::kCheckpoint, where + " is truncated in the header length");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(len_bytes[i]) << (8 * i);

  const auto file_size = std::filesystem::file_size(path);
  require(len <= file_size, ErrorKind::kCheckpoint, where + " is truncated in the JSON header");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  require(static_cast<std::uint64_t>(in.gcount()) == len, ErrorKind::kCheckpoint,
          where + " is truncated in the JSON header");

  RawCheckpoint raw;
  raw.header = json::parse(text, nullptr, false);
  require(!raw.header.is_discarded() && raw.header.is_object(), ErrorKind::kCheckpoint,
          where + " has a malformed JSON header");
  require(raw.header.value("format_version", -1) == kCheckpointFormatVersion, ErrorKind::kCheckpoint,
          where + " has unsupported format_version");
  require(raw.header.contains("config") && raw.header.contains("tensors") && raw.header["tensors"].is_array(),
          ErrorKind::kCheckpoint, where + " header lacks config or tensors");

  raw.payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return raw;
}

VitWeights decode(const RawCheckpoint& raw, const VitConfig& config, const std::string& where) {
  const ParameterLayout layout(config);
  const json& tensors = raw.header["tensors"];
  const auto& expected = layout.tensors();
  for (std::size_t i = 0; i < std::max(expected.size(), tensors.size()); ++i) {
    if (i >= tensors.size()) {
      fail(ErrorKind::kCheckpoint, where + " is missing tensor '" + expected[i].name + "'");
    }
    const json& t = tensors[i];
    const std::string name = t.value("name", std::string("<unnamed>"));
    if (i >= expected.size()) fail(ErrorKind::kCheckpoint, where + " has unexpected tensor '" + name + "'");
    const TensorSpec& s = expected[i];
    const json shape = t.value("shape", json::array());
    const bool same = name == s.name && shape.is_array() && shape.size() == 2 && shape[0].is_number_integer() &&
                      shape[1].is_number_integer() && shape[0].get<int>() == s.rows && shape[1].get<int>() == s.cols;
    if (!same) {
      fail(ErrorKind::kCheckpoint, where + ": tensor '" + s.name + "' mismatch: checkpoint has '" + name + "' " +
                                       shape.dump() + ", expected [" + std::to_string(s.rows) + "," +
                                       std::to_string(s.cols) + "]");
    }
  }
  const std::size_t bytes = layout.total_size() * 4;
  require(raw.payload.size() >= bytes, ErrorKind::kCheckpoint, where + " is truncated in the tensor payload");
  require(raw.payload.size() == bytes, ErrorKind::kCheckpoint, where + " has trailing bytes after the payload");

  VitWeights w{config, std::vector<float>(layout.total_size())};
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    std::uint32_t u = 0;
    for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(raw.payload[4 * i + k]) << (8 * k);
    w.values[i] = bits_float(u);
  }
  return w;
}

}  // namespace

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const RawCheckpoint raw = read_raw(path);
  const std::string where = "checkpoint '" + path.string() + "'";
  VitConfig config;
  try {
    config = vit_config_from_json(raw.header["config"]);
  } catch (const Error& e) {
    fail(ErrorKind::kCheckpoint, where + " has an invalid config: " + e.what());
  }
  return {decode(raw, config, where), raw.header.value("meta", json::object())};
}

VitWeights load_weights(const VitConfig& config, const std::filesystem::path& path) {
  const RawCheckpoint raw = read_raw(path);
  const std::string where = "checkpoint '" + path.string() + "'";
  VitWeights w = decode(raw, config, where);
  VitConfig stored;
  try {
    stored = vit_config_from_json(raw.header["config"]);
  } catch (const Error& e) {
    fail(ErrorKind::kCheckpoint, where + " has an invalid config: " + e.what());
  }
  require(stored == config, ErrorKind::kCheckpoint,
          where + " config " + to_json(stored).dump() + " differs from requested " + to_json(config).dump());
  return w;
}

}  // namespace vitreg
