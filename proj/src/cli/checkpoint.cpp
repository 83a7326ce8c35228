#include "ptlab/cli/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace ptlab::cli {

namespace {

using nlohmann::json;
using nncore::ParamSet;
using nncore::Shape;
using nncore::Tensor;

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void put_f32(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<float>(bits);
}

std::string encode_container(const ParamSet& params, json manifest) {
  std::string payload;
  json tensors = json::array();
  for (const auto& [name, entry] : params.entries()) {
    const std::size_t offset = payload.size();
    for (float v : entry.value.data()) put_f32(payload, v);
    const std::size_t length = payload.size() - offset;
    tensors.push_back({{"name", name},
                       {"dtype", "f32"},
                       {"shape", entry.value.shape()},
                       {"offset", offset},
                       {"length", length},
                       {"fnv1a", hex64(fnv1a(payload.data() + offset, length))}});
  }
  manifest["tensors"] = std::move(tensors);
  manifest["payload_length"] = payload.size();
  std::string out(kCheckpointMagic);
  out += manifest.dump();
  out += '\n';
  out += payload;
  return out;
}

struct Container {
  json manifest;
  ParamSet params;
};

std::pair<json, std::size_t> split_manifest(const std::string& bytes) {
  if (bytes.compare(0, kCheckpointMagic.size(), kCheckpointMagic) != 0) {
    throw CheckpointError("not a PTLB1 container (bad magic)");
  }
  const std::size_t end = bytes.find('\n', kCheckpointMagic.size());
  if (end == std::string::npos) throw CheckpointError("truncated container: manifest not terminated");
  try {
    return {json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(kCheckpointMagic.size()),
                        bytes.begin() + static_cast<std::ptrdiff_t>(end)),
            end + 1};
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("unreadable manifest: ") + e.what());
  }
}

Container decode_container(const std::string& bytes, const char* expected_kind) {
  auto [manifest, start] = split_manifest(bytes);
  if (manifest.value("kind", std::string()) != expected_kind) {
    throw CheckpointError(std::string("container kind is not \"") + expected_kind + "\"");
  }
  const std::size_t payload_size = bytes.size() - start;
  try {
    if (manifest.at("payload_length").get<std::size_t>() != payload_size) {
      throw CheckpointError("payload length " + std::to_string(payload_size) + " differs from manifest " +
                            manifest.at("payload_length").dump());
    }
    Container c;
    std::size_t expected_offset = 0;
    for (const auto& t : manifest.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      if (t.at("dtype").get<std::string>() != "f32") throw CheckpointError("unsupported dtype for " + name);
      const auto shape = t.at("shape").get<Shape>();
      const auto offset = t.at("offset").get<std::size_t>();
      const auto length = t.at("length").get<std::size_t>();
      if (offset != expected_offset) throw CheckpointError("tensor " + name + " does not tile the payload");
      if (length != 4 * nncore::shape_numel(shape)) throw CheckpointError("tensor " + name + " length/shape mismatch");
      if (offset + length > payload_size) throw CheckpointError("truncated payload at tensor " + name);
      const char* p = bytes.data() + start + offset;
      if (hex64(fnv1a(p, length)) != t.at("fnv1a").get<std::string>()) {
        throw CheckpointError("checksum mismatch for tensor " + name);
      }
      std::vector<float> values(length / 4);
      for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_f32(p + 4 * i);
      c.params.add(name, Tensor(shape, std::move(values)), false);
      expected_offset = offset + length;
    }
    if (expected_offset != payload_size) throw CheckpointError("payload has trailing bytes");
    c.manifest = std::move(manifest);
    return c;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed manifest: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("cannot write " + path.string());
}

}  // namespace

std::string config_hash(const diffusion::ModelConfig& config) {
  const std::string text = config.to_json().dump();
  return hex64(fnv1a(text.data(), text.size()));
}

std::string encode_checkpoint(const diffusion::ModelBundle& bundle) {
  bundle.validate();
  json manifest = {{"kind", "model"},
                   {"format", 1},
                   {"config", bundle.config.to_json()},
                   {"config_hash", config_hash(bundle.config)},
                   {"vocabulary", bundle.vocab.to_json()}};
  return encode_container(bundle.params, std::move(manifest));
}

diffusion::ModelBundle decode_checkpoint(const std::string& bytes, std::ostream* warnings) {
  Container c = decode_container(bytes, "model");
  diffusion::ModelBundle b;
  try {
    b.config = diffusion::ModelConfig::from_json(c.manifest.at("config"));
    b.vocab = tokenizer::Vocabulary::from_json(c.manifest.at("vocabulary"));
    if (warnings && c.manifest.value("config_hash", std::string()) != config_hash(b.config)) {
      *warnings << "warning: checkpoint config hash does not match its config\n";
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed manifest: ") + e.what());
  }
  b.params = std::move(c.params);
  try {
    b.validate();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("inconsistent checkpoint: ") + e.what());
  }
  return b;
}

void save_checkpoint(const diffusion::ModelBundle& bundle, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(bundle));
}

diffusion::ModelBundle load_checkpoint(const std::filesystem::path& path, std::ostream* warnings) {
  return decode_checkpoint(read_file(path), warnings);
}

std::string encode_oracle(const eval::Oracle& oracle) {
  const auto& s = oracle.image_shape;
  json manifest = {{"kind", "oracle"},
                   {"format", 1},
                   {"categories", oracle.categories},
                   {"image_shape", {s.height, s.width, s.channels}},
                   {"held_out_accuracy", oracle.held_out_accuracy}};
  return encode_container(oracle.params, std::move(manifest));
}

eval::Oracle decode_oracle(const std::string& bytes) {
  Container c = decode_container(bytes, "oracle");
  eval::Oracle o;
  try {
    o.categories = c.manifest.at("categories").get<std::vector<std::string>>();
    const auto& s = c.manifest.at("image_shape");
    o.image_shape = {s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(), s.at(2).get<std::size_t>()};
    o.held_out_accuracy = c.manifest.at("held_out_accuracy").get<std::map<std::string, double>>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed oracle manifest: ") + e.what());
  }
  o.params = std::move(c.params);
  return o;
}

void save_oracle(const eval::Oracle& oracle, const std::filesystem::path& path) {
  write_file(path, encode_oracle(oracle));
}

eval::Oracle load_oracle(const std::filesystem::path& path) { return decode_oracle(read_file(path)); }

json read_manifest(const std::string& bytes) { return split_manifest(bytes).first; }

bool is_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string head(kCheckpointMagic.size(), '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  return in && head == kCheckpointMagic;
}

}  // namespace ptlab::cli
