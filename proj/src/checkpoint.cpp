#include "slu/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace slu {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'L', 'U', 'C', 'K', 'P', 'T', '1'};

[[noreturn]] void ckfail(CheckpointErrorKind kind, const std::string& msg) {
  throw CheckpointError(kind, "checkpoint: " + msg);
}

void put_u64_le(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_u64_le(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_f32_le(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32_le(const unsigned char* p) {
  uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<uint32_t>(p[i]) << (8 * i);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

json parse_meta(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    ckfail(CheckpointErrorKind::BadManifest, "metadata is not a JSON object");
  }
  return j;
}

}  // namespace

std::string Checkpoint::meta_string(const std::string& key) const {
  json j = parse_meta(meta_json);
  if (!j.contains(key) || !j[key].is_string()) {
    ckfail(CheckpointErrorKind::BadManifest, "missing string metadata key '" + key + "'");
  }
  return j[key].get<std::string>();
}

double Checkpoint::meta_number(const std::string& key) const {
  json j = parse_meta(meta_json);
  if (!j.contains(key) || !j[key].is_number()) {
    ckfail(CheckpointErrorKind::BadManifest, "missing numeric metadata key '" + key + "'");
  }
  return j[key].get<double>();
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json manifest;
  manifest["format"] = 1;
  manifest["meta"] = parse_meta(ckpt.meta_json);
  json tensors = json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    json entry;
    entry["name"] = name;
    entry["shape"] = t.shape;
    entry["offset"] = offset;
    entry["count"] = t.size();
    tensors.push_back(entry);
    offset += t.size() * 4;
  }
  manifest["tensors"] = tensors;
  std::string mtext = manifest.dump();

  std::string out;
  out.append(kMagic, 8);
  put_u64_le(out, mtext.size());
  out += mtext;
  for (const auto& [name, t] : ckpt.tensors) {
    (void)name;
    for (float f : t.data) put_f32_le(out, f);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), "checkpoint: cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  require(f.good(), "checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "checkpoint: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (bytes.size() < 16) ckfail(CheckpointErrorKind::Truncated, "file shorter than header");
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) {
    ckfail(CheckpointErrorKind::BadMagic, "bad magic in " + path);
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  uint64_t mlen = get_u64_le(p + 8);
  if (bytes.size() < 16 + mlen) ckfail(CheckpointErrorKind::Truncated, "manifest extends past end of file");
  json manifest = json::parse(bytes.substr(16, mlen), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object() || !manifest.contains("tensors") ||
      !manifest["tensors"].is_array() || !manifest.contains("meta")) {
    ckfail(CheckpointErrorKind::BadManifest, "malformed manifest in " + path);
  }

  size_t blob_start = 16 + mlen;
  size_t blob_size = bytes.size() - blob_start;

  Checkpoint ckpt;
  ckpt.meta_json = manifest["meta"].dump();
  uint64_t expected = 0;
  for (const auto& entry : manifest["tensors"]) {
    if (!entry.contains("name") || !entry.contains("shape") || !entry.contains("offset") ||
        !entry.contains("count")) {
      ckfail(CheckpointErrorKind::BadManifest, "tensor entry missing fields");
    }
    std::string name = entry["name"].get<std::string>();
    std::vector<int> shape = entry["shape"].get<std::vector<int>>();
    uint64_t offset = entry["offset"].get<uint64_t>();
    uint64_t count = entry["count"].get<uint64_t>();
    if (Tensor::numel(shape) != count) {
      ckfail(CheckpointErrorKind::ShapeMismatch,
             "tensor '" + name + "' shape " + shape_str(shape) + " does not match count " +
                 std::to_string(count));
    }
    if (offset != expected) {
      ckfail(CheckpointErrorKind::BlobSizeMismatch, "tensor '" + name + "' offset out of order");
    }
    expected = offset + count * 4;
    if (expected > blob_size) {
      ckfail(CheckpointErrorKind::Truncated, "tensor '" + name + "' extends past end of blob");
    }
    Tensor t = Tensor::zeros(shape);
    const unsigned char* src = p + blob_start + offset;
    for (size_t i = 0; i < t.size(); ++i) t.data[i] = get_f32_le(src + i * 4);
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (expected != blob_size) {
    ckfail(CheckpointErrorKind::BlobSizeMismatch,
           "blob has " + std::to_string(blob_size) + " bytes, manifest declares " + std::to_string(expected));
  }
  return ckpt;
}

void verify_vocab_hash(const Checkpoint& ckpt, uint64_t expected) {
  std::string stored = ckpt.meta_string("vocab_hash");
  if (stored != hash_hex(expected)) {
    ckfail(CheckpointErrorKind::VocabHashMismatch,
           "vocabulary hash mismatch (checkpoint " + stored + ", supplied " + hash_hex(expected) + ")");
  }
}

std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

Checkpoint to_checkpoint(const ParamStore& ps, std::string meta_json) {
  Checkpoint ckpt;
  ckpt.meta_json = std::move(meta_json);
  for (int i = 0; i < ps.size(); ++i) {
    ckpt.tensors.emplace_back(ps.name(i), ps.value(i));
  }
  return ckpt;
}

void load_into(ParamStore& ps, const Checkpoint& ckpt) {
  if (static_cast<int>(ckpt.tensors.size()) != ps.size()) {
    ckfail(CheckpointErrorKind::BadManifest,
           "expected " + std::to_string(ps.size()) + " tensors, found " + std::to_string(ckpt.tensors.size()));
  }
  for (int i = 0; i < ps.size(); ++i) {
    const auto& [name, t] = ckpt.tensors[i];
    if (name != ps.name(i)) {
      ckfail(CheckpointErrorKind::BadManifest, "tensor order mismatch at '" + name + "'");
    }
    if (t.shape != ps.value(i).shape) {
      ckfail(CheckpointErrorKind::ShapeMismatch, "tensor '" + name + "' has shape " + shape_str(t.shape) +
                                                     ", expected " + shape_str(ps.value(i).shape));
    }
    ps.value(i) = t;
  }
}

}  // namespace slu
