#pragma once

#include <string>
#include <utility>
#include <vector>

#include "slu/error.hpp"
#include "slu/params.hpp"
#include "slu/tensor.hpp"

namespace slu {

// On disk: 8-byte magic, u64-le manifest length, JSON manifest, then the raw
// little-endian float32 blob with tensors concatenated in manifest order.
// The manifest holds tensor names/shapes/offsets and a free-form metadata
// object (hyperparameters, seed, vocab hash). Load-then-save is
// byte-identical: the manifest is re-serialized canonically (sorted keys).

enum class CheckpointErrorKind {
  BadMagic,
  BadManifest,
  Truncated,
  BlobSizeMismatch,
  ShapeMismatch,
  VocabHashMismatch,
};

class CheckpointError : public Error {
 public:
  CheckpointError(CheckpointErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  CheckpointErrorKind kind() const { return kind_; }

 private:
  CheckpointErrorKind kind_;
};

struct Checkpoint {
  std::string meta_json;  // canonical JSON object text
  std::vector<std::pair<std::string, Tensor>> tensors;

  // metadata accessors (throw CheckpointError on missing/mistyped keys)
  std::string meta_string(const std::string& key) const;
  double meta_number(const std::string& key) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Guard used by model loaders: the checkpoint must have been written for
// exactly this vocabulary.
void verify_vocab_hash(const Checkpoint& ckpt, uint64_t expected);

std::string hash_hex(uint64_t h);

// ParamStore bridging. `load_into` requires identical names, shapes and
// order (models recreate their stores structurally before loading values).
Checkpoint to_checkpoint(const ParamStore& ps, std::string meta_json);
void load_into(ParamStore& ps, const Checkpoint& ckpt);

}  // namespace slu
