#pragma once

#include <string>

#include "roic/trainer.hpp"

namespace roic {

/// Serializes the checkpoint to a single JSON document. Tensors are
/// stored as {"shape": [rows, cols], "values": [row-major...]}; doubles
/// use shortest round-trip formatting, so save -> load -> save is
/// byte-identical.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

/// Throws SchemaError on an unknown schema_version or malformed
/// document, IoError when the file cannot be read.
Checkpoint load_checkpoint(const std::string& path);

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

}  // namespace roic
