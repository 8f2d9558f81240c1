#pragma once

#include "maverick/tensor.hpp"

#include <iosfwd>
#include <string>

namespace maverick {

// Binary checkpoint format, little-endian throughout:
//   magic "MVRK", version byte 1,
//   one record per parameter in name order:
//     u32 name length, name bytes, u32 rank, u32 dims[rank], f32 payload
//     (row-major),
//   u32 0 sentinel (parameter names are never empty),
//   u32 config length, UTF-8 JSON config.
struct Checkpoint {
  ModelParams<float> params;
  std::string config_json;
};

void save_checkpoint(std::ostream& out, const ModelParams<float>& params,
                     const std::string& config_json);
void save_checkpoint_file(const std::string& path, const ModelParams<float>& params,
                          const std::string& config_json);

Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint_file(const std::string& path);

}  // namespace maverick
