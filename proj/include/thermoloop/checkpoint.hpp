// SPDX-License-Identifier: Apache-2.0
#pragma once

// Text checkpoint of a trained predictor. Layout is in docs/checkpoint.md.

#include <filesystem>
#include <string>

#include "thermoloop/normalization.hpp"
#include "thermoloop/pigru.hpp"

namespace thermoloop {

struct Checkpoint {
  pigru::ModelDims dims;
  Normalization normalization;
  pigru::ModelParams params;

  bool operator==(const Checkpoint&) const = default;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace thermoloop
