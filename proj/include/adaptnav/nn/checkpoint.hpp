#pragma once

#include <json.hpp>
#include <string>

#include "adaptnav/nn/params.hpp"

namespace adaptnav::nn {

// Checkpoint container: magic "ANCK", u64-LE manifest length, JSON manifest
// (tensor names -> shape/dtype/offset, plus a free-form "meta" object), then
// one f32 little-endian blob holding all tensors in manifest order.
// save(load(file)) reproduces the file byte for byte.
void save_checkpoint(const std::string& path, const ParamStore& store,
                     const nlohmann::json& meta);

// Loads tensors into `store`: existing names are shape-checked and
// overwritten (moments and gradients reset), new names are created.
// Returns the manifest's meta object.
nlohmann::json load_checkpoint(const std::string& path, ParamStore& store);

// Reads just the meta object without touching any tensor data.
nlohmann::json read_checkpoint_meta(const std::string& path);

}  // namespace adaptnav::nn
