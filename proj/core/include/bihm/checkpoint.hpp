#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "bihm/model.hpp"

namespace bihm {

using Metadata = std::map<std::string, std::string>;

struct Checkpoint {
  BihmModel model;
  Metadata metadata;
};

// On-disk layout, all integers little-endian:
//
//   "BIHMMODL"                      8 bytes
//   version                         u32 (= 1)
//   L                               u32, number of latent layers
//   layer sizes                     (L + 1) x u32, visible first
//   metadata length                 u32, then that many bytes of UTF-8
//                                   "key=value\n" lines
//   parameters                      float64, in flatten_parameters() order
//
// Loading checks magic, version and the exact byte count implied by the
// header before allocating any parameter storage.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const BihmModel& model, const Metadata& metadata);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const BihmModel& model, const Metadata& metadata, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bihm
