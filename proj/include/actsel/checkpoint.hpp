#pragma once

#include <cstdint>
#include <string>

#include "actsel/loops.hpp"

namespace actsel::checkpoint {

// Flat binary dump: 8-byte magic, u32 version, u64 spec digest, then the
// serialized specs and parameter blobs (f64, host order).
inline constexpr char kMagic[8] = {'A', 'C', 'T', 'S', 'E', 'L', 'C', 'K'};
inline constexpr std::uint32_t kVersion = 1;

std::uint64_t spec_digest(const nn::ModelSpec& spec);

void save_model(const loops::Model& model, const std::string& path);
loops::Model load_model(const std::string& path);

}  // namespace actsel::checkpoint
