#pragma once

// Checkpoint container: little-endian binary with a fixed header
// (magic "GMCK", format version, H, d, C, init seed, raw prior scalars)
// followed by named float64 arrays. Round-trips are bit-exact.

#include <string>

#include "gemcl/train.hpp"

namespace gemcl {

void save_checkpoint(const std::string& path, const GemclModel& model);
GemclModel load_checkpoint(const std::string& path);

// FNV-1a 64 over a file's bytes, as a zero-padded hex string.
std::string file_hash_hex(const std::string& path);

}  // namespace gemcl
