#pragma once

#include <string>

#include "gemcl/mfcc.hpp"

namespace gemcl {

// Reads a mono 16-bit PCM WAV file and normalizes samples to [-1, 1].
// Rates other than target_rate are rejected unless allow_resample is set,
// in which case the signal is linearly resampled.
Waveform read_audio(const std::string& path, bool allow_resample = false,
                    int target_rate = 16000);

// Writes samples (clamped to [-1, 1]) as mono 16-bit PCM.
void write_wav(const std::string& path, const Waveform& wave);

}  // namespace gemcl
