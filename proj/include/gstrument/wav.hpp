#pragma once

#include <filesystem>

#include "gstrument/signal.hpp"

namespace gstrument {

/// Reads a RIFF/WAVE file holding 16-bit signed PCM, mono. Anything else
/// (other encodings, multi-channel, truncated or malformed headers) raises
/// IoError with the reason.
signal::Waveform read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono. Samples are clamped to [-1, 1] before
/// quantization; the file appears atomically.
void write_wav(const std::filesystem::path& path, const signal::Waveform& w);

}  // namespace gstrument
