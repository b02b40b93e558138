#pragma once

#include <string>
#include <vector>

namespace ptx {

struct WavData {
  int sample_rate_hz = 0;
  std::vector<float> samples;  // mono, in [-1, 1]
};

/// Reads mono RIFF/WAVE files with 16-bit PCM or 32-bit float samples.
WavData load_wav(const std::string& path);

/// 16-bit PCM writer, used by tests and the synthetic generator.
void save_wav(const std::string& path, const std::vector<float>& samples, int sample_rate_hz);

}  // namespace ptx
