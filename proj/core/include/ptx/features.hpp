#pragma once

#include <span>
#include <string>
#include <vector>

namespace ptx {

/// Per-utterance sequence of fixed-dimension acoustic frames. Everything
/// downstream of feature extraction consumes this type only.
struct FeatureMatrix {
  std::string utterance_id;
  float frame_shift_ms = 10.0f;
  int dim = 0;
  int num_frames = 0;
  std::vector<float> data;  // num_frames * dim, row-major

  std::span<const float> frame(int t) const {
    return {data.data() + static_cast<std::size_t>(t) * dim, static_cast<std::size_t>(dim)};
  }
  float& at(int t, int d) { return data[static_cast<std::size_t>(t) * dim + d]; }
  float at(int t, int d) const { return data[static_cast<std::size_t>(t) * dim + d]; }

  bool same_content(const FeatureMatrix& other) const {
    return dim == other.dim && num_frames == other.num_frames &&
           frame_shift_ms == other.frame_shift_ms && data == other.data;
  }
};

struct FeatureConfig {
  int sample_rate_hz = 16000;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int num_mel_filters = 23;
  int num_cepstra = 13;
  double preemphasis = 0.97;
  bool append_deltas = true;
};

/// MFCC front end: pre-emphasis, Hamming window, magnitude FFT, mel
/// filterbank, log (floored at 1e-10), DCT-II; optional first-order deltas
/// computed by +/-2 frame regression, doubling dim.
FeatureMatrix compute_mfcc(std::span<const float> samples, const FeatureConfig& config,
                           const std::string& utterance_id = "");

/// Feature file, little-endian: magic "PTFT", u32 version=1, u32 dim, u32 T,
/// f32 frame_shift_ms, then T*dim f32 row-major. Round-trips bit-exactly.
void save_features(const FeatureMatrix& fm, const std::string& path);

/// utterance_id is taken from the file name stem unless overridden.
FeatureMatrix load_features(const std::string& path, const std::string& utterance_id = "");

FeatureConfig load_feature_config(const std::string& path);

}  // namespace ptx
