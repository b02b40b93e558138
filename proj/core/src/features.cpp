#include "ptx/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "ptx/util.hpp"

namespace ptx {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLogFloor = 1e-10;

void validate(const FeatureConfig& c) {
  if (c.sample_rate_hz <= 0) throw Error("feature config: sample_rate_hz must be positive");
  if (!(c.frame_length_ms > 0.0) || !(c.frame_shift_ms > 0.0)) {
    throw Error("feature config: frame length and shift must be positive");
  }
  if (c.frame_shift_ms > c.frame_length_ms) {
    throw Error("feature config: frame_shift_ms must not exceed frame_length_ms");
  }
  if (c.num_mel_filters <= 0 || c.num_cepstra <= 0) {
    throw Error("feature config: filter and cepstra counts must be positive");
  }
  if (c.num_cepstra > c.num_mel_filters) {
    throw Error("feature config: num_cepstra must not exceed num_mel_filters");
  }
}

// In-place iterative radix-2 FFT; n must be a power of two.
void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank over magnitude-spectrum bins 0..nfft/2.
std::vector<std::vector<std::pair<int, double>>> mel_filterbank(int num_filters, int nfft,
                                                                int sample_rate_hz) {
  const int num_bins = nfft / 2 + 1;
  const double nyquist = sample_rate_hz / 2.0;
  const double mel_max = hz_to_mel(nyquist);
  std::vector<double> edges_hz(static_cast<std::size_t>(num_filters) + 2);
  for (int m = 0; m < num_filters + 2; ++m) {
    edges_hz[m] = mel_to_hz(mel_max * m / (num_filters + 1));
  }
  std::vector<std::vector<std::pair<int, double>>> filters(num_filters);
  for (int m = 0; m < num_filters; ++m) {
    const double lo = edges_hz[m], mid = edges_hz[m + 1], hi = edges_hz[m + 2];
    for (int k = 0; k < num_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / nfft;
      double w = 0.0;
      if (f > lo && f < mid) {
        w = (f - lo) / (mid - lo);
      } else if (f >= mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      if (w > 0.0) filters[m].push_back({k, w});
    }
  }
  return filters;
}

}  // namespace

FeatureMatrix compute_mfcc(std::span<const float> samples, const FeatureConfig& config,
                           const std::string& utterance_id) {
  validate(config);
  const int frame_len =
      static_cast<int>(std::lround(config.frame_length_ms * config.sample_rate_hz / 1000.0));
  const int frame_shift =
      static_cast<int>(std::lround(config.frame_shift_ms * config.sample_rate_hz / 1000.0));
  if (frame_len <= 1 || frame_shift < 1) throw Error("feature config: frame too short in samples");
  if (samples.size() < static_cast<std::size_t>(frame_len)) {
    throw Error(strprintf("compute_mfcc: need at least %d samples for one frame, got %zu",
                          frame_len, samples.size()));
  }
  const int num_frames =
      static_cast<int>((samples.size() - static_cast<std::size_t>(frame_len)) / frame_shift) + 1;

  int nfft = 1;
  while (nfft < frame_len) nfft <<= 1;

  std::vector<double> window(static_cast<std::size_t>(frame_len));
  for (int i = 0; i < frame_len; ++i) {
    window[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (frame_len - 1));
  }
  const auto filters = mel_filterbank(config.num_mel_filters, nfft, config.sample_rate_hz);

  const int ncep = config.num_cepstra;
  const int nmel = config.num_mel_filters;
  FeatureMatrix fm;
  fm.utterance_id = utterance_id;
  fm.frame_shift_ms = static_cast<float>(config.frame_shift_ms);
  fm.dim = config.append_deltas ? 2 * ncep : ncep;
  fm.num_frames = num_frames;
  fm.data.assign(static_cast<std::size_t>(num_frames) * fm.dim, 0.0f);

  std::vector<std::complex<double>> spectrum(static_cast<std::size_t>(nfft));
  std::vector<double> mel_log(static_cast<std::size_t>(nmel));
  std::vector<std::vector<float>> cepstra(static_cast<std::size_t>(num_frames),
                                          std::vector<float>(static_cast<std::size_t>(ncep)));

  for (int t = 0; t < num_frames; ++t) {
    const float* frame = samples.data() + static_cast<std::size_t>(t) * frame_shift;
    // Per-frame pre-emphasis; the first sample is scaled by (1 - k) so a
    // constant signal produces identical frames everywhere.
    spectrum.assign(static_cast<std::size_t>(nfft), {0.0, 0.0});
    spectrum[0] = window[0] * (1.0 - config.preemphasis) * frame[0];
    for (int i = 1; i < frame_len; ++i) {
      spectrum[i] = window[i] * (frame[i] - config.preemphasis * frame[i - 1]);
    }
    fft(spectrum);
    for (int m = 0; m < nmel; ++m) {
      double energy = 0.0;
      for (const auto& [bin, weight] : filters[m]) {
        energy += weight * std::abs(spectrum[bin]);
      }
      mel_log[m] = std::log(std::max(energy, kLogFloor));
    }
    // Orthonormal DCT-II.
    for (int k = 0; k < ncep; ++k) {
      double acc = 0.0;
      for (int m = 0; m < nmel; ++m) {
        acc += mel_log[m] * std::cos(kPi * k * (2 * m + 1) / (2.0 * nmel));
      }
      const double scale = (k == 0) ? std::sqrt(1.0 / nmel) : std::sqrt(2.0 / nmel);
      cepstra[t][k] = static_cast<float>(scale * acc);
    }
  }

  for (int t = 0; t < num_frames; ++t) {
    for (int k = 0; k < ncep; ++k) fm.at(t, k) = cepstra[t][k];
    if (config.append_deltas) {
      auto clamp_t = [num_frames](int x) { return std::clamp(x, 0, num_frames - 1); };
      for (int k = 0; k < ncep; ++k) {
        double num = 0.0;
        for (int n = 1; n <= 2; ++n) {
          num += n * (cepstra[clamp_t(t + n)][k] - cepstra[clamp_t(t - n)][k]);
        }
        fm.at(t, ncep + k) = static_cast<float>(num / 10.0);  // 2 * (1^2 + 2^2)
      }
    }
  }

  for (float v : fm.data) {
    if (!std::isfinite(v)) throw Error("compute_mfcc produced a non-finite value");
  }
  return fm;
}

namespace {

constexpr char kMagic[4] = {'P', 'T', 'F', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32le(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32le(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error("truncated feature file " + path);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_features(const FeatureMatrix& fm, const std::string& path) {
  if (fm.dim <= 0 || fm.num_frames <= 0) throw Error("save_features: empty matrix");
  if (fm.data.size() != static_cast<std::size_t>(fm.dim) * fm.num_frames) {
    throw Error("save_features: data size does not match dim * num_frames");
  }
  for (float v : fm.data) {
    if (!std::isfinite(v)) throw Error("save_features: non-finite value");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write feature file " + path);
  out.write(kMagic, 4);
  put_u32le(out, kVersion);
  put_u32le(out, static_cast<std::uint32_t>(fm.dim));
  put_u32le(out, static_cast<std::uint32_t>(fm.num_frames));
  std::uint32_t shift_bits;
  static_assert(sizeof(shift_bits) == sizeof(fm.frame_shift_ms));
  std::memcpy(&shift_bits, &fm.frame_shift_ms, 4);
  put_u32le(out, shift_bits);
  static_assert(std::endian::native == std::endian::little,
                "feature payload is written as raw little-endian f32");
  out.write(reinterpret_cast<const char*>(fm.data.data()),
            static_cast<std::streamsize>(fm.data.size() * sizeof(float)));
  if (!out) throw Error("write failed for feature file " + path);
}

FeatureMatrix load_features(const std::string& path, const std::string& utterance_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open feature file " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error("bad magic in feature file " + path);
  }
  const std::uint32_t version = get_u32le(in, path);
  if (version != kVersion) {
    throw Error(strprintf("unsupported feature file version %u in %s", version, path.c_str()));
  }
  FeatureMatrix fm;
  fm.dim = static_cast<int>(get_u32le(in, path));
  fm.num_frames = static_cast<int>(get_u32le(in, path));
  const std::uint32_t shift_bits = get_u32le(in, path);
  std::memcpy(&fm.frame_shift_ms, &shift_bits, 4);
  if (fm.dim <= 0 || fm.num_frames <= 0) {
    throw Error("feature file " + path + " declares an empty matrix");
  }
  fm.data.resize(static_cast<std::size_t>(fm.dim) * fm.num_frames);
  if (!in.read(reinterpret_cast<char*>(fm.data.data()),
               static_cast<std::streamsize>(fm.data.size() * sizeof(float)))) {
    throw Error("truncated feature file " + path);
  }
  for (float v : fm.data) {
    if (!std::isfinite(v)) throw Error("non-finite value in feature file " + path);
  }
  fm.utterance_id =
      utterance_id.empty() ? std::filesystem::path(path).stem().string() : utterance_id;
  return fm;
}

FeatureConfig load_feature_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feature config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("feature config: ") + e.what());
  }
  FeatureConfig c;
  if (j.contains("sample_rate_hz")) c.sample_rate_hz = j["sample_rate_hz"].get<int>();
  if (j.contains("frame_length_ms")) c.frame_length_ms = j["frame_length_ms"].get<double>();
  if (j.contains("frame_shift_ms")) c.frame_shift_ms = j["frame_shift_ms"].get<double>();
  if (j.contains("num_mel_filters")) c.num_mel_filters = j["num_mel_filters"].get<int>();
  if (j.contains("num_cepstra")) c.num_cepstra = j["num_cepstra"].get<int>();
  if (j.contains("preemphasis")) c.preemphasis = j["preemphasis"].get<double>();
  if (j.contains("append_deltas")) c.append_deltas = j["append_deltas"].get<bool>();
  validate(c);
  return c;
}

}  // namespace ptx
