#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "respkit/audio/clip.hpp"
#include "respkit/audio/resample.hpp"
#include "respkit/core/error.hpp"
#include "respkit/core/io.hpp"

namespace respkit::audio {

namespace detail {

struct WavCursor {
  const std::vector<uint8_t>& bytes;
  size_t pos = 0;

  void need(size_t n, const char* what) const {
    require(pos + n <= bytes.size(), errc::corrupt_file,
            std::string("truncated WAV: ") + what);
  }
  uint8_t u8_at(size_t i) const { return bytes[i]; }
  uint16_t u16() {
    need(2, "u16");
    uint16_t v = static_cast<uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4, "u32");
    uint32_t v = static_cast<uint32_t>(bytes[pos]) |
                 (static_cast<uint32_t>(bytes[pos + 1]) << 8) |
                 (static_cast<uint32_t>(bytes[pos + 2]) << 16) |
                 (static_cast<uint32_t>(bytes[pos + 3]) << 24);
    pos += 4;
    return v;
  }
  std::string tag() {
    need(4, "chunk tag");
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), 4);
    pos += 4;
    return s;
  }
};

}  // namespace detail

/// Decoded PCM WAV: channels averaged to mono, samples scaled to [-1, 1],
/// kept at the file's native rate.
inline AudioClip read_wav(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  detail::WavCursor cur{bytes};

  require(cur.tag() == "RIFF", errc::corrupt_file, "missing RIFF header: " + path.string());
  cur.u32();  // declared riff size; files in the wild lie about it
  require(cur.tag() == "WAVE", errc::corrupt_file, "missing WAVE tag: " + path.string());

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  size_t data_pos = 0, data_len = 0;

  while (cur.pos + 8 <= bytes.size()) {
    const std::string id = cur.tag();
    const uint32_t len = cur.u32();
    if (id == "fmt ") {
      require(len >= 16, errc::corrupt_file, "fmt chunk too short");
      cur.need(len, "fmt chunk");
      const size_t base = cur.pos;
      detail::WavCursor f{bytes, base};
      format = f.u16();
      channels = f.u16();
      rate = f.u32();
      f.u32();  // byte rate
      f.u16();  // block align
      bits = f.u16();
      have_fmt = true;
      cur.pos = base + len + (len & 1);
    } else if (id == "data") {
      cur.need(len, "data chunk");
      data_pos = cur.pos;
      data_len = len;
      cur.pos += len + (len & 1);
    } else {
      cur.need(len, "chunk body");
      cur.pos += len + (len & 1);
    }
  }

  require(have_fmt, errc::corrupt_file, "no fmt chunk: " + path.string());
  require(data_pos != 0, errc::corrupt_file, "no data chunk: " + path.string());
  require(format == 1, errc::unsupported_encoding,
          "only PCM WAV is supported: " + path.string());
  require(bits == 16 || bits == 24, errc::unsupported_encoding,
          "only 16- or 24-bit PCM is supported: " + path.string());
  require(channels > 0, errc::corrupt_file, "zero channels: " + path.string());
  require(rate > 0, errc::corrupt_file, "zero sample rate: " + path.string());

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_bytes = bytes_per_sample * channels;
  require(frame_bytes > 0 && data_len % frame_bytes == 0, errc::corrupt_file,
          "data chunk is not a whole number of frames: " + path.string());
  const size_t n_frames = data_len / frame_bytes;
  require(n_frames > 0, errc::corrupt_file, "empty data chunk: " + path.string());

  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(n_frames);
  const double inv_channels = 1.0 / static_cast<double>(channels);
  for (size_t fidx = 0; fidx < n_frames; ++fidx) {
    double acc = 0.0;
    size_t p = data_pos + fidx * frame_bytes;
    for (uint16_t c = 0; c < channels; ++c, p += bytes_per_sample) {
      if (bits == 16) {
        const int16_t v = static_cast<int16_t>(bytes[p] | (bytes[p + 1] << 8));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        int32_t v = static_cast<int32_t>(bytes[p]) |
                    (static_cast<int32_t>(bytes[p + 1]) << 8) |
                    (static_cast<int32_t>(bytes[p + 2]) << 16);
        if (v & 0x800000) v -= 0x1000000;  // sign-extend 24-bit
        acc += static_cast<double>(v) / 8388608.0;
      }
    }
    clip.samples[fidx] = static_cast<float>(acc * inv_channels);
  }
  return clip;
}

/// Decode, downmix and resample in one step. The standard ingestion path.
inline AudioClip load_audio(const std::filesystem::path& path, uint32_t target_sample_rate) {
  AudioClip clip = read_wav(path);
  if (clip.sample_rate != target_sample_rate) {
    clip.samples = resample(clip.samples, clip.sample_rate, target_sample_rate);
    clip.sample_rate = target_sample_rate;
  }
  return clip;
}

/// 16-bit mono PCM writer, used by the synthetic-dataset tooling and tests.
inline void write_wav_pcm16(const std::filesystem::path& path, const AudioClip& clip) {
  require(!clip.samples.empty(), errc::empty_clip, "refusing to write an empty WAV");
  std::vector<uint8_t> out;
  const uint32_t data_len = static_cast<uint32_t>(clip.samples.size() * 2);

  auto push_tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
  auto push_u16 = [&](uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
  };
  auto push_u32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
  };

  push_tag("RIFF");
  push_u32(36 + data_len);
  push_tag("WAVE");
  push_tag("fmt ");
  push_u32(16);
  push_u16(1);  // PCM
  push_u16(1);  // mono
  push_u32(clip.sample_rate);
  push_u32(clip.sample_rate * 2);
  push_u16(2);
  push_u16(16);
  push_tag("data");
  push_u32(data_len);
  for (float s : clip.samples) {
    const long v = std::lround(static_cast<double>(s) * 32768.0);
    const int16_t q = static_cast<int16_t>(std::clamp(v, -32768L, 32767L));
    push_u16(static_cast<uint16_t>(q));
  }
  write_file_bytes(path, out);
}

}  // namespace respkit::audio
