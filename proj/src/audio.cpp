#include "amt/audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "amt/error.hpp"

namespace amt {
namespace {

uint32_t read_u32(const uint8_t* p) {
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
         (uint32_t(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) { return uint16_t(p[0] | (p[1] << 8)); }

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(uint8_t((v >> (8 * i)) & 0xff));
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(uint8_t(v & 0xff));
  out.push_back(uint8_t(v >> 8));
}

void put_tag(std::vector<uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatExtensible = 0xfffe;

double decode_sample(const uint8_t* p, int bits) {
  switch (bits) {
    case 8:
      return (double(p[0]) - 128.0) / 128.0;
    case 16: {
      int16_t v = int16_t(read_u16(p));
      return v / 32768.0;
    }
    case 24: {
      int32_t v = int32_t(uint32_t(p[0]) << 8 | uint32_t(p[1]) << 16 | uint32_t(p[2]) << 24) >> 8;
      return v / 8388608.0;
    }
    case 32: {
      int32_t v = int32_t(read_u32(p));
      return v / 2147483648.0;
    }
  }
  return 0.0;
}

}  // namespace

AudioBuffer load_audio(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::UnreadableFile, path.string() + ": not a RIFF/WAVE file");
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const uint8_t* data = nullptr;
  size_t data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* chunk = bytes.data() + pos;
    uint32_t size = read_u32(chunk + 4);
    size_t body = pos + 8;
    size_t available = std::min<size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (available < 16) throw Error(ErrorCode::UnreadableFile, path.string() + ": short fmt chunk");
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible && available >= 26) {
        format = read_u16(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = available;
    }
    pos = body + size + (size & 1);
  }

  if (!have_fmt || data == nullptr) {
    throw Error(ErrorCode::UnreadableFile, path.string() + ": missing fmt or data chunk");
  }
  if (format != kFormatPcm) {
    throw Error(ErrorCode::UnsupportedEncoding, path.string() + ": only integer PCM is supported");
  }
  if (bits != 8 && bits != 16 && bits != 24 && bits != 32) {
    throw Error(ErrorCode::UnsupportedEncoding,
                path.string() + ": unsupported bit depth " + std::to_string(bits));
  }
  if (channels == 0 || rate == 0) {
    throw Error(ErrorCode::UnreadableFile, path.string() + ": invalid channel count or rate");
  }

  const size_t frame_bytes = size_t(channels) * (bits / 8);
  const size_t n_frames = data_size / frame_bytes;
  if (n_frames == 0) throw Error(ErrorCode::EmptyAudio, path.string() + ": no samples");

  AudioBuffer audio;
  audio.sample_rate = int(rate);
  audio.samples.resize(n_frames);
  for (size_t n = 0; n < n_frames; ++n) {
    double sum = 0.0;
    for (uint16_t c = 0; c < channels; ++c) {
      sum += decode_sample(data + n * frame_bytes + c * (bits / 8), bits);
    }
    audio.samples[n] = sum / channels;
  }
  return audio;
}

void write_wav(const AudioBuffer& audio, const std::filesystem::path& path) {
  const uint32_t data_bytes = uint32_t(audio.samples.size() * 2);
  std::vector<uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, uint32_t(audio.sample_rate));
  put_u32(out, uint32_t(audio.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : audio.samples) {
    double clamped = std::clamp(s, -1.0, 1.0);
    auto v = int16_t(std::lround(clamped * 32767.0));
    put_u16(out, uint16_t(v));
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
  if (!file) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace amt
