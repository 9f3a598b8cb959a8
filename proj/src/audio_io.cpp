#include "harmonizer/audio_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "harmonizer/errors.h"

namespace harmonizer {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct WavFormat {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
};

double decode_sample(const unsigned char* p, const WavFormat& fmt) {
  if (fmt.tag == kFormatFloat) {
    if (fmt.bits == 32) return static_cast<double>(std::bit_cast<float>(read_u32(p)));
    std::uint64_t lo = read_u32(p);
    std::uint64_t hi = read_u32(p + 4);
    return std::bit_cast<double>(lo | (hi << 32));
  }
  switch (fmt.bits) {
    case 16:
      return static_cast<std::int16_t>(read_u16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case 32:
      return static_cast<std::int32_t>(read_u32(p)) / 2147483648.0;
    default:
      return 0.0;
  }
}

}  // namespace

AudioBuffer decode_wav(std::span<const unsigned char> bytes) {
  if (bytes.empty()) throw FormatError("zero-length audio");
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file");
  }

  WavFormat fmt;
  bool have_fmt = false;
  std::span<const unsigned char> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    std::uint32_t chunk_size = read_u32(hdr + 4);
    std::size_t body = pos + 8;
    std::size_t avail = std::min<std::size_t>(chunk_size, bytes.size() - body);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (avail < 16) throw FormatError("truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      fmt.tag = read_u16(f);
      fmt.channels = read_u16(f + 2);
      fmt.rate = read_u32(f + 4);
      fmt.bits = read_u16(f + 14);
      if (fmt.tag == kFormatExtensible) {
        if (avail < 26) throw FormatError("truncated extensible fmt chunk");
        fmt.tag = read_u16(f + 24);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.subspan(body, avail);
      have_data = true;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }

  if (!have_fmt) throw FormatError("missing fmt chunk");
  if (!have_data) throw FormatError("missing data chunk");
  bool supported = (fmt.tag == kFormatPcm && (fmt.bits == 16 || fmt.bits == 24 || fmt.bits == 32)) ||
                   (fmt.tag == kFormatFloat && (fmt.bits == 32 || fmt.bits == 64));
  if (!supported) {
    throw FormatError("unsupported encoding (format " + std::to_string(fmt.tag) + ", " +
                      std::to_string(fmt.bits) + " bits)");
  }
  if (fmt.channels == 0 || fmt.rate == 0) throw FormatError("invalid channel count or rate");

  const std::size_t frame_bytes = static_cast<std::size_t>(fmt.bits / 8) * fmt.channels;
  const std::size_t frames = data.size() / frame_bytes;
  if (frames == 0) throw FormatError("zero-length audio");

  std::vector<float> mono(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* frame = data.data() + i * frame_bytes;
    if (fmt.channels == 1) {
      double v = decode_sample(frame, fmt);
      if (!std::isfinite(v)) throw FormatError("non-finite sample");
      mono[i] = static_cast<float>(v);
    } else {
      double acc = 0.0;
      for (int c = 0; c < fmt.channels; ++c) {
        double v = decode_sample(frame + static_cast<std::size_t>(c) * (fmt.bits / 8), fmt);
        if (!std::isfinite(v)) throw FormatError("non-finite sample");
        acc += v;
      }
      mono[i] = static_cast<float>(acc / fmt.channels);
    }
  }

  AudioBuffer out;
  out.sample_rate = kSampleRate;
  out.samples = resample(mono, static_cast<int>(fmt.rate), kSampleRate);
  for (float& s : out.samples) s = std::clamp(s, -1.0f, 1.0f);
  if (out.samples.empty()) throw FormatError("zero-length audio");
  return out;
}

AudioBuffer load_audio(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  try {
    return decode_wav(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<unsigned char> encode_wav(const AudioBuffer& buffer, BitDepth depth) {
  if (buffer.empty()) throw std::invalid_argument("cannot encode an empty buffer");
  if (buffer.sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");

  const std::uint16_t bits = depth == BitDepth::Pcm16 ? 16 : 32;
  const std::uint16_t tag = depth == BitDepth::Pcm16 ? kFormatPcm : kFormatFloat;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(buffer.size() * (bits / 8));

  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, tag);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate) * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);

  for (float s : buffer.samples) {
    if (depth == BitDepth::Float32) {
      put_u32(out, std::bit_cast<std::uint32_t>(s));
    } else {
      long q = std::lround(static_cast<double>(s) * 32768.0);
      q = std::clamp(q, -32768L, 32767L);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
  }
  return out;
}

void save_audio(const AudioBuffer& buffer, const std::filesystem::path& path, BitDepth depth) {
  auto bytes = encode_wav(buffer, depth);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

AudioBuffer mix(std::span<const AudioBuffer> buffers, std::span<const double> gains) {
  if (buffers.size() != gains.size()) {
    throw std::invalid_argument("mix: gain count does not match buffer count");
  }
  AudioBuffer out;
  if (buffers.empty()) return out;
  out.sample_rate = buffers.front().sample_rate;
  std::size_t longest = 0;
  for (const auto& b : buffers) {
    if (b.sample_rate != out.sample_rate) throw std::invalid_argument("mix: mismatched sample rates");
    longest = std::max(longest, b.size());
  }

  std::vector<double> acc(longest, 0.0);
  for (std::size_t k = 0; k < buffers.size(); ++k) {
    const double g = gains[k];
    const auto& s = buffers[k].samples;
    for (std::size_t i = 0; i < s.size(); ++i) acc[i] += g * s[i];
  }

  double peak = 0.0;
  for (double v : acc) peak = std::max(peak, std::abs(v));
  const double scale = peak > 1.0 ? 0.99 / peak : 1.0;

  out.samples.resize(longest);
  for (std::size_t i = 0; i < longest; ++i) out.samples[i] = static_cast<float>(acc[i] * scale);
  return out;
}

}  // namespace harmonizer
