#include "gemcl/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace gemcl {

namespace {

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

std::vector<double> resample_linear(const std::vector<double>& in, int from_rate, int to_rate) {
  if (in.empty()) return {};
  std::size_t out_len = static_cast<std::size_t>(
      static_cast<double>(in.size()) * to_rate / from_rate);
  if (out_len == 0) out_len = 1;
  std::vector<double> out(out_len);
  double step = static_cast<double>(from_rate) / to_rate;
  for (std::size_t i = 0; i < out_len; ++i) {
    double pos = i * step;
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo >= in.size() - 1) {
      out[i] = in.back();
    } else {
      double frac = pos - lo;
      out[i] = in[lo] * (1.0 - frac) + in[lo + 1] * frac;
    }
  }
  return out;
}

}  // namespace

Waveform read_audio(const std::string& path, bool allow_resample, int target_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing file: " + path);

  char tag[5] = {0};
  in.read(tag, 4);
  if (!in || std::strncmp(tag, "RIFF", 4) != 0)
    throw std::runtime_error("malformed header (not RIFF): " + path);
  read_u32(in);  // riff size
  in.read(tag, 4);
  if (!in || std::strncmp(tag, "WAVE", 4) != 0)
    throw std::runtime_error("malformed header (not WAVE): " + path);

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<char> payload;

  while (in.read(tag, 4)) {
    std::uint32_t chunk_size = read_u32(in);
    if (!in) throw std::runtime_error("malformed header (truncated chunk): " + path);
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw std::runtime_error("malformed header (short fmt): " + path);
      format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::strncmp(tag, "data", 4) == 0) {
      payload.resize(chunk_size);
      in.read(payload.data(), chunk_size);
      if (!in) throw std::runtime_error("malformed header (truncated data): " + path);
      break;
    } else {
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }

  if (!have_fmt || payload.empty())
    throw std::runtime_error("malformed header (missing fmt or data): " + path);
  if (format != 1 || bits != 16)
    throw std::runtime_error("unsupported encoding (need 16-bit PCM): " + path);
  if (channels != 1) throw std::runtime_error("mono required: " + path);

  Waveform wave;
  wave.sample_rate = static_cast<int>(rate);
  wave.samples.resize(payload.size() / 2);
  for (std::size_t i = 0; i < wave.samples.size(); ++i) {
    std::int16_t s = static_cast<std::int16_t>(
        static_cast<std::uint16_t>(static_cast<unsigned char>(payload[2 * i])) |
        (static_cast<std::uint16_t>(static_cast<unsigned char>(payload[2 * i + 1])) << 8));
    wave.samples[i] = static_cast<double>(s) / 32768.0;
  }

  if (wave.sample_rate != target_rate) {
    if (!allow_resample)
      throw std::runtime_error("unsupported sample rate " + std::to_string(wave.sample_rate) +
                               " (resampling is opt-in): " + path);
    wave.samples = resample_linear(wave.samples, wave.sample_rate, target_rate);
    wave.sample_rate = target_rate;
  }
  return wave;
}

void write_wav(const std::string& path, const Waveform& wave) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  std::uint32_t data_bytes = static_cast<std::uint32_t>(wave.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<std::uint32_t>(wave.sample_rate));
  write_u32(out, static_cast<std::uint32_t>(wave.sample_rate * 2));
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);
  for (double x : wave.samples) {
    double clamped = x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x);
    int v = static_cast<int>(std::lrint(clamped * 32767.0));
    write_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  if (!out) throw std::runtime_error("failed writing: " + path);
}

}  // namespace gemcl
