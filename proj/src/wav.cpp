#include "gstrument/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gstrument/errors.hpp"
#include "gstrument/tensor_io.hpp"

namespace gstrument {
namespace {

constexpr double kScale = 32768.0;

std::uint32_t u32(const std::string& b, std::size_t at) {
  std::uint32_t v;
  std::memcpy(&v, b.data() + at, 4);
  return v;
}
std::uint16_t u16(const std::string& b, std::size_t at) {
  std::uint16_t v;
  std::memcpy(&v, b.data() + at, 2);
  return v;
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

signal::Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string b = ss.str();
  const std::string where = path.string() + ": ";

  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0)
    throw IoError(where + "missing RIFF/WAVE header");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::string id = b.substr(pos, 4);
    const std::uint32_t len = u32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (len < 16 || body + 16 > b.size()) throw IoError(where + "truncated fmt chunk");
      const std::uint16_t format = u16(b, body);
      channels = u16(b, body + 2);
      rate = u32(b, body + 4);
      bits = u16(b, body + 14);
      if (format != 1) throw IoError(where + "unsupported encoding (format tag " + std::to_string(format) + ", need PCM)");
      if (channels != 1) throw IoError(where + "expected mono, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw IoError(where + "expected 16-bit samples, got " + std::to_string(bits));
      if (rate == 0) throw IoError(where + "zero sample rate");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw IoError(where + "data chunk before fmt chunk");
      if (body + len > b.size()) throw IoError(where + "truncated data chunk");
      if (len % 2 != 0) throw IoError(where + "odd data chunk size for 16-bit audio");
      signal::Waveform w;
      w.sample_rate = static_cast<int>(rate);
      w.samples.resize(len / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        std::int16_t s;
        std::memcpy(&s, b.data() + body + 2 * i, 2);
        w.samples[i] = static_cast<double>(s) / kScale;
      }
      return w;
    }
    pos = body + len + (len & 1u);
  }
  throw IoError(where + (have_fmt ? "no data chunk" : "no fmt chunk"));
}

void write_wav(const std::filesystem::path& path, const signal::Waveform& w) {
  signal::validate(w);
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  std::string out;
  out.reserve(44 + 2 * n);
  out.append("RIFF");
  put<std::uint32_t>(out, 36 + 2 * n);
  out.append("WAVE");
  out.append("fmt ");
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, 1);
  put<std::uint16_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put<std::uint16_t>(out, 2);
  put<std::uint16_t>(out, 16);
  out.append("data");
  put<std::uint32_t>(out, 2 * n);
  for (double x : w.samples) {
    const double q = std::round(std::clamp(x, -1.0, 1.0) * kScale);
    put<std::int16_t>(out, static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0)));
  }
  write_file_atomic(path, out);
}

}  // namespace gstrument
