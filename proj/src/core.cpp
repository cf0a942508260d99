#include "latmod/core.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <numbers>

namespace latmod {

double RandomSource::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

std::uint64_t RandomSource::below(std::uint64_t n) {
  if (n == 0) throw ValidationError("RandomSource::below: n must be positive");
  const std::uint64_t threshold = -n % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % n;
  }
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t base, std::string_view tag) {
  return splitmix64(base ^ fnv1a64(tag));
}

std::uint64_t mix_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
  return splitmix64(mix_seed(base, tag) + 0x9e3779b97f4a7c15ull * (index + 1));
}

namespace {

template <class U>
void write_le(std::ostream& os, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(U));
  if (!os) throw IoError("write failed");
}

template <class U>
U read_le(std::istream& is) {
  unsigned char buf[sizeof(U)];
  is.read(reinterpret_cast<char*>(buf), sizeof(U));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(U))) {
    throw FormatError("unexpected end of file");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(buf[i]) << (8 * i);
  }
  return v;
}

constexpr bool kNativeLe = std::endian::native == std::endian::little;

}  // namespace

void write_u16(std::ostream& os, std::uint16_t v) { write_le<std::uint16_t>(os, v); }
void write_u32(std::ostream& os, std::uint32_t v) { write_le<std::uint32_t>(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { write_le<std::uint64_t>(os, v); }
void write_f32(std::ostream& os, float v) { write_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& os, double v) { write_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v)); }

void write_f32_array(std::ostream& os, const float* data, std::size_t n) {
  if constexpr (kNativeLe) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
    if (!os) throw IoError("write failed");
  } else {
    for (std::size_t i = 0; i < n; ++i) write_f32(os, data[i]);
  }
}

void write_f64_array(std::ostream& os, const double* data, std::size_t n) {
  if constexpr (kNativeLe) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
    if (!os) throw IoError("write failed");
  } else {
    for (std::size_t i = 0; i < n; ++i) write_f64(os, data[i]);
  }
}

std::uint16_t read_u16(std::istream& is) { return read_le<std::uint16_t>(is); }
std::uint32_t read_u32(std::istream& is) { return read_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return read_le<std::uint64_t>(is); }
float read_f32(std::istream& is) { return std::bit_cast<float>(read_le<std::uint32_t>(is)); }
double read_f64(std::istream& is) { return std::bit_cast<double>(read_le<std::uint64_t>(is)); }

void read_f32_array(std::istream& is, float* data, std::size_t n) {
  if constexpr (kNativeLe) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
    if (is.gcount() != static_cast<std::streamsize>(n * sizeof(float))) {
      throw FormatError("unexpected end of file");
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) data[i] = read_f32(is);
  }
}

void read_f64_array(std::istream& is, double* data, std::size_t n) {
  if constexpr (kNativeLe) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
    if (is.gcount() != static_cast<std::streamsize>(n * sizeof(double))) {
      throw FormatError("unexpected end of file");
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) data[i] = read_f64(is);
  }
}

namespace {
std::atomic<bool> g_json_logging{false};

const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
  }
  return "info";
}

std::string json_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}
}  // namespace

void set_json_logging(bool enabled) { g_json_logging.store(enabled); }
bool json_logging() { return g_json_logging.load(); }

void log_message(LogLevel level, std::string_view msg) {
  if (g_json_logging.load()) {
    std::cerr << "{\"level\":\"" << level_name(level) << "\",\"message\":\""
              << json_escape(msg) << "\"}\n";
  } else {
    std::cerr << "[" << level_name(level) << "] " << msg << "\n";
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Trim to the shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) return probe;
  }
  return buf;
}

}  // namespace latmod
