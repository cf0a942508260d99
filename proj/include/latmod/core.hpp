#ifndef LATMOD_CORE_HPP
#define LATMOD_CORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace latmod {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using MatD = Mat<double>;
using VecF = Vec<float>;
using VecD = Vec<double>;
using LabelMatrix = Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto exit codes:
//   ValidationError/ShapeError -> 1, FormatError/IoError -> 2, NumericError -> 3.
// ---------------------------------------------------------------------------
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : ValidationError {
  using ValidationError::ValidationError;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic randomness. mt19937_64 has a standard-defined sequence; the
// distributions below are written out explicitly so that draws are identical
// across platforms and standard-library implementations.
// ---------------------------------------------------------------------------
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; draws pairs and caches the second value.
  double normal();

  // Uniform integer in [0, n), unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

// Derives independent stream seeds from a base seed and a tag/index.
std::uint64_t mix_seed(std::uint64_t base, std::string_view tag);
std::uint64_t mix_seed(std::uint64_t base, std::string_view tag, std::uint64_t index);

// ---------------------------------------------------------------------------
// Little-endian binary primitives shared by the LATD/LMAE/LGMM containers.
// All readers throw FormatError on short reads.
// ---------------------------------------------------------------------------
void write_u16(std::ostream& os, std::uint16_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f32(std::ostream& os, float v);
void write_f64(std::ostream& os, double v);
void write_f32_array(std::ostream& os, const float* data, std::size_t n);
void write_f64_array(std::ostream& os, const double* data, std::size_t n);

std::uint16_t read_u16(std::istream& is);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
float read_f32(std::istream& is);
double read_f64(std::istream& is);
void read_f32_array(std::istream& is, float* data, std::size_t n);
void read_f64_array(std::istream& is, double* data, std::size_t n);

// ---------------------------------------------------------------------------
// Logging: plain "[level] message" lines on stderr, or one JSON object per
// line when JSON mode is enabled (the CLI's --json flag).
// ---------------------------------------------------------------------------
enum class LogLevel { info, warn, error };

void set_json_logging(bool enabled);
bool json_logging();
void log_message(LogLevel level, std::string_view msg);
inline void log_info(std::string_view msg) { log_message(LogLevel::info, msg); }
inline void log_warn(std::string_view msg) { log_message(LogLevel::warn, msg); }

std::string format_double(double v);  // shortest round-trip decimal form

}  // namespace latmod

#endif  // LATMOD_CORE_HPP
