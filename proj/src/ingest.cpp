#include "innerseries/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace innerseries {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// SplitMix64, used to derive independent sub-seeds from one user seed.
std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

// ---------------------------------------------------------------------------
// CSV

CsvTable read_csv_table(const std::string& path, std::optional<double> fixed_dt) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path);

  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::kFormat,
          path + ": missing header row");
  const std::vector<std::string> header = split_csv_line(line);

  int time_col = -1, valid_col = -1;
  std::vector<int> channel_cols;
  CsvTable table;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string name = lower(header[c]);
    if ((name == "t" || name == "time") && time_col < 0) {
      time_col = c;
    } else if (name == "valid" && valid_col < 0) {
      valid_col = c;
    } else {
      channel_cols.push_back(c);
      table.channel_names.push_back(header[c]);
    }
  }
  require(!channel_cols.empty(), ErrorCode::kFormat, path + ": no channel columns");
  require(fixed_dt.has_value() || time_col >= 0, ErrorCode::kFormat,
          path + ": no time column and no fixed sample interval given");

  std::vector<std::vector<double>> rows;
  std::vector<double> times;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    const std::size_t row_no = rows.size() + 1;
    if (cells.size() != header.size()) {
      fail(ErrorCode::kFormat, path + ": row " + std::to_string(row_no) + " (line " +
                                   std::to_string(line_no) + ") has " +
                                   std::to_string(cells.size()) + " cells, expected " +
                                   std::to_string(header.size()));
    }
    std::vector<double> parsed(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (cells[c].empty() || end != cells[c].c_str() + cells[c].size() ||
          !std::isfinite(v)) {
        fail(ErrorCode::kFormat, path + ": row " + std::to_string(row_no) + " (line " +
                                     std::to_string(line_no) + "), column '" +
                                     header[c] + "': invalid or non-finite value '" +
                                     cells[c] + "'");
      }
      parsed[c] = v;
    }
    rows.push_back(std::move(parsed));
  }
  require(!rows.empty(), ErrorCode::kFormat, path + ": no data rows");

  const auto n = static_cast<Eigen::Index>(rows.size());
  table.values.resize(n, static_cast<Eigen::Index>(channel_cols.size()));
  table.valid.assign(rows.size(), 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < channel_cols.size(); ++j) {
      table.values(k, static_cast<Eigen::Index>(j)) = rows[k][channel_cols[j]];
    }
    if (valid_col >= 0) table.valid[k] = rows[k][valid_col] != 0.0 ? 1 : 0;
  }

  if (fixed_dt) {
    require(*fixed_dt > 0.0 && std::isfinite(*fixed_dt), ErrorCode::kInvalidArgument,
            "fixed sample interval must be positive");
    table.dt = *fixed_dt;
  } else {
    require(n >= 2, ErrorCode::kFormat, path + ": need two rows to infer the interval");
    const double span = rows.back()[time_col] - rows.front()[time_col];
    const double dt = span / static_cast<double>(n - 1);
    require(dt > 0.0, ErrorCode::kFormat, path + ": time column is not increasing");
    for (Eigen::Index k = 1; k < n; ++k) {
      const double step = rows[k][time_col] - rows[k - 1][time_col];
      if (std::abs(step - dt) > 1e-9 * dt) {
        fail(ErrorCode::kFormat, path + ": non-uniform timestamps at row " +
                                     std::to_string(k + 1) + " (step " +
                                     format_double(step) + ", expected " +
                                     format_double(dt) + ")");
      }
    }
    table.dt = dt;
  }
  return table;
}

Trajectory read_csv_trajectory(const std::string& path, std::optional<double> fixed_dt) {
  CsvTable t = read_csv_table(path, fixed_dt);
  return Trajectory(std::move(t.values), t.dt, std::move(t.channel_names));
}

WeightSeries read_csv_weights(const std::string& path, std::optional<double> fixed_dt) {
  CsvTable t = read_csv_table(path, fixed_dt);
  WeightSeries w;
  w.values = std::move(t.values);
  w.dt = t.dt;
  w.valid = std::move(t.valid);
  w.fallback.assign(w.valid.size(), 0);
  w.channel_names = std::move(t.channel_names);
  return w;
}

void write_csv(const std::string& path, const SampleMatrix& values, double dt,
               const std::vector<std::string>& channel_names, const Mask* valid) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path);
  out << "t";
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    out << ',' << (c < static_cast<Eigen::Index>(channel_names.size())
                       ? channel_names[c]
                       : "x" + std::to_string(c + 1));
  }
  if (valid) out << ",valid";
  out << '\n';
  for (Eigen::Index k = 0; k < values.rows(); ++k) {
    out << format_double(static_cast<double>(k) * dt);
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << ',' << format_double(values(k, c));
    if (valid) out << ',' << static_cast<int>((*valid)[k]);
    out << '\n';
  }
  require(static_cast<bool>(out), ErrorCode::kIo, "error writing " + path);
}

void write_csv_trajectory(const std::string& path, const Trajectory& traj) {
  write_csv(path, traj.samples(), traj.dt(), traj.channel_names());
}

void write_csv_weights(const std::string& path, const WeightSeries& w) {
  auto names = w.channel_names.empty() ? default_channel_names(w.dims(), "w")
                                       : w.channel_names;
  write_csv(path, w.values, w.dt, names, &w.valid);
}

// ---------------------------------------------------------------------------
// WAV

namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

Trajectory read_wav_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  require(bytes.size() >= 12 && std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
              std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
          ErrorCode::kFormat, path + ": not a RIFF/WAVE file");

  int channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    require(pos + 8 + size <= bytes.size() || std::memcmp(chunk, "data", 4) == 0,
            ErrorCode::kFormat, path + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      require(size >= 16, ErrorCode::kFormat, path + ": short fmt chunk");
      std::uint16_t format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      bits = le16(chunk + 22);
      if (format == 0xFFFE && size >= 40) format = le16(chunk + 8 + 24);
      require(format == 1, ErrorCode::kFormat,
              path + ": unsupported encoding (only PCM is read)");
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = std::min<std::size_t>(size, bytes.size() - pos - 8);
    }
    pos += 8 + size + (size & 1u);
  }
  require(channels > 0 && rate > 0, ErrorCode::kFormat, path + ": missing fmt chunk");
  require(bits == 16, ErrorCode::kFormat,
          path + ": unsupported bit depth " + std::to_string(bits) + " (need 16)");
  require(data != nullptr, ErrorCode::kFormat, path + ": missing data chunk");

  const std::size_t frame_bytes = 2u * static_cast<std::size_t>(channels);
  const auto n = static_cast<Eigen::Index>(data_size / frame_bytes);
  SampleMatrix samples(n, channels);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (int c = 0; c < channels; ++c) {
      const unsigned char* p = data + static_cast<std::size_t>(k) * frame_bytes + 2u * c;
      samples(k, c) = static_cast<double>(static_cast<std::int16_t>(le16(p)));
    }
  }
  return Trajectory(std::move(samples), 1.0 / rate, default_channel_names(channels, "ch"));
}

void write_wav(const std::string& path, const SampleMatrix& values, double dt, double scale) {
  const auto rate = static_cast<std::uint32_t>(std::lround(1.0 / dt));
  require(rate > 0, ErrorCode::kInvalidArgument, "sample rate rounds to zero");
  const auto channels = static_cast<std::uint16_t>(values.cols());
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(values.rows()) * channels * 2u;

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, channels);
  put32(out, rate);
  put32(out, rate * channels * 2u);
  put16(out, static_cast<std::uint16_t>(channels * 2u));
  put16(out, 16);
  out += "data";
  put32(out, data_bytes);
  for (Eigen::Index k = 0; k < values.rows(); ++k) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      double v = std::round(values(k, c) * scale);
      v = std::clamp(v, -32768.0, 32767.0);
      put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    }
  }
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kIo, "cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  require(static_cast<bool>(f), ErrorCode::kIo, "error writing " + path);
}

// ---------------------------------------------------------------------------
// generators

Trajectory gen_sine(double amplitude, double dt, Eigen::Index n) {
  require(amplitude != 0.0 && std::isfinite(amplitude), ErrorCode::kInvalidArgument,
          "amplitude must be non-zero");
  require(dt > 0.0, ErrorCode::kInvalidArgument, "dt must be positive");
  require(n >= 3, ErrorCode::kInvalidArgument, "need at least 3 samples");
  SampleMatrix x(n, 1);
  for (Eigen::Index k = 0; k < n; ++k) x(k, 0) = amplitude * std::sin(static_cast<double>(k) * dt);
  return Trajectory(std::move(x), dt, {"x"});
}

Trajectory gen_broadband(Eigen::Index n, double dt, std::uint64_t seed) {
  require(n >= 3 && dt > 0.0, ErrorCode::kInvalidArgument, "invalid broadband size");
  constexpr int kPartials = 24;
  constexpr double kLowHz = 80.0, kHighHz = 1200.0;
  std::mt19937_64 rng(splitmix(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::array<double, kPartials> freq{}, amp{}, phase{};
  double amp_sum = 0.0;
  for (int j = 0; j < kPartials; ++j) {
    freq[j] = kLowHz * std::pow(kHighHz / kLowHz, unit(rng));
    amp[j] = (0.5 + 0.5 * unit(rng)) / std::sqrt(freq[j] / kLowHz);
    phase[j] = 2.0 * std::numbers::pi * unit(rng);
    amp_sum += amp[j];
  }
  const double env_phase = 2.0 * std::numbers::pi * unit(rng);
  const double two_pi = 2.0 * std::numbers::pi;

  SampleMatrix x(n, 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    double s = 0.0;
    for (int j = 0; j < kPartials; ++j) s += amp[j] * std::sin(two_pi * freq[j] * t + phase[j]);
    const double envelope = 0.55 + 0.45 * std::sin(two_pi * 3.1 * t + env_phase);
    x(k, 0) = envelope * s / amp_sum;
  }
  return Trajectory(std::move(x), dt, {"x"});
}

Trajectory gen_walk(Eigen::Index n, double dt, const WalkParams& p, std::uint64_t seed) {
  require(n >= 3 && dt > 0.0, ErrorCode::kInvalidArgument, "invalid walk size");
  require(p.half_width > 0.0 && p.correlation_steps > 0.0, ErrorCode::kInvalidArgument,
          "invalid walk parameters");
  std::mt19937_64 rng(splitmix(seed));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double alpha = std::exp(-1.0 / p.correlation_steps);
  const double kick = std::sqrt(1.0 - alpha * alpha);
  const double width = p.half_width;

  double u = gauss(rng);
  double z = 0.0;
  SampleMatrix x(n, 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    x(k, 0) = z;
    u = alpha * u + kick * gauss(rng);
    const double g = p.shape == VelocityShape::kSuperGaussian ? u * std::abs(u) / std::sqrt(3.0)
                                                              : std::tanh(2.0 * u);
    const double r = z / width;
    z += dt * p.speed * g * (1.0 + p.profile * r * r);
    // Reflect at the walls; the driving process flips with the velocity.
    while (z > width || z < -width) {
      z = z > width ? 2.0 * width - z : -2.0 * width - z;
      u = -u;
    }
  }
  return Trajectory(std::move(x), dt, {"z"});
}

Trajectory gen_two_sources(Eigen::Index n, std::uint64_t seed) {
  constexpr double kRate = 16000.0;
  WalkParams first;
  first.half_width = kSourceDomain;
  first.speed = 80.0 * kRate;
  first.correlation_steps = 20.0;
  first.profile = 0.5;
  first.shape = VelocityShape::kSuperGaussian;
  WalkParams second = first;
  second.speed = 65.0 * kRate;
  second.shape = VelocityShape::kSubGaussian;

  const Trajectory s1 = gen_walk(n, 1.0 / kRate, first, splitmix(seed ^ 0x51));
  const Trajectory s2 = gen_walk(n, 1.0 / kRate, second, splitmix(seed ^ 0x52));
  SampleMatrix x(n, 2);
  x.col(0) = s1.samples().col(0);
  x.col(1) = s2.samples().col(0);
  return Trajectory(std::move(x), 1.0 / kRate, {"s1", "s2"});
}

namespace {

// Latent square [-1,1]^2 observed at 30 frames per second.
constexpr double kLatentDt = 1.0 / 30.0;
constexpr double kLiftBend = 0.04;

}  // namespace

LiftedLatent gen_lifted_latent(Eigen::Index n, std::uint64_t seed) {
  require(n >= 10000, ErrorCode::kInvalidArgument, "lifted latent needs n >= 10^4");
  WalkParams a;
  a.half_width = 1.0;
  a.speed = 0.3;
  a.correlation_steps = 30.0;
  a.profile = 0.5;
  a.shape = VelocityShape::kSuperGaussian;
  WalkParams b = a;
  b.speed = 0.25;
  b.shape = VelocityShape::kSubGaussian;

  const Trajectory z1 = gen_walk(n, kLatentDt, a, splitmix(seed ^ 0x11));
  const Trajectory z2 = gen_walk(n, kLatentDt, b, splitmix(seed ^ 0x12));
  SampleMatrix z(n, 2);
  z.col(0) = z1.samples().col(0);
  z.col(1) = z2.samples().col(0);
  Trajectory latent(std::move(z), kLatentDt, {"z1", "z2"});
  Trajectory lifted = map_rows(latent, 6, lift_primary, "y");
  return {std::move(latent), std::move(lifted)};
}

Eigen::VectorXd lift_primary(double z1, double z2) {
  Eigen::VectorXd y(6);
  y << 1.0 * z1 + 0.3 * z2, 0.2 * z1 + 0.9 * z2, 0.7 * z1 - 0.5 * z2,
      -0.4 * z1 + 0.8 * z2, 0.5 * z1 + 0.6 * z2, 0.3 * z1 - 0.2 * z2;
  Eigen::VectorXd bend(6);
  bend << std::sin(2.0 * z1), std::cos(2.0 * z2), z1 * z2, std::sin(z1 + z2), z1 * z1,
      std::cos(z1 - z2);
  return y + kLiftBend * bend;
}

Eigen::Vector2d goggles(double z1, double z2) {
  auto stretch = [](double z) { return (z + 0.5 * z * z * z) / 1.5; };
  return {-stretch(z1), -stretch(z2) - 0.25 * z1 * z1};
}

Eigen::VectorXd lift_distorted(double z1, double z2) {
  const Eigen::Vector2d u = goggles(z1, z2);
  Eigen::VectorXd y(6);
  y << 0.8 * u[0] - 0.4 * u[1], 0.5 * u[0] + 0.7 * u[1], -0.3 * u[0] + 0.9 * u[1],
      0.9 * u[0] + 0.2 * u[1], 0.1 * u[0] - 0.8 * u[1], 0.6 * u[0] + 0.5 * u[1];
  Eigen::VectorXd bend(6);
  bend << std::cos(2.0 * u[0]), std::sin(2.0 * u[1]), u[0] * u[1], u[1] * u[1],
      std::sin(u[0] - u[1]), std::cos(u[0] + u[1]);
  return y + kLiftBend * bend;
}

// ---------------------------------------------------------------------------
// transforms

TransformSpec TransformSpec::identity() { return affine({1.0}, {0.0}); }

TransformSpec TransformSpec::affine(std::vector<double> scale, std::vector<double> offset) {
  TransformSpec s;
  s.kind = Kind::kAffine;
  s.scale = std::move(scale);
  s.offset = std::move(offset);
  return s;
}

TransformSpec TransformSpec::linear(Eigen::MatrixXd matrix, std::vector<double> offset) {
  TransformSpec s;
  s.kind = Kind::kAffine;
  s.matrix = std::move(matrix);
  s.offset = std::move(offset);
  return s;
}

TransformSpec TransformSpec::polynomial(std::vector<double> coefficients, double lo, double hi) {
  TransformSpec s;
  s.kind = Kind::kMonotonePolynomial;
  s.coefficients = std::move(coefficients);
  s.domain_lo = lo;
  s.domain_hi = hi;
  return s;
}

TransformSpec TransformSpec::audio_mixing() {
  TransformSpec s;
  s.kind = Kind::kAudioMixing;
  return s;
}

TransformSpec TransformSpec::table(std::vector<double> x, std::vector<double> y) {
  TransformSpec s;
  s.kind = Kind::kCustomTable;
  s.table_x = std::move(x);
  s.table_y = std::move(y);
  return s;
}

std::string to_string(TransformSpec::Kind kind) {
  switch (kind) {
    case TransformSpec::Kind::kAffine: return "affine";
    case TransformSpec::Kind::kMonotonePolynomial: return "monotone-polynomial";
    case TransformSpec::Kind::kAudioMixing: return "audio-mixing";
    case TransformSpec::Kind::kCustomTable: return "custom-table";
  }
  return "unknown";
}

TransformSpec::Kind transform_kind_from_string(const std::string& s) {
  if (s == "affine") return TransformSpec::Kind::kAffine;
  if (s == "monotone-polynomial") return TransformSpec::Kind::kMonotonePolynomial;
  if (s == "audio-mixing") return TransformSpec::Kind::kAudioMixing;
  if (s == "custom-table") return TransformSpec::Kind::kCustomTable;
  fail(ErrorCode::kInvalidArgument, "unknown transform kind '" + s + "'");
}

double eval_polynomial(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double eval_polynomial_derivative(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (std::size_t j = c.size(); j-- > 1;) acc = acc * x + static_cast<double>(j) * c[j];
  return acc;
}

void TransformSpec::validate() const {
  switch (kind) {
    case Kind::kAffine: {
      if (matrix.size() > 0) {
        require(matrix.rows() == matrix.cols(), ErrorCode::kInvalidArgument,
                "affine matrix must be square");
        Eigen::FullPivLU<Eigen::MatrixXd> lu(matrix);
        require(lu.isInvertible(), ErrorCode::kDomain, "affine matrix is singular");
      } else {
        for (double s : scale) {
          require(s != 0.0 && std::isfinite(s), ErrorCode::kDomain,
                  "affine scale must be non-zero");
        }
      }
      break;
    }
    case Kind::kMonotonePolynomial: {
      require(coefficients.size() >= 2, ErrorCode::kInvalidArgument,
              "polynomial needs degree >= 1");
      require(domain_hi > domain_lo, ErrorCode::kInvalidArgument,
              "polynomial domain must be non-empty");
      constexpr int kProbes = 10001;
      int sign = 0;
      for (int i = 0; i < kProbes; ++i) {
        const double x = domain_lo + (domain_hi - domain_lo) * i / (kProbes - 1);
        const double d = eval_polynomial_derivative(coefficients, x);
        const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
        if (s == 0 || (sign != 0 && s != sign)) {
          fail(ErrorCode::kDomain, "polynomial is not strictly monotone on its domain");
        }
        sign = s;
      }
      break;
    }
    case Kind::kAudioMixing:
      break;
    case Kind::kCustomTable: {
      require(table_x.size() >= 2 && table_x.size() == table_y.size(),
              ErrorCode::kInvalidArgument, "table needs >= 2 matching knots");
      const bool up = table_y[1] > table_y[0];
      for (std::size_t i = 1; i < table_x.size(); ++i) {
        require(table_x[i] > table_x[i - 1], ErrorCode::kInvalidArgument,
                "table x must be strictly increasing");
        require(up ? table_y[i] > table_y[i - 1] : table_y[i] < table_y[i - 1],
                ErrorCode::kDomain, "table is not strictly monotone");
      }
      break;
    }
  }
}

namespace {

double table_lookup(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t i = static_cast<std::size_t>(it - xs.begin());
  i = std::clamp<std::size_t>(i, 1, xs.size() - 1);
  const double f = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + f * (ys[i] - ys[i - 1]);
}

double broadcast(const std::vector<double>& v, Eigen::Index c, double fallback) {
  if (v.empty()) return fallback;
  if (v.size() == 1) return v[0];
  return v[static_cast<std::size_t>(c)];
}

}  // namespace

Trajectory apply_transform(const Trajectory& traj, const TransformSpec& spec) {
  spec.validate();
  const SampleMatrix& x = traj.samples();
  const Eigen::Index n = traj.size();
  const int dims = traj.dims();
  SampleMatrix out(n, dims);

  switch (spec.kind) {
    case TransformSpec::Kind::kAffine: {
      if (spec.matrix.size() > 0) {
        require(spec.matrix.rows() == dims, ErrorCode::kDimensionMismatch,
                "affine matrix does not match trajectory dimension");
        out = x * spec.matrix.transpose();
      } else {
        require(spec.scale.size() <= 1 || static_cast<int>(spec.scale.size()) == dims,
                ErrorCode::kDimensionMismatch, "affine scale length mismatch");
        for (Eigen::Index c = 0; c < dims; ++c) {
          out.col(c) = x.col(c) * broadcast(spec.scale, c, 1.0);
        }
      }
      require(spec.offset.size() <= 1 || static_cast<int>(spec.offset.size()) == dims,
              ErrorCode::kDimensionMismatch, "affine offset length mismatch");
      for (Eigen::Index c = 0; c < dims; ++c) {
        const double b = broadcast(spec.offset, c, 0.0);
        if (b != 0.0) out.col(c).array() += b;
      }
      break;
    }
    case TransformSpec::Kind::kMonotonePolynomial:
      for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index c = 0; c < dims; ++c) {
          const double v = x(k, c);
          if (v < spec.domain_lo || v > spec.domain_hi) {
            fail(ErrorCode::kDomain, "sample " + std::to_string(k) + " outside polynomial domain");
          }
          out(k, c) = eval_polynomial(spec.coefficients, v);
        }
      }
      break;
    case TransformSpec::Kind::kAudioMixing:
      return mix_two_sources(traj);
    case TransformSpec::Kind::kCustomTable:
      for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index c = 0; c < dims; ++c) {
          const double v = x(k, c);
          if (v < spec.table_x.front() || v > spec.table_x.back()) {
            fail(ErrorCode::kDomain, "sample " + std::to_string(k) + " outside table domain");
          }
          out(k, c) = table_lookup(spec.table_x, spec.table_y, v);
        }
      }
      break;
  }
  return Trajectory(std::move(out), traj.dt(), traj.channel_names());
}

Eigen::Vector2d mixing_map(double x1, double x2) {
  if (!(std::abs(x1) <= kMixingDomain && std::abs(x2) <= kMixingDomain)) {
    fail(ErrorCode::kDomain, "mixing input (" + format_double(x1) + ", " +
                                 format_double(x2) + ") outside [-2^15, 2^15]^2");
  }
  const double mu1 = 0.763 * x1 + std::pow(958.0 - 0.0225 * x2, 1.5);
  const double mu2 = 0.153 * x2 + std::pow(3.75e7 - 763.0 * x1 - 229.0 * x2, 0.5);
  return {mu1, mu2};
}

Trajectory mix_two_sources(const Trajectory& traj2) {
  require(traj2.dims() == 2, ErrorCode::kDimensionMismatch,
          "mixing needs a 2-channel trajectory");
  SampleMatrix out(traj2.size(), 2);
  for (Eigen::Index k = 0; k < traj2.size(); ++k) {
    out.row(k) = mixing_map(traj2.samples()(k, 0), traj2.samples()(k, 1)).transpose();
  }
  return Trajectory(std::move(out), traj2.dt(), {"mu1", "mu2"});
}

// ---------------------------------------------------------------------------
// PCA

PcaResult pca_embed(const Trajectory& series, int k) {
  const int dims = series.dims();
  const Eigen::Index n = series.size();
  require(k >= 1 && k <= dims, ErrorCode::kInvalidArgument,
          "component count must be in [1, " + std::to_string(dims) + "]");
  require(n > dims, ErrorCode::kInvalidArgument, "need more samples than dimensions");

  PcaResult r{series, {}, {}, {}, {}};
  r.mean = series.samples().colwise().mean().transpose();
  const Eigen::MatrixXd centered = series.samples().rowwise() - r.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  require(eig.info() == Eigen::Success, ErrorCode::kNumerical, "PCA eigensolver failed");

  const Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  const double total = values.sum();
  require(total > 0.0, ErrorCode::kDomain, "input has zero variance");
  r.explained = values / total;
  require(values[k - 1] > 1e-14 * values[0], ErrorCode::kDomain,
          "retained component has zero variance");

  r.components = vectors.leftCols(k).transpose();
  for (int i = 0; i < k; ++i) {
    Eigen::Index arg = 0;
    r.components.row(i).cwiseAbs().maxCoeff(&arg);
    if (r.components(i, arg) < 0.0) r.components.row(i) *= -1.0;
  }

  SampleMatrix projected = centered * r.components.transpose();
  r.stddev.resize(k);
  for (int i = 0; i < k; ++i) {
    const double var = projected.col(i).squaredNorm() / static_cast<double>(n);
    r.stddev[i] = std::sqrt(var);
    projected.col(i) /= r.stddev[i];
  }
  r.embedded = Trajectory(std::move(projected), series.dt(), default_channel_names(k, "pc"));
  return r;
}

}  // namespace innerseries
