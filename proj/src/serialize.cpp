#include "innerseries/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace innerseries {

using nlohmann::json;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void append_vector(std::string& out, const Eigen::VectorXd& v) {
  out += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_real(v[i]);
  }
  out += ']';
}

void append_matrix(std::string& out, const Eigen::MatrixXd& m) {
  out += '[';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) out += ',';
    append_vector(out, m.row(r).transpose());
  }
  out += ']';
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  require(j.is_array() && static_cast<Eigen::Index>(j.size()) == rows, ErrorCode::kFormat,
          "matrix has wrong row count");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    require(static_cast<Eigen::Index>(j[r].size()) == cols, ErrorCode::kFormat,
            "matrix has wrong column count");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

std::string frame_field_to_json(const FrameField& field) {
  std::string out;
  out += "{\n  \"schema\": \"";
  out += kFrameFieldSchema;
  out += "\",\n  \"dims\": " + std::to_string(field.dims());
  out += ",\n  \"edges\": [";
  for (int a = 0; a < field.dims(); ++a) {
    if (a) out += ", ";
    const auto& e = field.grid.edges()[a];
    append_vector(out, Eigen::Map<const Eigen::VectorXd>(e.data(), static_cast<Eigen::Index>(e.size())));
  }
  out += "],\n  \"component_count\": " + std::to_string(field.component_count);
  out += ",\n  \"skipped\": [";
  for (std::size_t i = 0; i < field.skipped.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(field.skipped[i]);
  }
  out += "],\n  \"bins\": [";
  bool first = true;
  for (const auto& [f, frame] : field.frames) {
    out += first ? "\n    {" : ",\n    {";
    first = false;
    out += "\"flat\": " + std::to_string(f) + ", \"index\": [";
    const BinIndex idx = field.grid.unflat(f);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      if (a) out += ',';
      out += std::to_string(idx[a]);
    }
    out += "], \"count\": ";
    auto c = field.counts.find(f);
    out += std::to_string(c == field.counts.end() ? 0 : c->second);
    auto comp = field.component.find(f);
    out += ", \"component\": " + std::to_string(comp == field.component.end() ? 0 : comp->second);
    out += ", \"degenerate\": ";
    out += frame.degenerate ? "true" : "false";
    out += ", \"d\": ";
    append_vector(out, frame.d);
    out += ", \"m\": ";
    append_matrix(out, frame.m);
    out += ", \"v\": ";
    append_matrix(out, frame.v);
    out += '}';
  }
  out += "\n  ]\n}\n";
  return out;
}

FrameField frame_field_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("frame field JSON: ") + e.what());
  }
  try {
    require(j.value("schema", "") == kFrameFieldSchema, ErrorCode::kFormat,
            "unexpected frame field schema");
    const int dims = j.at("dims").get<int>();
    FrameField field;
    field.grid = GridGeometry(j.at("edges").get<std::vector<std::vector<double>>>());
    require(field.grid.dims() == dims, ErrorCode::kFormat, "edges do not match dims");
    field.component_count = j.value("component_count", 1);
    field.skipped = j.value("skipped", std::vector<std::size_t>{});
    for (const auto& b : j.at("bins")) {
      const auto f = b.at("flat").get<std::size_t>();
      require(f < field.grid.bin_count(), ErrorCode::kFormat, "bin index out of range");
      LocalFrame frame;
      frame.m = matrix_from_json(b.at("m"), dims, dims);
      frame.v = b.contains("v") ? matrix_from_json(b.at("v"), dims, dims)
                                : Eigen::MatrixXd(frame.m.inverse());
      const auto d = b.at("d").get<std::vector<double>>();
      require(static_cast<int>(d.size()) == dims, ErrorCode::kFormat, "d has wrong length");
      frame.d = Eigen::Map<const Eigen::VectorXd>(d.data(), dims);
      frame.degenerate = b.value("degenerate", false);
      field.frames.emplace(f, std::move(frame));
      field.counts[f] = b.value("count", std::size_t{0});
      field.component[f] = b.value("component", 0);
    }
    return field;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("frame field JSON: ") + e.what());
  }
}

void write_frame_field(const std::string& path, const FrameField& field) {
  write_text_file(path, frame_field_to_json(field));
}

FrameField read_frame_field(const std::string& path) {
  return frame_field_from_json(read_text_file(path));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json grid_to_json(const BinGrid& grid) {
  json bins = json::array();
  for (std::size_t f = 0; f < grid.members.size(); ++f) {
    if (grid.members[f].empty()) continue;
    bins.push_back({{"flat", f},
                    {"index", grid.geometry.unflat(f)},
                    {"count", grid.members[f].size()},
                    {"occupied", grid.occupied(f)}});
  }
  return {{"schema", kGridSchema},
          {"dims", grid.geometry.dims()},
          {"edges", grid.geometry.edges()},
          {"min_count", grid.min_count},
          {"bins", std::move(bins)}};
}

json moments_to_json(const GridGeometry& grid, const MomentMap& moments) {
  json bins = json::array();
  for (const auto& [f, m] : moments) {
    std::vector<double> c4(m.c4.data().begin(), m.c4.data().end());
    bins.push_back({{"flat", f},
                    {"index", grid.unflat(f)},
                    {"count", m.count},
                    {"mean_vel", vector_to_json(m.mean_vel)},
                    {"c2", matrix_to_json(m.c2)},
                    {"c4", c4}});
  }
  return {{"schema", kMomentsSchema},
          {"dims", grid.dims()},
          {"edges", grid.edges()},
          {"c4_layout", "row-major [k][l][m][n]"},
          {"bins", std::move(bins)}};
}

json to_json(const SignedPermutation& p) {
  std::vector<int> perm = p.perm();
  for (int& v : perm) ++v;
  return {{"perm", perm}, {"signs", p.signs()}};
}

SignedPermutation signed_permutation_from_json(const json& j) {
  std::vector<int> perm = j.at("perm").get<std::vector<int>>();
  for (int& v : perm) --v;
  return SignedPermutation(std::move(perm), j.at("signs").get<std::vector<int>>());
}

json to_json(const WeightAlignment& a) {
  return {{"permutation", to_json(a.p)},
          {"correlations", vector_to_json(a.correlations)},
          {"cross", matrix_to_json(a.cross)},
          {"overlap", a.overlap}};
}

json to_json(const SeparabilityReport& r) {
  return {{"alignment", to_json(r.alignment)},
          {"mixture_cross", matrix_to_json(r.mixture_cross)},
          {"min_match", r.min_match},
          {"max_cross", r.max_cross},
          {"match_pass", r.match_pass},
          {"cross_pass", r.cross_pass},
          {"pass", r.pass()}};
}

TransformSpec transform_from_json(const json& j) {
  try {
    const auto kind = transform_kind_from_string(j.at("kind").get<std::string>());
    TransformSpec s;
    s.kind = kind;
    switch (kind) {
      case TransformSpec::Kind::kAffine:
        if (j.contains("matrix")) {
          const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
          require(!rows.empty(), ErrorCode::kInvalidArgument, "empty affine matrix");
          s.matrix.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows[0].size()));
          for (std::size_t r = 0; r < rows.size(); ++r) {
            require(rows[r].size() == rows[0].size(), ErrorCode::kInvalidArgument,
                    "ragged affine matrix");
            for (std::size_t c = 0; c < rows[r].size(); ++c)
              s.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
          }
        }
        s.scale = j.value("scale", std::vector<double>{});
        s.offset = j.value("offset", std::vector<double>{});
        break;
      case TransformSpec::Kind::kMonotonePolynomial: {
        s.coefficients = j.at("coefficients").get<std::vector<double>>();
        const auto domain = j.at("domain").get<std::vector<double>>();
        require(domain.size() == 2, ErrorCode::kInvalidArgument, "domain needs [lo, hi]");
        s.domain_lo = domain[0];
        s.domain_hi = domain[1];
        break;
      }
      case TransformSpec::Kind::kAudioMixing:
        break;
      case TransformSpec::Kind::kCustomTable:
        s.table_x = j.at("x").get<std::vector<double>>();
        s.table_y = j.at("y").get<std::vector<double>>();
        break;
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("transform spec: ") + e.what());
  }
}

json to_json(const TransformSpec& s) {
  json j{{"kind", to_string(s.kind)}};
  switch (s.kind) {
    case TransformSpec::Kind::kAffine:
      if (s.matrix.size() > 0) j["matrix"] = matrix_to_json(s.matrix);
      if (!s.scale.empty()) j["scale"] = s.scale;
      if (!s.offset.empty()) j["offset"] = s.offset;
      break;
    case TransformSpec::Kind::kMonotonePolynomial:
      j["coefficients"] = s.coefficients;
      j["domain"] = {s.domain_lo, s.domain_hi};
      break;
    case TransformSpec::Kind::kAudioMixing:
      break;
    case TransformSpec::Kind::kCustomTable:
      j["x"] = s.table_x;
      j["y"] = s.table_y;
      break;
  }
  return j;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path);
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIo, "error writing " + path);
}

}  // namespace innerseries
