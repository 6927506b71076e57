#pragma once

// JSON encodings of pipeline artefacts.
//
// Frame fields are written by hand so every real carries exactly 17
// significant digits (bit-exact round trip); everything else goes through
// nlohmann::json.

#include <string>

#include <json.hpp>

#include "innerseries/ingest.hpp"
#include "innerseries/model.hpp"
#include "innerseries/weights.hpp"

namespace innerseries {

inline constexpr const char* kFrameFieldSchema = "innerseries.frame_field/1";
inline constexpr const char* kGridSchema = "innerseries.grid/1";
inline constexpr const char* kMomentsSchema = "innerseries.moments/1";
inline constexpr const char* kReportSchema = "innerseries.report/1";

std::string format_real(double v);

std::string frame_field_to_json(const FrameField& field);
FrameField frame_field_from_json(const std::string& text);
void write_frame_field(const std::string& path, const FrameField& field);
FrameField read_frame_field(const std::string& path);

nlohmann::json grid_to_json(const BinGrid& grid);
nlohmann::json moments_to_json(const GridGeometry& grid, const MomentMap& moments);

/// Signed permutations are written 1-based: {"perm":[2,1],"signs":[1,-1]}.
nlohmann::json to_json(const SignedPermutation& p);
SignedPermutation signed_permutation_from_json(const nlohmann::json& j);

nlohmann::json to_json(const WeightAlignment& a);
nlohmann::json to_json(const SeparabilityReport& r);

/// {"kind":"affine","scale":[2],"offset":[1]}, {"kind":"affine","matrix":[[..]]},
/// {"kind":"monotone-polynomial","coefficients":[..],"domain":[lo,hi]},
/// {"kind":"audio-mixing"}, {"kind":"custom-table","x":[..],"y":[..]}.
TransformSpec transform_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TransformSpec& spec);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace innerseries
