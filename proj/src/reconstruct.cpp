#include "innerseries/reconstruct.hpp"

#include <array>

#include "innerseries/weights.hpp"

namespace innerseries {

Trajectory Reconstruction::trajectory(std::vector<std::string> names) const {
  return Trajectory(samples, dt, std::move(names));
}

Reconstruction integrate_weights(const WeightSeries& w, const FrameField& field,
                                 const Eigen::VectorXd& x0, Eigen::Index steps,
                                 Eigen::Index start) {
  const int dims = field.dims();
  require(!field.frames.empty(), ErrorCode::kEmpty, "frame field is empty");
  require(w.dims() == dims && x0.size() == dims, ErrorCode::kDimensionMismatch,
          "weights, field and x0 dimensions differ");
  require(steps >= 0 && start >= 0 && start + steps <= w.size(),
          ErrorCode::kInvalidArgument, "steps exceed the weight series length");
  require(field.grid.locate(std::span<const double>(x0.data(), dims)).has_value(),
          ErrorCode::kDomain, "x0 lies outside the field's grid");

  Reconstruction out;
  out.dt = w.dt;
  out.samples.resize(steps + 1, dims);
  out.samples.row(0) = x0.transpose();
  Eigen::VectorXd x = x0;
  for (Eigen::Index k = 0; k < steps; ++k) {
    const auto bin = resolve_bin(field, std::span<const double>(x.data(), dims));
    if (!bin) {
      out.truncated = true;
      break;
    }
    const Eigen::Index idx = start + k;
    if (w.valid[idx]) {
      const LocalFrame& frame = field.frames.at(*bin);
      x += w.dt * (frame.v * w.values.row(idx).transpose());
    } else {
      ++out.skipped_weights;
    }
    out.samples.row(k + 1) = x.transpose();
    out.steps_taken = k + 1;
  }
  out.samples.conservativeResize(out.steps_taken + 1, dims);
  return out;
}

}  // namespace innerseries
