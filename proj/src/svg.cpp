#include "innerseries/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "innerseries/serialize.hpp"

namespace innerseries {

namespace {

constexpr double kWidth = 720.0;
constexpr double kPanelHeight = 180.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kGap = 30.0;
constexpr int kTicks = 5;

struct Style {
  const char* color;
  double width;
};

Style style_for(std::size_t i) {
  static constexpr Style kStyles[] = {
      {"#000000", 1.0}, {"#999999", 3.0}, {"#1f77b4", 1.5}, {"#d62728", 1.5}, {"#2ca02c", 1.5}};
  return kStyles[std::min<std::size_t>(i, std::size(kStyles) - 1)];
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

bool drawn(const PlotSeries& s, Eigen::Index k) { return s.valid.empty() || s.valid[k]; }

}  // namespace

PlotSeries plot_series(const Trajectory& traj, std::string label) {
  return {std::move(label), traj.samples(), traj.dt(), {}};
}

PlotSeries plot_series(const WeightSeries& w, std::string label) {
  return {std::move(label), w.values, w.dt, w.valid};
}

std::string render_svg(const std::vector<PlotSeries>& series, Eigen::Index begin,
                       Eigen::Index end, const std::string& title) {
  require(!series.empty(), ErrorCode::kEmpty, "nothing to plot");
  require(begin >= 0 && end > begin, ErrorCode::kInvalidArgument, "empty plot window");
  Eigen::Index channels = 0;
  for (const auto& s : series) {
    require(end <= s.values.rows(), ErrorCode::kInvalidArgument,
            "plot window exceeds series '" + s.label + "'");
    require(s.valid.empty() || static_cast<Eigen::Index>(s.valid.size()) == s.values.rows(),
            ErrorCode::kDimensionMismatch, "mask length differs from series");
    channels = std::max(channels, s.values.cols());
  }
  const double dt = series.front().dt;
  const double t0 = static_cast<double>(begin) * dt;
  const double t1 = static_cast<double>(end - 1) * dt;
  const double plot_w = kWidth - kLeft - kRight;
  const double height = kTop + static_cast<double>(channels) * (kPanelHeight + kGap) + 30.0;

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    out += "<text x=\"" + num(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"14\">" + escape(title) + "</text>\n";
  }

  for (Eigen::Index c = 0; c < channels; ++c) {
    const double top = kTop + static_cast<double>(c) * (kPanelHeight + kGap);
    const double bottom = top + kPanelHeight;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : series) {
      if (c >= s.values.cols()) continue;
      for (Eigen::Index k = begin; k < end; ++k) {
        if (!drawn(s, k)) continue;
        lo = std::min(lo, s.values(k, c));
        hi = std::max(hi, s.values(k, c));
      }
    }
    if (!std::isfinite(lo)) {
      lo = -1.0;
      hi = 1.0;
    } else if (hi - lo <= 0.0) {
      const double pad = std::max(1.0, std::abs(lo));
      lo -= pad;
      hi += pad;
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
    auto sx = [&](Eigen::Index k) {
      return end - 1 == begin ? kLeft + plot_w / 2
                              : kLeft + plot_w * static_cast<double>(k - begin) /
                                            static_cast<double>(end - 1 - begin);
    };
    auto sy = [&](double v) { return bottom - kPanelHeight * (v - lo) / (hi - lo); };

    out += "<g class=\"panel\" id=\"channel" + std::to_string(c + 1) + "\">\n";
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(top) + "\" x2=\"" + num(kLeft) +
           "\" y2=\"" + num(bottom) + "\" stroke=\"#000\" stroke-width=\"1\"/>\n";
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(bottom) + "\" x2=\"" +
           num(kLeft + plot_w) + "\" y2=\"" + num(bottom) +
           "\" stroke=\"#000\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= kTicks; ++i) {
      const double v = lo + (hi - lo) * i / kTicks;
      const double y = sy(v);
      out += "<line x1=\"" + num(kLeft - 4) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft) +
             "\" y2=\"" + num(y) + "\" stroke=\"#000\"/>\n";
      out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(y + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
             label_num(v) + "</text>\n";
      const double t = t0 + (t1 - t0) * i / kTicks;
      const double x = kLeft + plot_w * i / kTicks;
      out += "<line x1=\"" + num(x) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(x) +
             "\" y2=\"" + num(bottom + 4) + "\" stroke=\"#000\"/>\n";
      out += "<text x=\"" + num(x) + "\" y=\"" + num(bottom + 15) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
             label_num(t) + "</text>\n";
    }
    // Later series underneath, so series 0 ends up on top.
    for (std::size_t si = series.size(); si-- > 0;) {
      const auto& s = series[si];
      if (c >= s.values.cols()) continue;
      const Style st = style_for(si);
      std::string points;
      auto flush = [&] {
        if (points.empty()) return;
        out += "<polyline fill=\"none\" stroke=\"" + std::string(st.color) +
               "\" stroke-width=\"" + num(st.width) + "\" points=\"" + points + "\"/>\n";
        points.clear();
      };
      for (Eigen::Index k = begin; k < end; ++k) {
        if (!drawn(s, k)) {
          flush();
          continue;
        }
        if (!points.empty()) points += ' ';
        points += num(sx(k)) + "," + num(sy(s.values(k, c)));
      }
      flush();
    }
    double legend_x = kLeft + 8;
    for (std::size_t si = 0; si < series.size(); ++si) {
      if (c >= series[si].values.cols()) continue;
      const Style st = style_for(si);
      out += "<text x=\"" + num(legend_x) + "\" y=\"" + num(top + 12) +
             "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" + st.color + "\">" +
             escape(series[si].label) + " [" + std::to_string(c + 1) + "]</text>\n";
      legend_x += 150;
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

void plot_svg(const std::vector<PlotSeries>& series, Eigen::Index begin, Eigen::Index end,
              const std::string& path, const std::string& title) {
  write_text_file(path, render_svg(series, begin, end, title));
}

}  // namespace innerseries
