#pragma once

// Self-contained SVG emission for validation figures: one panel per monitor,
// reference trace as a solid line, model trace as markers. Output bytes are
// deterministic for identical inputs (fixed layout, to_chars number
// formatting, no timestamps).

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <string>

#include "lplsp/types.hpp"

namespace lplsp {

namespace detail {

inline std::string svg_num(double value) {
  char buf[48];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 8);
  return std::string(buf, res.ptr);
}

struct PanelLayout {
  static constexpr double width = 840.0;
  static constexpr double height = 190.0;
  static constexpr double left = 70.0;
  static constexpr double right = 20.0;
  static constexpr double top = 26.0;
  static constexpr double bottom = 34.0;

  double plot_w() const { return width - left - right; }
  double plot_h() const { return height - top - bottom; }
};

inline void emit_panel(std::ostream& out, const PanelLayout& layout,
                       double y_offset, const std::string& title,
                       const TimeGrid& grid, const Vector& line_trace,
                       const Vector* marker_trace) {
  const Index t_len = grid.size();
  const double t_min = grid(0);
  const double t_max = grid(t_len - 1);
  double y_min = line_trace.minCoeff();
  double y_max = line_trace.maxCoeff();
  if (marker_trace != nullptr) {
    y_min = std::min(y_min, marker_trace->minCoeff());
    y_max = std::max(y_max, marker_trace->maxCoeff());
  }
  const double pad = (y_max - y_min) > 0.0 ? 0.05 * (y_max - y_min) : 1.0;
  y_min -= pad;
  y_max += pad;

  const auto x_of = [&](double t) {
    return layout.left + (t - t_min) / (t_max - t_min) * layout.plot_w();
  };
  const auto y_of = [&](double v) {
    return y_offset + layout.top +
           (y_max - v) / (y_max - y_min) * layout.plot_h();
  };

  out << "<rect x=\"" << svg_num(layout.left) << "\" y=\""
      << svg_num(y_offset + layout.top) << "\" width=\""
      << svg_num(layout.plot_w()) << "\" height=\"" << svg_num(layout.plot_h())
      << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << svg_num(layout.left) << "\" y=\""
      << svg_num(y_offset + layout.top - 8.0)
      << "\" font-family=\"sans-serif\" font-size=\"13\">" << title
      << "</text>\n";

  // Axis extent labels.
  out << "<text x=\"" << svg_num(layout.left) << "\" y=\""
      << svg_num(y_offset + layout.height - 12.0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << svg_num(t_min)
      << "</text>\n";
  out << "<text x=\"" << svg_num(layout.left + layout.plot_w() - 40.0)
      << "\" y=\"" << svg_num(y_offset + layout.height - 12.0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << svg_num(t_max)
      << "</text>\n";
  out << "<text x=\"" << svg_num(layout.left + layout.plot_w() / 2.0 - 24.0)
      << "\" y=\"" << svg_num(y_offset + layout.height - 12.0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">time (s)</text>\n";
  out << "<text x=\"6\" y=\"" << svg_num(y_offset + layout.top + 12.0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << svg_num(y_max)
      << "</text>\n";
  out << "<text x=\"6\" y=\"" << svg_num(y_offset + layout.top + layout.plot_h())
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << svg_num(y_min)
      << "</text>\n";
  out << "<text x=\"6\" y=\""
      << svg_num(y_offset + layout.top + layout.plot_h() / 2.0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">degC</text>\n";

  out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (Index s = 0; s < t_len; ++s) {
    if (s > 0) out << ' ';
    out << svg_num(x_of(grid(s))) << ',' << svg_num(y_of(line_trace(s)));
  }
  out << "\"/>\n";

  if (marker_trace != nullptr) {
    const Index stride = std::max<Index>(1, t_len / 120);
    for (Index s = 0; s < t_len; s += stride) {
      out << "<circle cx=\"" << svg_num(x_of(grid(s))) << "\" cy=\""
          << svg_num(y_of((*marker_trace)(s)))
          << "\" r=\"2.5\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.2\"/>\n";
    }
  }
}

inline void emit_document(std::ostream& out, Index panels,
                          const std::function<void(std::ostream&, Index, double)>& body) {
  const PanelLayout layout;
  const double total_h = layout.height * static_cast<double>(panels) + 10.0;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << svg_num(layout.width) << "\" height=\"" << svg_num(total_h)
      << "\" viewBox=\"0 0 " << svg_num(layout.width) << ' ' << svg_num(total_h)
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  for (Index i = 0; i < panels; ++i) {
    body(out, i, layout.height * static_cast<double>(i));
  }
  out << "</svg>\n";
}

}  // namespace detail

// Measured (solid line) vs predicted (markers), one panel per monitor.
inline void write_validation_plot(const TimeGrid& grid,
                                  const TemperatureSeries& measured,
                                  const TemperatureSeries& predicted,
                                  const std::string& path) {
  if (measured.monitor_count() != predicted.monitor_count() ||
      measured.sample_count() != predicted.sample_count() ||
      measured.sample_count() != grid.size()) {
    throw DimensionError("write_validation_plot: shapes do not match");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IOError("cannot open '" + path + "' for writing");
  }
  const detail::PanelLayout layout;
  detail::emit_document(
      out, measured.monitor_count(), [&](std::ostream& os, Index i, double y0) {
        const Vector meas = measured.row(i).transpose();
        const Vector pred = predicted.row(i).transpose();
        detail::emit_panel(os, layout, y0, "T" + std::to_string(i + 1), grid,
                           meas, &pred);
      });
  if (!out) {
    throw IOError("write failed for '" + path + "'");
  }
}

// Line-only trace panels (used for prediction output).
inline void write_traces_plot(const TimeGrid& grid,
                              const TemperatureSeries& traces,
                              const std::string& path) {
  if (traces.sample_count() != grid.size()) {
    throw DimensionError("write_traces_plot: shapes do not match");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IOError("cannot open '" + path + "' for writing");
  }
  const detail::PanelLayout layout;
  detail::emit_document(out, traces.monitor_count(),
                        [&](std::ostream& os, Index i, double y0) {
                          const Vector trace = traces.row(i).transpose();
                          detail::emit_panel(os, layout, y0,
                                             "T" + std::to_string(i + 1), grid,
                                             trace, nullptr);
                        });
  if (!out) {
    throw IOError("write failed for '" + path + "'");
  }
}

}  // namespace lplsp
