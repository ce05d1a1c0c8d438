#include "vitreg/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "vitreg/error.hpp"

namespace vitreg {

namespace {

constexpr double kWidth = 480, kHeight = 360, kMargin = 50;

struct Frame {
  double x_min, x_max, y_min, y_max;

  double px(double x) const { return kMargin + (x - x_min) / (x_max - x_min) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y_min) / (y_max - y_min) * (kHeight - 2 * kMargin); }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

void open_svg(std::ostringstream& s, const Frame& f, const std::string& title, const std::string& x_label,
              const std::string& y_label) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n"
    << "<line x1=\"" << f.px(f.x_min) << "\" y1=\"" << f.py(f.y_min) << "\" x2=\"" << f.px(f.x_max) << "\" y2=\""
    << f.py(f.y_min) << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << f.px(f.x_min) << "\" y1=\"" << f.py(f.y_min) << "\" x2=\"" << f.px(f.x_min) << "\" y2=\""
    << f.py(f.y_max) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x_min + (f.x_max - f.x_min) * i / 4;
    const double y = f.y_min + (f.y_max - f.y_min) * i / 4;
    s << "<text x=\"" << f.px(x) << "\" y=\"" << f.py(f.y_min) + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
      << num(x) << "</text>\n"
      << "<text x=\"" << f.px(f.x_min) - 6 << "\" y=\"" << f.py(y) + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
      << num(y) << "</text>\n";
  }
  s << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << x_label << "</text>\n"
    << "<text x=\"14\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
    << kHeight / 2 << ")\">" << y_label << "</text>\n";
}

void save(const std::filesystem::path& path, std::ostringstream& s) {
  s << "</svg>\n";
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::kIo, "cannot write plot '" + path.string() + "'");
  out << s.str();
}

}  // namespace

void write_cmc_svg(const std::filesystem::path& path, const std::vector<CmcPoint>& curve) {
  require(!curve.empty(), ErrorKind::kArgument, "empty CMC curve");
  Frame f{curve.front().threshold, std::max(curve.back().threshold, curve.front().threshold + 1e-9), 0.0, 1.0};
  std::ostringstream s;
  open_svg(s, f, "Cumulative matching curve", "absolute error threshold", "fraction of images");
  s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const CmcPoint& p : curve) s << f.px(p.threshold) << ',' << f.py(p.fraction) << ' ';
  s << "\"/>\n";
  save(path, s);
}

void write_histogram_svg(const std::filesystem::path& path, const std::vector<HistogramBin>& bins) {
  require(!bins.empty(), ErrorKind::kArgument, "empty histogram");
  std::size_t peak = 1;
  for (const HistogramBin& b : bins) peak = std::max(peak, b.count);
  Frame f{bins.front().low, bins.back().high, 0.0, static_cast<double>(peak)};
  std::ostringstream s;
  open_svg(s, f, "Histogram of absolute errors", "absolute error", "images");
  for (const HistogramBin& b : bins) {
    s << "<rect x=\"" << f.px(b.low) << "\" y=\"" << f.py(static_cast<double>(b.count)) << "\" width=\""
      << f.px(b.high) - f.px(b.low) << "\" height=\"" << f.py(0) - f.py(static_cast<double>(b.count))
      << "\" fill=\"steelblue\" stroke=\"white\"/>\n";
  }
  save(path, s);
}

void write_scatter_svg(const std::filesystem::path& path, const std::vector<PredictionRecord>& predictions,
                       std::optional<double> display_max) {
  require(!predictions.empty(), ErrorKind::kArgument, "no predictions to plot");
  double hi = display_max.value_or(0.0);
  if (!display_max) {
    for (const PredictionRecord& p : predictions) hi = std::max({hi, p.y_true, p.p_total});
  }
  hi = std::max(hi, 1.0);
  Frame f{0.0, hi, 0.0, hi};
  std::ostringstream s;
  open_svg(s, f, "Predicted vs. ground-truth score", "ground truth", "prediction");
  s << "<line x1=\"" << f.px(0) << "\" y1=\"" << f.py(0) << "\" x2=\"" << f.px(hi) << "\" y2=\"" << f.py(hi)
    << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  for (const PredictionRecord& p : predictions) {
    const double y = display_max ? std::clamp(p.p_total, 0.0, *display_max) : p.p_total;
    s << "<circle cx=\"" << f.px(p.y_true) << "\" cy=\"" << f.py(y) << "\" r=\"3\" fill=\"steelblue\" "
      << "fill-opacity=\"0.6\"/>\n";
  }
  save(path, s);
}

}  // namespace vitreg
