#include "dynssv/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dynssv {

namespace {

struct Range {
  double lo = 0.0, hi = 1.0;
  void absorb(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

// Round tick spacing to 1, 2, or 5 times a power of ten.
std::vector<double> ticks(double lo, double hi, int want = 6) {
  const double span = hi - lo;
  double step = std::pow(10.0, std::floor(std::log10(span / want)));
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (span / (step * mult) <= want) {
      step *= mult;
      break;
    }
  }
  std::vector<double> out;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span;
       v += step)
    out.push_back(std::fabs(v) < 1e-12 * span ? 0.0 : v);
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)),
      x_label_(std::move(x_label)),
      y_label_(std::move(y_label)) {}

void SvgPlot::polyline(std::span<const double> x, std::span<const double> y,
                       const std::string& color, double width,
                       double opacity) {
  if (x.size() != y.size())
    throw std::invalid_argument("svg polyline: size mismatch");
  Series s;
  s.x.assign(x.begin(), x.end());
  s.y.assign(y.begin(), y.end());
  s.color = color;
  s.width = width;
  s.opacity = opacity;
  series_.push_back(std::move(s));
}

void SvgPlot::band(std::span<const double> x, std::span<const double> lo,
                   std::span<const double> hi, const std::string& color,
                   double opacity) {
  if (x.size() != lo.size() || x.size() != hi.size())
    throw std::invalid_argument("svg band: size mismatch");
  Series s;
  s.filled = true;
  s.x.assign(x.begin(), x.end());
  s.y.assign(lo.begin(), lo.end());
  s.y2.assign(hi.begin(), hi.end());
  s.color = color;
  s.opacity = opacity;
  series_.push_back(std::move(s));
}

std::string SvgPlot::render(int pixel_width, int pixel_height) const {
  const double ml = 64, mr = 16, mt = 34, mb = 46;
  const double pw = pixel_width - ml - mr, ph = pixel_height - mt - mb;

  Range rx, ry;
  rx.lo = ry.lo = std::numeric_limits<double>::infinity();
  rx.hi = ry.hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : series_) {
    for (double v : s.x) rx.absorb(v);
    for (double v : s.y) ry.absorb(v);
    for (double v : s.y2) ry.absorb(v);
  }
  if (!(rx.lo < rx.hi)) rx = {rx.lo - 1.0, rx.lo + 1.0};
  if (!(ry.lo < ry.hi)) ry = {ry.lo - 1.0, ry.lo + 1.0};
  const double pad = 0.04 * (ry.hi - ry.lo);
  ry.lo -= pad;
  ry.hi += pad;

  const auto px = [&](double v) {
    return ml + (v - rx.lo) / (rx.hi - rx.lo) * pw;
  };
  const auto py = [&](double v) {
    return mt + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph;
  };

  std::ostringstream os;
  os.precision(8);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pixel_width
     << "\" height=\"" << pixel_height << "\" viewBox=\"0 0 " << pixel_width
     << ' ' << pixel_height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"14\">"
     << title_ << "</text>\n";

  for (double t : ticks(rx.lo, rx.hi)) {
    os << "<line x1=\"" << px(t) << "\" y1=\"" << mt + ph << "\" x2=\""
       << px(t) << "\" y2=\"" << mt + ph + 4 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px(t) << "\" y=\"" << mt + ph + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << fmt(t) << "</text>\n";
  }
  for (double t : ticks(ry.lo, ry.hi)) {
    os << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(t) << "\" x2=\"" << ml
       << "\" y2=\"" << py(t) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml - 7 << "\" y=\"" << py(t) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << fmt(t) << "</text>\n";
  }
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << pixel_height - 8
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"12\">"
     << x_label_ << "</text>\n";
  os << "<text x=\"14\" y=\"" << mt + ph / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"12\" transform=\"rotate(-90 14 "
     << mt + ph / 2 << ")\">" << y_label_ << "</text>\n";

  for (const auto& s : series_) {
    if (s.filled) {
      // One polygon per contiguous finite stretch.
      std::size_t i = 0;
      while (i < s.x.size()) {
        while (i < s.x.size() &&
               !(std::isfinite(s.y[i]) && std::isfinite(s.y2[i])))
          ++i;
        std::size_t j = i;
        while (j < s.x.size() && std::isfinite(s.y[j]) &&
               std::isfinite(s.y2[j]))
          ++j;
        if (j > i + 1) {
          os << "<path fill=\"" << s.color << "\" fill-opacity=\""
             << s.opacity << "\" stroke=\"none\" d=\"M";
          for (std::size_t k = i; k < j; ++k)
            os << ' ' << px(s.x[k]) << ' ' << py(s.y2[k]);
          for (std::size_t k = j; k-- > i;)
            os << ' ' << px(s.x[k]) << ' ' << py(s.y[k]);
          os << " Z\"/>\n";
        }
        i = j;
      }
    } else {
      std::size_t i = 0;
      while (i < s.x.size()) {
        while (i < s.x.size() && !std::isfinite(s.y[i])) ++i;
        std::size_t j = i;
        while (j < s.x.size() && std::isfinite(s.y[j])) ++j;
        if (j > i) {
          os << "<polyline fill=\"none\" stroke=\"" << s.color
             << "\" stroke-width=\"" << s.width << "\" stroke-opacity=\""
             << s.opacity << "\" points=\"";
          for (std::size_t k = i; k < j; ++k)
            os << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
          os << "\"/>\n";
        }
        i = j;
      }
    }
  }

  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
     << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace dynssv
