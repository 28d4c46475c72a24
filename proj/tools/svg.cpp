#include "svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace timecf::cli {

namespace {

constexpr double kWidth = 800, kHeight = 320;
constexpr double kLeft = 50, kRight = 20, kTop = 30, kBottom = 30;

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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string explanation_svg(const TimeSeries& original, const CounterfactualResult* cf, const std::string& title,
                            const std::string& metadata_json) {
  const std::size_t n = original.size();
  double lo = *std::min_element(original.values().begin(), original.values().end());
  double hi = *std::max_element(original.values().begin(), original.values().end());
  if (cf) {
    for (std::size_t t = cf->interval.start; t < cf->interval.end(); ++t) {
      lo = std::min(lo, cf->counterfactual[t]);
      hi = std::max(hi, cf->counterfactual[t]);
    }
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto x = [&](std::size_t t) { return kLeft + (n > 1 ? pw * static_cast<double>(t) / static_cast<double>(n - 1) : 0.0); };
  auto y = [&](double v) { return kTop + ph * (hi - v) / (hi - lo); };
  auto points = [&](const TimeSeries& s, std::size_t from, std::size_t to) {
    std::string p;
    for (std::size_t t = from; t < to; ++t) {
      if (!p.empty()) p += ' ';
      p += num(x(t)) + "," + num(y(s[t]));
    }
    return p;
  };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<metadata>" << escape(metadata_json) << "</metadata>\n"
     << "<title>" << escape(title) << "</title>\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<line class=\"axis\" x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(kLeft + pw)
     << "\" y2=\"" << num(kTop + ph) << "\" stroke=\"black\"/>\n"
     << "<line class=\"axis\" x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
     << "\" y2=\"" << num(kTop + ph) << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << num(kLeft - 5) << "\" y=\"" << num(kTop + 4) << "\" font-size=\"10\" text-anchor=\"end\">"
     << num(hi) << "</text>\n"
     << "<text x=\"" << num(kLeft - 5) << "\" y=\"" << num(kTop + ph) << "\" font-size=\"10\" text-anchor=\"end\">"
     << num(lo) << "</text>\n"
     << "<text x=\"" << num(kLeft + pw) << "\" y=\"" << num(kTop + ph + 15) << "\" font-size=\"10\" text-anchor=\"end\">"
     << n - 1 << "</text>\n"
     << "<text x=\"" << num(kLeft) << "\" y=\"18\" font-size=\"12\">" << escape(title) << "</text>\n"
     << "<polyline class=\"original\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\""
     << points(original, 0, n) << "\"/>\n";
  if (cf)
    os << "<polyline class=\"counterfactual\" fill=\"none\" stroke=\"#ff7f0e\" stroke-width=\"2\" points=\""
       << points(cf->counterfactual, cf->interval.start, cf->interval.end()) << "\"/>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace timecf::cli
