#include "synaudit/svg.hpp"

#include <cstdio>

namespace synaudit {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string svg_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

SvgDocument::SvgDocument(double width, double height) : width_(width), height_(height) {}

void SvgDocument::rect(double x, double y, double w, double h, const std::string& fill,
                       double opacity, const std::string& stroke) {
  std::string e = "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
                  "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"";
  if (opacity != 1.0) e += " fill-opacity=\"" + num(opacity) + "\"";
  if (!stroke.empty()) e += " stroke=\"" + stroke + "\"";
  e += "/>";
  elements_.push_back(std::move(e));
}

void SvgDocument::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                       double width, double opacity) {
  std::string e = "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
                  "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                  num(width) + "\"";
  if (opacity != 1.0) e += " stroke-opacity=\"" + num(opacity) + "\"";
  e += "/>";
  elements_.push_back(std::move(e));
}

void SvgDocument::polyline(const std::vector<std::pair<double, double>>& points,
                           const std::string& stroke, double width, double opacity) {
  std::string e = "<polyline points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) e += ' ';
    e += num(points[i].first) + "," + num(points[i].second);
  }
  e += "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"";
  if (opacity != 1.0) e += " stroke-opacity=\"" + num(opacity) + "\"";
  e += "/>";
  elements_.push_back(std::move(e));
}

void SvgDocument::circle(double cx, double cy, double r, const std::string& fill) {
  elements_.push_back("<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
                      "\" fill=\"" + fill + "\"/>");
}

void SvgDocument::text(double x, double y, const std::string& content, double size, Anchor anchor,
                       const std::string& fill, double rotate) {
  std::string e = "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
                  "\" font-family=\"sans-serif\" fill=\"" + fill + "\"";
  if (anchor == Anchor::Middle) e += " text-anchor=\"middle\"";
  if (anchor == Anchor::End) e += " text-anchor=\"end\"";
  if (rotate != 0.0) {
    e += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
  }
  e += ">" + svg_escape(content) + "</text>";
  elements_.push_back(std::move(e));
}

std::string SvgDocument::str() const {
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
                    num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " +
                    num(width_) + " " + num(height_) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(width_) + "\" height=\"" + num(height_) +
         "\" fill=\"#ffffff\"/>\n";
  for (const auto& e : elements_) {
    out += e;
    out += '\n';
  }
  out += "</svg>\n";
  return out;
}

}  // namespace synaudit
