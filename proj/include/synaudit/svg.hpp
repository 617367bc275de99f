#pragma once

#include <string>
#include <vector>

namespace synaudit {

// Minimal deterministic SVG 1.1 writer: fixed attribute order, fixed "%.2f"
// coordinate formatting, no timestamps or generator metadata.
class SvgDocument {
 public:
  SvgDocument(double width = 800, double height = 500);

  void rect(double x, double y, double w, double h, const std::string& fill,
            double opacity = 1.0, const std::string& stroke = "");
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, double opacity = 1.0);
  void polyline(const std::vector<std::pair<double, double>>& points, const std::string& stroke,
                double width = 1.0, double opacity = 1.0);
  void circle(double cx, double cy, double r, const std::string& fill);
  enum class Anchor { Start, Middle, End };
  void text(double x, double y, const std::string& content, double size = 12,
            Anchor anchor = Anchor::Start, const std::string& fill = "#333333",
            double rotate = 0.0);

  double width() const { return width_; }
  double height() const { return height_; }
  std::string str() const;

 private:
  double width_, height_;
  std::vector<std::string> elements_;
};

std::string svg_escape(const std::string& s);

}  // namespace synaudit
