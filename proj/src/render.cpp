#include "synaudit/render.hpp"

#include <algorithm>
#include <cmath>

#include "synaudit/svg.hpp"

namespace synaudit {

namespace {

constexpr double kWidth = 800, kHeight = 500;
const char* kReal = "#4878cf";
const char* kSynthetic = "#ee854a";
const char* kPdp = "#d62728";
const char* kPositive = "#d62728";
const char* kNegative = "#1f77b4";
const char* kGrey = "#888888";

struct Quartiles {
  double min, q1, med, q3, max;
};

Quartiles quartiles_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return {v.front(), quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75), v.back()};
}

std::string shorten(const std::string& s, std::size_t n = 22) {
  if (s.size() <= n) return s;
  return s.substr(0, n - 1) + "~";
}

std::string join_features(const std::vector<std::string>& fs) {
  std::string out;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (i) out += " x ";
    out += fs[i];
  }
  return out;
}

void bar_panel(SvgDocument& svg, const ImportanceReport& report, const std::string& title,
               double x0, double panel_w, int top_k) {
  std::vector<const ImportanceEntry*> entries;
  for (const auto& e : report.entries) entries.push_back(&e);
  std::sort(entries.begin(), entries.end(), [](const ImportanceEntry* a, const ImportanceEntry* b) {
    if (a->mean != b->mean) return a->mean > b->mean;
    return a->features < b->features;
  });
  if (top_k > 0 && entries.size() > static_cast<std::size_t>(top_k)) entries.resize(top_k);

  const double top = 60, bottom = kHeight - 40;
  const double label_w = 130;
  const double plot_x = x0 + label_w, plot_w = panel_w - label_w - 20;
  double max_val = 1e-12;
  for (const auto* e : entries) {
    max_val = std::max(max_val, e->mean);
    for (double v : e->values) max_val = std::max(max_val, v);
  }
  auto sx = [&](double v) { return plot_x + std::max(v, 0.0) / max_val * plot_w; };

  svg.text(x0 + panel_w / 2, 30, title, 15, SvgDocument::Anchor::Middle);
  svg.line(plot_x, top, plot_x, bottom, kGrey);
  svg.line(plot_x, bottom, plot_x + plot_w, bottom, kGrey);
  svg.text(plot_x + plot_w, bottom + 16, format_double(max_val).substr(0, 6), 10,
           SvgDocument::Anchor::End);
  svg.text(plot_x, bottom + 16, "0", 10, SvgDocument::Anchor::Middle);

  double row_h = (bottom - top) / std::max<std::size_t>(entries.size(), 1);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = *entries[i];
    double cy = top + row_h * (static_cast<double>(i) + 0.5);
    svg.text(plot_x - 6, cy + 4, shorten(join_features(e.features)), 11,
             SvgDocument::Anchor::End);
    if (e.values.size() >= 3) {
      Quartiles q = quartiles_of(e.values);
      double h = std::min(row_h * 0.5, 14.0);
      svg.line(sx(q.min), cy, sx(q.max), cy, kGrey, 1.0);
      svg.rect(sx(q.q1), cy - h / 2, std::max(sx(q.q3) - sx(q.q1), 0.5), h, kReal, 0.6, kGrey);
      svg.line(sx(q.med), cy - h / 2, sx(q.med), cy + h / 2, "#222222", 1.5);
    } else {
      double h = std::min(row_h * 0.6, 16.0);
      svg.rect(plot_x, cy - h / 2, std::max(sx(e.mean) - plot_x, 0.5), h, kReal, 0.85);
    }
  }
}

}  // namespace

std::string render_importance(
    const std::vector<std::pair<std::string, ImportanceReport>>& reports, int top_k) {
  if (reports.empty()) throw ValidationError("render_importance: empty section");
  SvgDocument svg(kWidth, kHeight);
  double panel_w = kWidth / static_cast<double>(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].second.entries.empty()) {
      throw ValidationError("render_importance: report '" + reports[i].first + "' is empty");
    }
    bar_panel(svg, reports[i].second, reports[i].first,
              panel_w * static_cast<double>(i), panel_w, top_k);
  }
  return svg.str();
}

std::string render_interactions(const ImportanceReport& report, int top_k) {
  if (report.entries.empty()) throw ValidationError("render_interactions: empty section");
  SvgDocument svg(kWidth, kHeight);
  bar_panel(svg, report, "interaction importance (degree 1 and 2)", 0, kWidth, top_k);
  return svg.str();
}

// --- effects -----------------------------------------------------------------

namespace {

void numeric_effect(SvgDocument& svg, const EffectResult& effect, std::size_t max_curves) {
  const double left = 70, right = kWidth - 30, top = 50;
  const double hist_h = 70;
  const double bottom = kHeight - 60 - hist_h;
  const auto& pts = effect.grid.points;
  double xmin = pts.front(), xmax = pts.back();
  if (xmax == xmin) xmax = xmin + 1;
  auto sx = [&](double v) { return left + (v - xmin) / (xmax - xmin) * (right - left); };
  auto sy = [&](double p) { return bottom - p * (bottom - top); };

  svg.text(kWidth / 2, 26, "ICE / PDP: " + effect.grid.feature, 15, SvgDocument::Anchor::Middle);

  // flag shading first so curves draw over it
  for (const auto& f : effect.flags) {
    double x0 = sx(f.lo), x1 = sx(f.hi);
    if (x1 - x0 < 2) {
      x0 -= 1;
      x1 += 1;
    }
    svg.rect(x0, top, x1 - x0, bottom - top,
             f.kind == RegionFlagKind::UnrealisticSynthetic ? kSynthetic : kReal, 0.15);
  }

  // axes and the 0.5 +- delta band
  svg.line(left, top, left, bottom, kGrey);
  svg.line(left, bottom, right, bottom, kGrey);
  for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    svg.line(left - 4, sy(p), left, sy(p), kGrey);
    svg.text(left - 8, sy(p) + 4, format_double(p), 10, SvgDocument::Anchor::End);
  }
  svg.line(left, sy(0.5 - effect.delta), right, sy(0.5 - effect.delta), kGrey, 0.7, 0.6);
  svg.line(left, sy(0.5 + effect.delta), right, sy(0.5 + effect.delta), kGrey, 0.7, 0.6);
  for (int t = 0; t <= 4; ++t) {
    double v = xmin + (xmax - xmin) * t / 4.0;
    svg.line(sx(v), bottom, sx(v), bottom + 4, kGrey);
    svg.text(sx(v), bottom + 16, format_double(std::round(v * 100) / 100), 10,
             SvgDocument::Anchor::Middle);
  }
  svg.text(left - 50, (top + bottom) / 2, "C(x)", 12, SvgDocument::Anchor::Middle, "#333333",
           -90);

  // stratified curve cap: first max_curves/2 per label in row order
  std::size_t shown[2] = {0, 0};
  for (std::size_t i = 0; i < effect.ice.size(); ++i) {
    int label = effect.instance_labels[i] == 1 ? 1 : 0;
    if (shown[label] >= max_curves / 2) continue;
    ++shown[label];
    std::vector<std::pair<double, double>> line;
    for (std::size_t g = 0; g < pts.size(); ++g) line.emplace_back(sx(pts[g]), sy(effect.ice[i][g]));
    svg.polyline(line, label ? kReal : kSynthetic, 0.8, 0.25);
  }

  if (!effect.pdp.empty()) {
    std::vector<std::pair<double, double>> line;
    for (std::size_t g = 0; g < pts.size(); ++g) line.emplace_back(sx(pts[g]), sy(effect.pdp[g]));
    svg.polyline(line, kPdp, 2.5);
  }

  // marginal histograms: real above the strip's midline, synthetic below
  const auto& ann = effect.annotation;
  if (!ann.bin_edges.empty()) {
    double mid = kHeight - 60 - hist_h / 2;
    double peak = 1e-12;
    for (double f : ann.real_frequency) peak = std::max(peak, f);
    for (double f : ann.synthetic_frequency) peak = std::max(peak, f);
    for (std::size_t b = 0; b + 1 < ann.bin_edges.size(); ++b) {
      double x0 = sx(std::max(ann.bin_edges[b], xmin));
      double x1 = sx(std::min(ann.bin_edges[b + 1], xmax));
      if (x1 <= x0) continue;
      double hr = ann.real_frequency[b] / peak * (hist_h / 2 - 2);
      double hs = ann.synthetic_frequency[b] / peak * (hist_h / 2 - 2);
      if (hr > 0) svg.rect(x0, mid - hr, x1 - x0, hr, kReal, 0.7);
      if (hs > 0) svg.rect(x0, mid, x1 - x0, hs, kSynthetic, 0.7);
    }
    svg.line(left, mid, right, mid, kGrey, 0.5);
    svg.text(right, mid - hist_h / 2 + 2, "real", 10, SvgDocument::Anchor::End, kReal);
    svg.text(right, mid + hist_h / 2 + 2, "synthetic", 10, SvgDocument::Anchor::End, kSynthetic);
  }
}

void categorical_effect_chart(SvgDocument& svg, const EffectResult& effect) {
  const double left = 70, right = kWidth - 30, top = 50;
  const double freq_h = 90;
  const double bottom = kHeight - 70 - freq_h;
  const auto& labels = effect.grid.labels;
  auto n = static_cast<double>(labels.size());
  auto slot_x = [&](std::size_t k) {
    return left + (static_cast<double>(k) + 0.5) / n * (right - left);
  };
  auto sy = [&](double p) { return bottom - p * (bottom - top); };

  svg.text(kWidth / 2, 26, "per-class ICE / PDP: " + effect.grid.feature, 15,
           SvgDocument::Anchor::Middle);
  svg.line(left, top, left, bottom, kGrey);
  svg.line(left, bottom, right, bottom, kGrey);
  for (double p : {0.0, 0.5, 1.0}) {
    svg.line(left - 4, sy(p), left, sy(p), kGrey);
    svg.text(left - 8, sy(p) + 4, format_double(p), 10, SvgDocument::Anchor::End);
  }
  svg.line(left, sy(0.5), right, sy(0.5), kGrey, 0.7, 0.6);

  double slot_w = (right - left) / n;
  double box_w = std::min(slot_w * 0.5, 40.0);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    double cx = slot_x(k);
    std::vector<double> vals;
    vals.reserve(effect.ice.size());
    for (const auto& curve : effect.ice) vals.push_back(curve[k]);
    Quartiles q = quartiles_of(vals);
    svg.line(cx, sy(q.min), cx, sy(q.max), kGrey, 1.0);
    svg.rect(cx - box_w / 2, sy(q.q3), box_w, std::max(sy(q.q1) - sy(q.q3), 0.5), "#cccccc",
             0.8, kGrey);
    svg.line(cx - box_w / 2, sy(q.med), cx + box_w / 2, sy(q.med), "#222222", 1.2);
    if (!effect.pdp.empty()) {
      svg.line(cx - box_w / 2 - 4, sy(effect.pdp[k]), cx + box_w / 2 + 4, sy(effect.pdp[k]),
               kPdp, 2.5);
    }
    svg.text(cx, bottom + 14, shorten(labels[k], 12), 10, SvgDocument::Anchor::Middle, "#333333",
             30);
  }

  // class frequencies, real and synthetic side by side
  const auto& ann = effect.annotation;
  double fbase = kHeight - 30;
  double peak = 1e-12;
  for (double f : ann.real_frequency) peak = std::max(peak, f);
  for (double f : ann.synthetic_frequency) peak = std::max(peak, f);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    double cx = slot_x(k);
    double hr = ann.real_frequency[k] / peak * (freq_h - 20);
    double hs = ann.synthetic_frequency[k] / peak * (freq_h - 20);
    svg.rect(cx - box_w / 2, fbase - hr, box_w / 2, hr, kReal, 0.8);
    svg.rect(cx, fbase - hs, box_w / 2, hs, kSynthetic, 0.8);
  }
  svg.text(left, fbase + 14, "class frequency (real vs synthetic)", 10);
}

}  // namespace

std::string render_effects(const EffectResult& effect, std::size_t max_curves) {
  if (effect.ice.empty()) throw ValidationError("render_effects: no curves");
  SvgDocument svg(kWidth, kHeight);
  if (effect.grid.kind == GridKind::Categories) {
    categorical_effect_chart(svg, effect);
  } else {
    numeric_effect(svg, effect, max_curves);
  }
  return svg.str();
}

// --- force / waterfall --------------------------------------------------------

namespace {

struct Term {
  std::string label;
  double value;
};

void waterfall_chart(SvgDocument& svg, const std::string& title, std::vector<Term> terms,
                     double base, double prediction, ValueScale scale, int top_k) {
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) {
    if (std::fabs(a.value) != std::fabs(b.value)) return std::fabs(a.value) > std::fabs(b.value);
    return a.label < b.label;
  });
  double shown_total = 0;
  std::vector<Term> shown;
  for (const auto& t : terms) {
    if (static_cast<int>(shown.size()) < top_k) {
      shown.push_back(t);
      shown_total += t.value;
    }
  }
  if (shown.size() < terms.size()) {
    // rest term keeps the running total exactly on the prediction
    shown.push_back({"rest (" + std::to_string(terms.size() - shown.size()) + " terms)",
                     (prediction - base) - shown_total});
  }

  const double left = 230, right = kWidth - 40, top = 70;
  const double bottom = kHeight - 50;
  double lo = std::min(base, prediction), hi = std::max(base, prediction);
  double run = base;
  for (const auto& t : shown) {
    run += t.value;
    lo = std::min(lo, run);
    hi = std::max(hi, run);
  }
  if (hi == lo) hi = lo + 1;
  double pad = (hi - lo) * 0.05;
  lo -= pad;
  hi += pad;
  auto sx = [&](double v) { return left + (v - lo) / (hi - lo) * (right - left); };

  svg.text(kWidth / 2, 26, title, 15, SvgDocument::Anchor::Middle);
  svg.text(kWidth / 2, 44,
           std::string("scale: ") + scale_name(scale) + "  base " + format_double(base) +
               "  prediction " + format_double(prediction),
           11, SvgDocument::Anchor::Middle, kGrey);

  svg.line(sx(base), top - 8, sx(base), bottom, kGrey, 1.0, 0.8);
  svg.text(sx(base), top - 12, "base", 10, SvgDocument::Anchor::Middle, kGrey);
  svg.line(sx(prediction), top - 8, sx(prediction), bottom, "#222222", 1.0, 0.8);
  svg.text(sx(prediction), top - 22, "prediction", 10, SvgDocument::Anchor::Middle);

  double row_h = (bottom - top) / std::max<std::size_t>(shown.size(), 1);
  double run2 = base;
  for (std::size_t i = 0; i < shown.size(); ++i) {
    double y = top + row_h * (static_cast<double>(i) + 0.5);
    double x0 = sx(run2);
    run2 += shown[i].value;
    double x1 = sx(run2);
    svg.text(left - 8, y + 4, shorten(shown[i].label, 30), 11, SvgDocument::Anchor::End);
    double h = std::min(row_h * 0.6, 18.0);
    svg.rect(std::min(x0, x1), y - h / 2, std::max(std::fabs(x1 - x0), 0.75), h,
             shown[i].value >= 0 ? kPositive : kNegative, 0.85);
    if (i + 1 < shown.size()) svg.line(x1, y, x1, y + row_h, kGrey, 0.5, 0.6);
  }
  // axis
  svg.line(left, bottom, right, bottom, kGrey);
  for (int t = 0; t <= 4; ++t) {
    double v = lo + (hi - lo) * t / 4.0;
    svg.line(sx(v), bottom, sx(v), bottom + 4, kGrey);
    svg.text(sx(v), bottom + 16, format_double(std::round(v * 1000) / 1000), 10,
             SvgDocument::Anchor::Middle);
  }
}

}  // namespace

std::string render_force(const std::vector<std::pair<std::string, ShapleyVector>>& vectors) {
  if (vectors.empty()) throw ValidationError("render_force: empty section");
  ValueScale scale = vectors.front().second.scale;
  for (const auto& [name, v] : vectors) {
    if (v.scale != scale) {
      throw ValidationError("render_force: mixed scales in one figure (" + name + ")");
    }
  }

  SvgDocument svg(kWidth, kHeight);
  svg.text(kWidth / 2, 26, "force decomposition", 15, SvgDocument::Anchor::Middle);
  svg.text(kWidth / 2, 44, std::string("scale: ") + scale_name(scale), 11,
           SvgDocument::Anchor::Middle, kGrey);

  double lo = 1e300, hi = -1e300;
  for (const auto& [name, v] : vectors) {
    double run = v.base_value;
    lo = std::min(lo, run);
    hi = std::max(hi, run);
    // positive pushes then negative pushes, strongest first
    std::vector<double> phis = v.phi;
    std::sort(phis.begin(), phis.end(), [](double a, double b) { return a > b; });
    for (double phi : phis) {
      run += phi;
      lo = std::min(lo, run);
      hi = std::max(hi, run);
    }
  }
  if (hi <= lo) hi = lo + 1;
  double pad = (hi - lo) * 0.05;
  lo -= pad;
  hi += pad;
  const double left = 120, right = kWidth - 40, top = 80;
  const double bottom = kHeight - 50;
  auto sx = [&](double v) { return left + (v - lo) / (hi - lo) * (right - left); };
  double row_h = (bottom - top) / static_cast<double>(vectors.size());

  for (std::size_t r = 0; r < vectors.size(); ++r) {
    const auto& [name, v] = vectors[r];
    double y = top + row_h * (static_cast<double>(r) + 0.5);
    svg.text(left - 8, y + 4, shorten(name, 16), 11, SvgDocument::Anchor::End);

    std::vector<std::size_t> order(v.phi.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (v.phi[a] != v.phi[b]) return v.phi[a] > v.phi[b];
      return a < b;
    });

    double run = v.base_value;
    double h = std::min(row_h * 0.45, 22.0);
    int labeled = 0;
    for (std::size_t i : order) {
      double x0 = sx(run);
      run += v.phi[i];
      double x1 = sx(run);
      if (std::fabs(x1 - x0) < 0.3) continue;
      svg.rect(std::min(x0, x1), y - h / 2, std::fabs(x1 - x0), h,
               v.phi[i] >= 0 ? kPositive : kNegative, 0.8);
      if (std::fabs(x1 - x0) > 40 && labeled < 6) {
        svg.text((x0 + x1) / 2, y - h / 2 - 4, v.features[i], 9, SvgDocument::Anchor::Middle,
                 kGrey);
        ++labeled;
      }
    }
    svg.line(sx(v.base_value), y - h, sx(v.base_value), y + h, kGrey, 1.0);
    svg.line(sx(v.prediction), y - h, sx(v.prediction), y + h, "#222222", 1.5);
    svg.text(sx(v.prediction), y + h + 12, format_double(std::round(v.prediction * 10000) / 10000),
             10, SvgDocument::Anchor::Middle);
  }

  svg.line(left, bottom, right, bottom, kGrey);
  for (int t = 0; t <= 4; ++t) {
    double v = lo + (hi - lo) * t / 4.0;
    svg.line(sx(v), bottom, sx(v), bottom + 4, kGrey);
    svg.text(sx(v), bottom + 16, format_double(std::round(v * 1000) / 1000), 10,
             SvgDocument::Anchor::Middle);
  }
  return svg.str();
}

std::string render_waterfall(const ShapleyVector& vector, int top_k) {
  std::vector<Term> terms;
  for (std::size_t i = 0; i < vector.phi.size(); ++i) {
    terms.push_back({vector.features[i], vector.phi[i]});
  }
  SvgDocument svg(kWidth, kHeight);
  waterfall_chart(svg, "waterfall: Shapley values", std::move(terms), vector.base_value,
                  vector.prediction, vector.scale, top_k);
  return svg.str();
}

std::string render_waterfall(const InteractionMatrix& matrix, int top_k) {
  std::vector<Term> terms;
  const auto p = matrix.features.size();
  for (std::size_t i = 0; i < p; ++i) {
    terms.push_back({matrix.features[i], matrix.values[i][i]});
    for (std::size_t j = i + 1; j < p; ++j) {
      terms.push_back({matrix.features[i] + " x " + matrix.features[j],
                       matrix.values[i][j] + matrix.values[j][i]});
    }
  }
  SvgDocument svg(kWidth, kHeight);
  waterfall_chart(svg, "waterfall: Shapley interaction values", std::move(terms),
                  matrix.base_value, matrix.prediction, matrix.scale, top_k);
  return svg.str();
}

}  // namespace synaudit
