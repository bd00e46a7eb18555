/*
 * Copyright 2026 The pcplod Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "pcplod/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

#include "pcplod/error.hpp"

namespace fs = std::filesystem;

namespace pcplod {

double quantile_type7(std::vector<double> values, double prob) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("quantile probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::optional<ScenarioKey> parse_scenario_label(const std::string& label) {
  static const std::regex re(R"(p(\d+)_([a-z]+)_q(\d+))");
  std::smatch m;
  if (!std::regex_match(label, m, re)) return std::nullopt;
  return ScenarioKey{std::stol(m[1].str()), m[2].str(), std::stoi(m[3].str())};
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

int noise_order(const std::string& noise) {
  if (noise == "low") return 0;
  if (noise == "high") return 1;
  if (noise == "sparse") return 2;
  return 3;
}

std::string noise_title(const std::string& noise) {
  if (noise == "low") return "Low noise";
  if (noise == "high") return "High noise";
  if (noise == "sparse") return "Low noise + sparse events";
  return noise;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
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

const char* kPalette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377"};

class Svg {
 public:
  Svg(double width, double height) : width_(width), height_(height) {}

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none") {
    body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
          << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\" stroke=\"" << stroke
          << "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#000",
            double width = 1.0) {
    body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
          << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
          << fmt(width) << "\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << fmt(r)
          << "\" fill=\"none\" stroke=\"" << fill << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, double size = 11.0,
            const std::string& anchor = "middle", double rotate = 0.0) {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << fmt(size)
          << "\" text-anchor=\"" << anchor << "\"";
    if (rotate != 0.0)
      body_ << " transform=\"rotate(" << fmt(rotate) << ' ' << fmt(x) << ' ' << fmt(y) << ")\"";
    body_ << ">" << escape(s) << "</text>\n";
  }

  void save(const fs::path& path) const {
    auto out = open_out(path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width_) << "\" height=\""
        << fmt(height_) << "\" viewBox=\"0 0 " << fmt(width_) << ' ' << fmt(height_)
        << "\" font-family=\"sans-serif\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n"
        << body_.str() << "</svg>\n";
    close_out(out, path);
  }

 private:
  double width_, height_;
  std::ostringstream body_;
};

struct Box {
  double lower_whisker, q25, q50, q75, upper_whisker;
  std::vector<double> outliers;
};

Box box_stats(const std::vector<double>& v) {
  Box b{};
  b.q25 = quantile_type7(v, 0.25);
  b.q50 = quantile_type7(v, 0.50);
  b.q75 = quantile_type7(v, 0.75);
  const double iqr = b.q75 - b.q25;
  const double lo = b.q25 - 1.5 * iqr, hi = b.q75 + 1.5 * iqr;
  b.lower_whisker = b.q25;
  b.upper_whisker = b.q75;
  for (double x : v) {
    if (x < lo || x > hi) {
      b.outliers.push_back(x);
      continue;
    }
    b.lower_whisker = std::min(b.lower_whisker, x);
    b.upper_whisker = std::max(b.upper_whisker, x);
  }
  std::sort(b.outliers.begin(), b.outliers.end());
  return b;
}

// "Nice" upper axis limit.
double axis_max(double v) {
  if (!(v > 0.0)) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(v)));
  for (double step : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (step * mag >= v) return step * mag;
  return 10.0 * mag;
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<MetricRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : rows)
    if (!std::isnan(r.value)) groups[{r.scenario, r.method, r.stratum, r.metric}].push_back(r.value);
  std::vector<SummaryRow> out;
  for (const auto& [key, values] : groups) {
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key),
                   values.size(), quantile_type7(values, 0.25), quantile_type7(values, 0.50),
                   quantile_type7(values, 0.75)});
  }
  return out;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const fs::path& path) {
  auto out = open_out(path);
  out << "scenario,method,stratum,metric,count,q25,q50,q75\n";
  for (const auto& r : rows)
    out << r.scenario << ',' << r.method << ',' << r.stratum << ',' << r.metric << ','
        << r.count << ',' << format_double(r.q25) << ',' << format_double(r.q50) << ','
        << format_double(r.q75) << '\n';
  close_out(out, path);
}

bool write_lod_table(const std::vector<MetricRow>& rows, const std::string& metric,
                     const std::string& stratum, const fs::path& path) {
  // (noise order, noise, method) -> lod percent -> values
  using RowKey = std::tuple<int, std::string, std::string>;
  std::map<RowKey, std::map<int, std::vector<double>>> cells;
  std::set<int> lods;
  for (const auto& r : rows) {
    if (r.metric != metric || r.stratum != stratum || std::isnan(r.value)) continue;
    const auto key = parse_scenario_label(r.scenario);
    if (!key) continue;
    cells[{noise_order(key->noise), key->noise, r.method}][key->lod_percent].push_back(r.value);
    lods.insert(key->lod_percent);
  }
  if (cells.empty()) return false;
  auto out = open_out(path);
  out << "noise,method";
  for (int q : lods)
    out << ",q25_lod" << q << ",q50_lod" << q << ",q75_lod" << q;
  out << '\n';
  for (const auto& [key, by_lod] : cells) {
    out << std::get<1>(key) << ',' << std::get<2>(key);
    for (int q : lods) {
      auto it = by_lod.find(q);
      if (it == by_lod.end()) {
        out << ",NA,NA,NA";
        continue;
      }
      for (double prob : {0.25, 0.50, 0.75})
        out << ',' << format_double(quantile_type7(it->second, prob));
    }
    out << '\n';
  }
  close_out(out, path);
  return true;
}

bool write_box_plot_svg(const std::vector<MetricRow>& rows, const std::string& metric,
                        const std::string& stratum, const std::string& title,
                        const fs::path& path) {
  using PanelKey = std::tuple<Index, int, std::string>;
  std::map<PanelKey, std::map<int, std::map<std::string, std::vector<double>>>> panels;
  std::set<std::string> method_set;
  double vmax = 0.0;
  for (const auto& r : rows) {
    if (r.metric != metric || r.stratum != stratum || std::isnan(r.value)) continue;
    const auto key = parse_scenario_label(r.scenario);
    const ScenarioKey k = key ? *key : ScenarioKey{0, r.scenario, 0};
    panels[{k.p, noise_order(k.noise), k.noise}][k.lod_percent][r.method].push_back(r.value);
    method_set.insert(r.method);
    vmax = std::max(vmax, r.value);
  }
  if (panels.empty()) return false;
  const std::vector<std::string> methods(method_set.begin(), method_set.end());

  std::set<Index> ps;
  std::set<std::pair<int, std::string>> noises;
  for (const auto& [key, unused] : panels) {
    ps.insert(std::get<0>(key));
    noises.insert({std::get<1>(key), std::get<2>(key)});
  }
  const double panel_w = 260.0, panel_h = 200.0, left = 60.0, top = 50.0, gap = 40.0;
  const double width = left + static_cast<double>(noises.size()) * (panel_w + gap);
  const double height = top + static_cast<double>(ps.size()) * (panel_h + gap + 20.0) + 40.0;
  const double ymax = axis_max(vmax);
  Svg svg(width, height);
  svg.text(width / 2.0, 22.0, title, 14.0);

  std::size_t row = 0;
  for (Index p : ps) {
    std::size_t col = 0;
    for (const auto& noise : noises) {
      const double x0 = left + static_cast<double>(col) * (panel_w + gap);
      const double y0 = top + static_cast<double>(row) * (panel_h + gap + 20.0);
      svg.rect(x0, y0, panel_w, panel_h, "none", "#444");
      std::string label = noise_title(noise.second);
      if (p > 0) label += ", p = " + std::to_string(p);
      svg.text(x0 + panel_w / 2.0, y0 - 6.0, label, 11.0);
      auto y_of = [&](double v) { return y0 + panel_h - panel_h * v / ymax; };
      for (int t = 0; t <= 4; ++t) {
        const double v = ymax * t / 4.0;
        svg.line(x0 - 4.0, y_of(v), x0, y_of(v));
        svg.text(x0 - 6.0, y_of(v) + 4.0, fmt(v), 9.0, "end");
      }
      auto it = panels.find({p, noise.first, noise.second});
      if (it != panels.end()) {
        const auto& groups = it->second;
        const double group_w = panel_w / static_cast<double>(groups.size());
        std::size_t g = 0;
        for (const auto& [lod, by_method] : groups) {
          const double gx = x0 + static_cast<double>(g) * group_w;
          svg.text(gx + group_w / 2.0, y0 + panel_h + 14.0, std::to_string(lod) + "% < LOD", 9.0);
          const double box_w = group_w * 0.8 / static_cast<double>(methods.size());
          for (std::size_t m = 0; m < methods.size(); ++m) {
            auto mv = by_method.find(methods[m]);
            if (mv == by_method.end()) continue;
            const Box b = box_stats(mv->second);
            const double bx = gx + group_w * 0.1 + static_cast<double>(m) * box_w;
            const double cx = bx + box_w / 2.0;
            const std::string color = kPalette[m % 6];
            svg.line(cx, y_of(b.lower_whisker), cx, y_of(b.q25), color);
            svg.line(cx, y_of(b.q75), cx, y_of(b.upper_whisker), color);
            svg.rect(bx + 2.0, y_of(b.q75), box_w - 4.0, y_of(b.q25) - y_of(b.q75), "#fff", color);
            svg.line(bx + 2.0, y_of(b.q50), bx + box_w - 2.0, y_of(b.q50), color, 2.0);
            for (double o : b.outliers) svg.circle(cx, y_of(o), 2.0, color);
          }
          ++g;
        }
      }
      ++col;
    }
    ++row;
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const double lx = left + static_cast<double>(m) * 120.0, ly = height - 18.0;
    svg.rect(lx, ly - 9.0, 10.0, 10.0, kPalette[m % 6]);
    svg.text(lx + 14.0, ly, methods[m], 11.0, "start");
  }
  svg.save(path);
  return true;
}

void write_loadings_svg(const PatternModel& m, const std::vector<std::string>& names,
                        const fs::path& path) {
  const Index k = m.right_vectors.cols(), p = m.right_vectors.rows();
  const double bar = 18.0, left = 60.0, panel_h = 160.0, gap = 50.0, top = 30.0;
  const double width = left + static_cast<double>(p) * bar + 30.0;
  const double height = top + static_cast<double>(k) * (panel_h + gap) + 40.0;
  Svg svg(width, height);
  const double vmax = axis_max(m.right_vectors.cwiseAbs().maxCoeff());
  for (Index c = 0; c < k; ++c) {
    const double y0 = top + static_cast<double>(c) * (panel_h + gap);
    const double mid = y0 + panel_h / 2.0;
    std::string label = "Pattern " + std::to_string(c + 1);
    if (c < m.explained_share.size())
      label += " (" + fmt(100.0 * m.explained_share(c)) + "% of variance)";
    svg.text(left + static_cast<double>(p) * bar / 2.0, y0 - 8.0, label, 12.0);
    svg.line(left, mid, left + static_cast<double>(p) * bar, mid, "#888");
    svg.line(left, y0, left, y0 + panel_h, "#444");
    svg.text(left - 6.0, y0 + 4.0, fmt(vmax), 9.0, "end");
    svg.text(left - 6.0, y0 + panel_h + 4.0, fmt(-vmax), 9.0, "end");
    for (Index j = 0; j < p; ++j) {
      const double v = m.right_vectors(j, c);
      const double h = (panel_h / 2.0) * std::abs(v) / vmax;
      const double x = left + static_cast<double>(j) * bar + 2.0;
      svg.rect(x, v >= 0.0 ? mid - h : mid, bar - 4.0, h, v >= 0.0 ? kPalette[0] : kPalette[1]);
      svg.text(x + bar / 2.0, y0 + panel_h + 10.0, names[static_cast<std::size_t>(j)], 8.0,
               "end", -60.0);
    }
  }
  svg.save(path);
}

void write_sparse_heatmap_svg(const SparseEventTable& t, const std::vector<std::string>& names,
                              const fs::path& path) {
  std::vector<Index> rows;
  for (Index i = 0; i < t.rows; ++i)
    if (t.high_per_row[static_cast<std::size_t>(i)] + t.low_per_row[static_cast<std::size_t>(i)] > 0)
      rows.push_back(i);
  std::stable_sort(rows.begin(), rows.end(), [&](Index a, Index b) {
    const auto sa = static_cast<std::size_t>(a), sb = static_cast<std::size_t>(b);
    const int ta = t.high_per_row[sa] + t.low_per_row[sa];
    const int tb = t.high_per_row[sb] + t.low_per_row[sb];
    if (ta != tb) return ta > tb;
    return t.high_per_row[sa] > t.high_per_row[sb];
  });
  const double cell_w = 16.0, left = 20.0, top = 40.0, bottom = 80.0;
  const double cell_h = rows.empty() ? 2.0 : std::max(1.0, std::min(6.0, 800.0 / rows.size()));
  const double width = left + static_cast<double>(t.cols) * cell_w + 140.0;
  const double height = top + static_cast<double>(rows.size()) * cell_h + bottom;
  Svg svg(width, height);
  svg.text(width / 2.0, 20.0,
           "Participants with sparse events (" + std::to_string(rows.size()) + " of " +
               std::to_string(t.rows) + ")",
           13.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Index j = 0; j < t.cols; ++j) {
      const SparseClass c = t.at(rows[r], j);
      if (c == SparseClass::Null) continue;
      svg.rect(left + static_cast<double>(j) * cell_w, top + static_cast<double>(r) * cell_h,
               cell_w, cell_h, c == SparseClass::High ? "#cc3311" : "#0077bb");
    }
  }
  svg.rect(left, top, static_cast<double>(t.cols) * cell_w,
           static_cast<double>(rows.size()) * cell_h, "none", "#444");
  const double label_y = top + static_cast<double>(rows.size()) * cell_h + 8.0;
  for (Index j = 0; j < t.cols; ++j)
    svg.text(left + (static_cast<double>(j) + 0.5) * cell_w, label_y,
             names[static_cast<std::size_t>(j)], 8.0, "end", -60.0);
  const double lx = left + static_cast<double>(t.cols) * cell_w + 20.0;
  svg.rect(lx, top, 10.0, 10.0, "#cc3311");
  svg.text(lx + 14.0, top + 9.0, "High", 11.0, "start");
  svg.rect(lx, top + 18.0, 10.0, 10.0, "#0077bb");
  svg.text(lx + 14.0, top + 27.0, "Low", 11.0, "start");
  svg.save(path);
}

}  // namespace pcplod
