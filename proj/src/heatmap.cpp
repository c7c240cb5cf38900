#include "wordfuse/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <regex>
#include <sstream>

#include "wordfuse/error.hpp"

namespace wordfuse {
namespace {

struct Rgb {
  int r, g, b;
};

// White to deep blue.
Rgb ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto mix = [t](int lo, int hi) { return static_cast<int>(std::lround(lo + (hi - lo) * t)); };
  return {mix(255, 8), mix(255, 48), mix(255, 107)};
}

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string unescape(const std::string& s) {
  static const std::pair<const char*, char> table[] = {
      {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    bool matched = false;
    for (const auto& [entity, ch] : table) {
      const std::size_t n = std::strlen(entity);
      if (s.compare(i, n, entity) == 0) {
        out += ch;
        i += n;
        matched = true;
        break;
      }
    }
    if (!matched) out += s[i++];
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

HeatmapDocument make_heatmap(const std::string& id, const std::vector<std::string>& tokens, const AttentionSet& a,
                             bool with_frames) {
  HeatmapDocument doc;
  doc.utterance_id = id;
  doc.tokens = tokens;
  auto add = [&](const char* name, const std::vector<double>& w, double mass) {
    if (w.size() != tokens.size()) {
      fail(ErrorKind::kDimension, std::string(name) + " has " + std::to_string(w.size()) + " weights for " +
                                      std::to_string(tokens.size()) + " words");
    }
    doc.rows.push_back({name, w, mass});
  };
  add("w_alpha", a.w_alpha, 1.0);
  add("t_alpha", a.t_alpha, 1.0);
  if (a.s_alpha) add("s_alpha", *a.s_alpha, 1.0);
  if (a.u_alpha) add("u_alpha", *a.u_alpha, 2.0);
  if (with_frames) {
    for (const auto& f : a.f_alpha) {
      std::vector<double> valid;
      for (double v : f)
        if (v > 0.0) valid.push_back(v);
      doc.frame_strip.push_back(valid);
    }
  }
  return doc;
}

std::vector<double> row_intensities(const HeatmapRow& row) {
  double top = 0.0;
  for (double w : row.weights) top = std::max(top, w / row.mass);
  std::vector<double> out;
  for (double w : row.weights) out.push_back(top > 0.0 ? std::clamp(w / row.mass / top, 0.0, 1.0) : 0.0);
  return out;
}

std::string render_svg(const HeatmapDocument& doc) {
  const int cell_w = 72, cell_h = 26, label_w = 80, pad = 10;
  const int n = static_cast<int>(doc.tokens.size());
  const int strip_h = doc.frame_strip.empty() ? 0 : 18;
  const int width = label_w + n * cell_w + 2 * pad;
  const int height = pad + 20 + static_cast<int>(doc.rows.size()) * cell_h + strip_h + pad;
  std::ostringstream out;
  std::string row_names;
  for (const auto& r : doc.rows) row_names += (row_names.empty() ? "" : ",") + r.name;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\" data-utterance=\"" << escape(doc.utterance_id)
      << "\" data-words=\"" << n << "\" data-rows=\"" << row_names << "\">\n";
  out << "  <title>" << escape(doc.utterance_id) << "</title>\n";
  for (int i = 0; i < n; ++i) {
    out << "  <text x=\"" << label_w + pad + i * cell_w + cell_w / 2 << "\" y=\"" << pad + 14
        << "\" text-anchor=\"middle\">" << escape(doc.tokens[i]) << "</text>\n";
  }
  int y = pad + 20;
  for (const auto& row : doc.rows) {
    out << "  <text x=\"" << pad << "\" y=\"" << y + cell_h / 2 + 4 << "\">" << row.name << "</text>\n";
    const auto intensity = row_intensities(row);
    for (int i = 0; i < n; ++i) {
      out << "  <rect class=\"cell\" x=\"" << label_w + pad + i * cell_w << "\" y=\"" << y << "\" width=\"" << cell_w
          << "\" height=\"" << cell_h << "\" fill=\"" << hex(ramp(intensity[i])) << "\" stroke=\"#ffffff\""
          << " data-row=\"" << row.name << "\" data-index=\"" << i << "\" data-token=\"" << escape(doc.tokens[i])
          << "\" data-weight=\"" << num(row.weights[i]) << "\" data-display=\"" << num(row.weights[i] / row.mass)
          << "\" data-intensity=\"" << num(intensity[i]) << "\"/>\n";
    }
    y += cell_h;
  }
  if (!doc.frame_strip.empty()) {
    out << "  <text x=\"" << pad << "\" y=\"" << y + 13 << "\">f_alpha</text>\n";
    for (int i = 0; i < n && i < static_cast<int>(doc.frame_strip.size()); ++i) {
      const auto& f = doc.frame_strip[i];
      const double top = f.empty() ? 1.0 : *std::max_element(f.begin(), f.end());
      const double w = static_cast<double>(cell_w) / std::max<std::size_t>(1, f.size());
      for (std::size_t j = 0; j < f.size(); ++j) {
        out << "  <rect class=\"frame\" x=\"" << num(label_w + pad + i * cell_w + j * w) << "\" y=\"" << y + 2
            << "\" width=\"" << num(w) << "\" height=\"" << strip_h - 4 << "\" fill=\"" << hex(ramp(f[j] / top))
            << "\" data-word=\"" << i << "\" data-frame=\"" << j << "\" data-weight=\"" << num(f[j]) << "\"/>\n";
      }
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_terminal(const HeatmapDocument& doc, bool color) {
  static const char* shades[] = {" ", "░", "▒", "▓", "█"};
  std::size_t width = 0;
  for (const auto& t : doc.tokens) width = std::max(width, t.size());
  width = std::max<std::size_t>(width, 6) + 2;
  auto cell = [&](const std::string& text) {
    std::string s = text.substr(0, width);
    return std::string((width - s.size()) / 2, ' ') + s + std::string(width - s.size() - (width - s.size()) / 2, ' ');
  };
  std::ostringstream out;
  out << doc.utterance_id << "\n" << std::string(9, ' ');
  for (const auto& t : doc.tokens) out << cell(t);
  out << "\n";
  for (const auto& row : doc.rows) {
    out << row.name << std::string(9 - std::min<std::size_t>(9, row.name.size()), ' ');
    const auto intensity = row_intensities(row);
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      char value[16];
      std::snprintf(value, sizeof value, "%.2f", row.weights[i] / row.mass);
      if (color) {
        const Rgb c = ramp(intensity[i]);
        const char* fg = intensity[i] > 0.5 ? "255;255;255" : "0;0;0";
        out << "\x1b[48;2;" << c.r << ";" << c.g << ";" << c.b << "m\x1b[38;2;" << fg << "m" << cell(value) << "\x1b[0m";
      } else {
        const int level = static_cast<int>(std::lround(intensity[i] * 4));
        std::string block;
        for (std::size_t k = 0; k < width - 5; ++k) block += shades[level];
        out << " " << value << block;
      }
    }
    out << "\n";
  }
  return out.str();
}

std::vector<ParsedCell> parse_svg_cells(const std::string& svg) {
  static const std::regex rect(R"(<rect class="cell"[^>]*>)");
  static const std::regex attr(R"re(data-([a-z]+)="([^"]*)")re");
  std::vector<ParsedCell> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), rect); it != std::sregex_iterator(); ++it) {
    const std::string tag = it->str();
    ParsedCell c;
    for (auto a = std::sregex_iterator(tag.begin(), tag.end(), attr); a != std::sregex_iterator(); ++a) {
      const std::string key = (*a)[1], value = unescape((*a)[2]);
      if (key == "row") c.row = value;
      else if (key == "index") c.index = std::stoul(value);
      else if (key == "token") c.token = value;
      else if (key == "weight") c.weight = std::stod(value);
      else if (key == "intensity") c.intensity = std::stod(value);
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace wordfuse
