#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wordfuse/model.hpp"

namespace wordfuse {

struct HeatmapRow {
  std::string name;            // w_alpha, t_alpha, s_alpha, u_alpha
  std::vector<double> weights; // raw values, one per word
  double mass = 1.0;           // weights / mass are displayed (u_alpha has mass 2)
};

struct HeatmapDocument {
  std::string utterance_id;
  std::vector<std::string> tokens;
  std::vector<HeatmapRow> rows;
  std::vector<std::vector<double>> frame_strip;  // per word f_alpha over valid frames; may be empty
};

// Rows appear in the order w, t, s, u; s and u only when the strategy has them.
HeatmapDocument make_heatmap(const std::string& id, const std::vector<std::string>& tokens, const AttentionSet& attention,
                             bool with_frames = true);

// Display value scaled by the row maximum into [0, 1]; monotone in the weight.
std::vector<double> row_intensities(const HeatmapRow& row);

std::string render_svg(const HeatmapDocument& doc);
std::string render_terminal(const HeatmapDocument& doc, bool color = true);

// Reads the word-level rows back from the data attributes of render_svg output.
struct ParsedCell {
  std::string row;
  std::size_t index = 0;
  std::string token;
  double weight = 0.0;
  double intensity = 0.0;
};
std::vector<ParsedCell> parse_svg_cells(const std::string& svg);

}  // namespace wordfuse
