#include <doctest.h>

#include <algorithm>

#include "wordfuse/error.hpp"
#include "wordfuse/heatmap.hpp"

using namespace wordfuse;

namespace {

AttentionSet faf_attention() {
  AttentionSet a;
  a.t_alpha = {0.2, 0.5, 0.3};
  a.w_alpha = {0.6, 0.1, 0.3};
  a.s_alpha = std::vector<double>{0.4, 0.3, 0.3};
  a.u_alpha = std::vector<double>{0.9, 0.5, 0.6};
  a.f_alpha = {{0.5, 0.5, 0.0}, {1.0, 0.0, 0.0}, {0.2, 0.3, 0.5}};
  return a;
}

}  // namespace

TEST_SUITE("heatmap") {
  TEST_CASE("rows follow the strategy's attention set") {
    const auto doc = make_heatmap("u1", {"a", "b", "c"}, faf_attention());
    REQUIRE(doc.rows.size() == 4);
    CHECK(doc.rows[0].name == "w_alpha");
    CHECK(doc.rows[3].name == "u_alpha");
    CHECK(doc.rows[3].mass == 2.0);
    CHECK(doc.frame_strip[0].size() == 2);
    AttentionSet hf = faf_attention();
    hf.s_alpha.reset();
    hf.u_alpha.reset();
    CHECK(make_heatmap("u", {"a", "b", "c"}, hf).rows.size() == 2);
    CHECK_THROWS_AS(make_heatmap("u", {"a", "b"}, hf), Error);
  }

  TEST_CASE("intensity is monotone in the weight and peaks at one") {
    const HeatmapRow row{"u_alpha", {0.9, 0.5, 0.6}, 2.0};
    const auto in = row_intensities(row);
    CHECK(in[0] == 1.0);
    CHECK(in[1] == doctest::Approx(0.5 / 0.9));
    CHECK(in[1] < in[2]);
    CHECK(row_intensities({"x", {0.0, 0.0}, 1.0}) == std::vector<double>{0.0, 0.0});
  }

  TEST_CASE("svg carries parseable cell data") {
    const auto doc = make_heatmap("u<1>", {"it's", "a&b", "c"}, faf_attention());
    const std::string svg = render_svg(doc);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("data-rows=\"w_alpha,t_alpha,s_alpha,u_alpha\"") != std::string::npos);
    CHECK(svg.find("u&lt;1&gt;") != std::string::npos);
    const auto cells = parse_svg_cells(svg);
    REQUIRE(cells.size() == 12);
    CHECK(cells[3].row == "t_alpha");
    CHECK(cells[3].token == "it's");
    CHECK(cells[4].token == "a&b");
    CHECK(cells[4].weight == 0.5);
    CHECK(cells[11].weight == 0.6);
    for (const auto& row : doc.rows) {
      std::vector<ParsedCell> mine;
      for (const auto& c : cells)
        if (c.row == row.name) mine.push_back(c);
      std::sort(mine.begin(), mine.end(), [](auto& a, auto& b) { return a.weight < b.weight; });
      for (std::size_t i = 1; i < mine.size(); ++i) CHECK(mine[i].intensity >= mine[i - 1].intensity);
    }
  }

  TEST_CASE("terminal rendering with and without colour") {
    const auto doc = make_heatmap("u1", {"a", "b", "c"}, faf_attention());
    const std::string plain = render_terminal(doc, false);
    CHECK(plain.find("\x1b[") == std::string::npos);
    CHECK(plain.find("u_alpha") != std::string::npos);
    CHECK(render_terminal(doc, true).find("\x1b[") != std::string::npos);
  }
}
