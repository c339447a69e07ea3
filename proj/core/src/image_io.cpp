#include "foveate/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace foveate {

namespace {

void write_p5(std::ostream& os, const Grid<std::uint8_t>& g, int maxval) {
  os << "P5\n" << g.width() << ' ' << g.height() << '\n' << maxval << '\n';
  os.write(reinterpret_cast<const char*>(g.values().data()),
           static_cast<std::streamsize>(g.values().size()));
  if (!os) throw Error("pgm: write failed");
}

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& is) {
  std::string tok;
  char c = 0;
  while (is.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(is, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  if (tok.empty()) throw Error("pgm: truncated header");
  return tok;
}

int pgm_int(std::istream& is) {
  const std::string tok = pgm_token(is);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw Error("pgm: bad header token '" + tok + "'");
    return v;
  } catch (const std::logic_error&) {
    throw Error("pgm: bad header token '" + tok + "'");
  }
}

template <typename F>
void save_with(const std::filesystem::path& path, F&& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  f(os);
}

}  // namespace

void write_mask_pgm(std::ostream& os, const Mask& mask) {
  Grid<std::uint8_t> g(mask.geometry());
  std::transform(mask.values().begin(), mask.values().end(), g.values().begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 1 : 0); });
  write_p5(os, g, 1);
}

void write_scaled_pgm(std::ostream& os, const GridD& grid) {
  Grid<std::uint8_t> g(grid.geometry());
  if (!grid.empty()) {
    const auto [lo, hi] = std::minmax_element(grid.values().begin(), grid.values().end());
    const double span = *hi - *lo;
    std::transform(grid.values().begin(), grid.values().end(), g.values().begin(),
                   [lo = *lo, span](double v) {
                     if (span <= 0.0) return std::uint8_t{0};
                     return static_cast<std::uint8_t>(std::lround(255.0 * (v - lo) / span));
                   });
  }
  write_p5(os, g, 255);
}

void write_intensity_pgm(std::ostream& os, const GridD& image) {
  Grid<std::uint8_t> g(image.geometry());
  std::transform(image.values().begin(), image.values().end(), g.values().begin(), [](double v) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
  });
  write_p5(os, g, 255);
}

Grid<std::uint8_t> read_pgm(std::istream& is) {
  const std::string magic = pgm_token(is);
  if (magic != "P5" && magic != "P2") throw Error("pgm: unsupported magic '" + magic + "'");
  const int w = pgm_int(is);
  const int h = pgm_int(is);
  const int maxval = pgm_int(is);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw Error("pgm: bad header values");
  Grid<std::uint8_t> g(w, h);
  if (magic == "P5") {
    is.read(reinterpret_cast<char*>(g.values().data()), static_cast<std::streamsize>(g.size()));
    if (is.gcount() != static_cast<std::streamsize>(g.size())) throw Error("pgm: truncated data");
  } else {
    for (auto& v : g.values()) {
      int x = 0;
      if (!(is >> x) || x < 0 || x > maxval) throw Error("pgm: bad ascii pixel");
      v = static_cast<std::uint8_t>(x);
    }
  }
  return g;
}

Mask read_mask_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  Grid<std::uint8_t> g = read_pgm(is);
  for (auto& v : g.values()) v = v ? 1 : 0;
  return g;
}

void save_mask_pgm(const std::filesystem::path& path, const Mask& mask) {
  save_with(path, [&](std::ostream& os) { write_mask_pgm(os, mask); });
}
void save_scaled_pgm(const std::filesystem::path& path, const GridD& grid) {
  save_with(path, [&](std::ostream& os) { write_scaled_pgm(os, grid); });
}
void save_intensity_pgm(const std::filesystem::path& path, const GridD& image) {
  save_with(path, [&](std::ostream& os) { write_intensity_pgm(os, image); });
}

void write_decimal_grid(std::ostream& os, const GridD& grid, int digits) {
  char buf[64];
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      std::snprintf(buf, sizeof buf, "%.*g", digits, grid(x, y));
      if (x > 0) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

GridD read_decimal_grid(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v = 0;
    while (ls >> v) row.push_back(v);
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) throw Error("decimal grid: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  GridD g(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) g(x, y) = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
  return g;
}

}  // namespace foveate
