#include "bedsense/contour.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "bedsense/error.hpp"

namespace bedsense {

double contour_step(double min_value, double max_value, int max_levels) {
  if (!(max_value > min_value)) return 0.0;
  double scale = 1.0;
  while (true) {
    for (double mantissa : {2.0, 5.0, 10.0}) {
      const double step = mantissa * scale;
      const double count = std::floor(max_value / step) - std::floor(min_value / step);
      if (count <= max_levels) return step;
    }
    scale *= 10.0;
  }
}

std::vector<double> select_contour_levels(double min_value, double max_value, int max_levels) {
  std::vector<double> levels;
  const double step = contour_step(min_value, max_value, max_levels);
  if (step == 0.0) return levels;
  long long first = static_cast<long long>(std::floor(min_value / step)) + 1;
  long long last = static_cast<long long>(std::floor(max_value / step));
  // Guard against division rounding onto a neighbouring multiple.
  while (static_cast<double>(first) * step <= min_value) ++first;
  while (first > 0 && static_cast<double>(first - 1) * step > min_value) --first;
  while (static_cast<double>(last) * step > max_value) --last;
  while (static_cast<double>(last + 1) * step <= max_value) ++last;
  for (long long j = first; j <= last; ++j) levels.push_back(static_cast<double>(j) * step);
  return levels;
}

std::vector<double> select_contour_levels(const PressureFrame& frame) {
  if (frame.values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(frame.values.begin(), frame.values.end());
  return select_contour_levels(*lo, *hi);
}

namespace {

class EdgeGrid {
 public:
  EdgeGrid(int rows, int cols)
      : rows_(rows), cols_(cols), n_horizontal_(static_cast<std::size_t>(rows) * (cols - 1)) {}

  std::size_t horizontal(int r, int c) const { return static_cast<std::size_t>(r) * (cols_ - 1) + c; }
  std::size_t vertical(int r, int c) const {
    return n_horizontal_ + static_cast<std::size_t>(r) * cols_ + c;
  }
  std::size_t size() const { return n_horizontal_ + static_cast<std::size_t>(rows_ - 1) * cols_; }

  Point2 crossing(const PressureFrame& frame, std::size_t edge, double level) const {
    int r1, c1, r2, c2;
    if (edge < n_horizontal_) {
      r1 = r2 = static_cast<int>(edge / (cols_ - 1));
      c1 = static_cast<int>(edge % (cols_ - 1));
      c2 = c1 + 1;
    } else {
      const std::size_t e = edge - n_horizontal_;
      r1 = static_cast<int>(e / cols_);
      c1 = c2 = static_cast<int>(e % cols_);
      r2 = r1 + 1;
    }
    const double p1 = frame.at(r1, c1);
    const double p2 = frame.at(r2, c2);
    const double t = (level - p1) / (p2 - p1);
    return {c1 + t * (c2 - c1), r1 + t * (r2 - r1)};
  }

 private:
  int rows_;
  int cols_;
  std::size_t n_horizontal_;
};

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

}  // namespace

std::vector<Polyline> trace_isolines(const PressureFrame& frame, double level) {
  const int rows = frame.grid.rows;
  const int cols = frame.grid.cols;
  if (frame.values.empty()) throw DomainError("trace_isolines: empty frame");
  const auto [lo, hi] = std::minmax_element(frame.values.begin(), frame.values.end());
  if (!(level > *lo && level <= *hi)) {
    throw DomainError("trace_isolines: level must lie in (min, max] of the frame");
  }
  if (rows < 2 || cols < 2) return {};

  const EdgeGrid edges(rows, cols);
  std::vector<std::array<std::size_t, 2>> links(edges.size(), {kNone, kNone});
  auto link = [&links](std::size_t a, std::size_t b) {
    links[a][links[a][0] == kNone ? 0 : 1] = b;
    links[b][links[b][0] == kNone ? 0 : 1] = a;
  };

  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) {
      const double tl = frame.at(r, c), tr = frame.at(r, c + 1);
      const double br = frame.at(r + 1, c + 1), bl = frame.at(r + 1, c);
      const int index = (tl >= level ? 8 : 0) | (tr >= level ? 4 : 0) | (br >= level ? 2 : 0) |
                        (bl >= level ? 1 : 0);
      if (index == 0 || index == 15) continue;
      const std::size_t top = edges.horizontal(r, c);
      const std::size_t bottom = edges.horizontal(r + 1, c);
      const std::size_t left = edges.vertical(r, c);
      const std::size_t right = edges.vertical(r, c + 1);
      const bool center_above = 0.25 * (tl + tr + br + bl) >= level;
      switch (index) {
        case 1: case 14: link(left, bottom); break;
        case 2: case 13: link(bottom, right); break;
        case 3: case 12: link(left, right); break;
        case 4: case 11: link(top, right); break;
        case 6: case 9:  link(top, bottom); break;
        case 7: case 8:  link(top, left); break;
        case 10:  // tl and br above
          if (center_above) { link(top, right); link(left, bottom); }
          else { link(top, left); link(bottom, right); }
          break;
        case 5:  // tr and bl above
          if (center_above) { link(top, left); link(bottom, right); }
          else { link(top, right); link(left, bottom); }
          break;
        default: break;
      }
    }
  }

  std::vector<Polyline> result;
  std::vector<char> visited(edges.size(), 0);
  auto walk = [&](std::size_t start, bool closed) {
    Polyline line;
    line.closed = closed;
    std::size_t prev = kNone;
    std::size_t cur = start;
    while (cur != kNone && !visited[cur]) {
      visited[cur] = 1;
      line.vertices.push_back(edges.crossing(frame, cur, level));
      const auto& nb = links[cur];
      const std::size_t next = nb[0] != prev ? nb[0] : nb[1];
      prev = cur;
      cur = next;
    }
    result.push_back(std::move(line));
  };
  // Open lines start at boundary edges (one link); the rest are cycles.
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!visited[e] && links[e][0] != kNone && links[e][1] == kNone) walk(e, false);
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!visited[e] && links[e][0] != kNone) walk(e, true);
  }
  return result;
}

ContourSet trace_contours(const PressureFrame& frame) {
  ContourSet set;
  set.levels = select_contour_levels(frame);
  for (double level : set.levels) set.polylines.push_back(trace_isolines(frame, level));
  return set;
}

}  // namespace bedsense
