#pragma once

#include <vector>

#include "bedsense/dataset.hpp"

namespace bedsense {

struct Point2 {
  double x = 0.0;  // column
  double y = 0.0;  // row

  bool operator==(const Point2&) const = default;
};

/// One traced isoline. A closed polyline lists each vertex once; the
/// segment from back() to front() is implied.
struct Polyline {
  std::vector<Point2> vertices;
  bool closed = false;
};

struct ContourSet {
  std::vector<double> levels;                   // ascending
  std::vector<std::vector<Polyline>> polylines;  // one entry per level
};

/// Smallest step on the 2, 5, 10, 20, 50, ... ladder with at most `max_levels`
/// multiples in (min, max]; returns those multiples ascending. Empty when the
/// frame is constant.
std::vector<double> select_contour_levels(double min_value, double max_value, int max_levels = 20);
std::vector<double> select_contour_levels(const PressureFrame& frame);

/// The ladder step chosen for a (min, max] range, or 0 when min == max.
double contour_step(double min_value, double max_value, int max_levels = 20);

/// Marching squares at one level. A corner is "above" when value >= level.
/// Saddle squares (diagonal corners above) are split by comparing the mean of
/// the four corners to the level. Throws DomainError unless
/// min(S) < level <= max(S).
std::vector<Polyline> trace_isolines(const PressureFrame& frame, double level);

ContourSet trace_contours(const PressureFrame& frame);

}  // namespace bedsense
