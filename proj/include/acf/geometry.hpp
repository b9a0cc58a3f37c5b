#pragma once

#include "acf/types.hpp"

#include <algorithm>

namespace acf {

inline double intersection_area(const Box &a, const Box &b)
{
  const double w = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double h = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  return (w > 0 && h > 0) ? w * h : 0.0;
}

/// Intersection over union.
inline double jaccard(const Box &a, const Box &b)
{
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

/// Intersection over the smaller area (the Greedy* NMS measure).
inline double min_area_overlap(const Box &a, const Box &b)
{
  const double inter = intersection_area(a, b);
  const double m = std::min(a.area(), b.area());
  return m > 0 ? inter / m : 0.0;
}

} // namespace acf
