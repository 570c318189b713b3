#include "grft/diffusion/diversity.hpp"

#include <algorithm>
#include <cmath>

#include "grft/core/geometry.hpp"

namespace grft {

namespace {

std::int64_t key(std::int64_t ix, std::int64_t iy) {
  return (ix << 32) ^ (iy & 0xffffffffLL);
}

}  // namespace

std::vector<std::int64_t> footprint_cells(const Trajectory& t, const FootprintConfig& cfg) {
  std::vector<std::int64_t> cells;
  const auto headings = trajectory_headings(t, 0.0);
  const double hl = 0.5 * cfg.length;
  const double hw = 0.5 * cfg.width;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const OrientedBox box{t[k].position(), headings[k], cfg.length, cfg.width};
    Vec2 lo = box.center, hi = box.center;
    for (const auto& c : box.corners()) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
    const double ch = std::cos(box.heading), sh = std::sin(box.heading);
    const auto ix0 = static_cast<std::int64_t>(std::floor(lo.x() / cfg.cell));
    const auto ix1 = static_cast<std::int64_t>(std::floor(hi.x() / cfg.cell));
    const auto iy0 = static_cast<std::int64_t>(std::floor(lo.y() / cfg.cell));
    const auto iy1 = static_cast<std::int64_t>(std::floor(hi.y() / cfg.cell));
    for (auto ix = ix0; ix <= ix1; ++ix) {
      for (auto iy = iy0; iy <= iy1; ++iy) {
        const Vec2 d = Vec2((ix + 0.5) * cfg.cell, (iy + 0.5) * cfg.cell) - box.center;
        const double u = ch * d.x() + sh * d.y();
        const double v = -sh * d.x() + ch * d.y();
        if (std::abs(u) <= hl && std::abs(v) <= hw) cells.push_back(key(ix, iy));
      }
    }
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

double footprint_iou(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  std::size_t inter = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double diversity_score(const std::vector<Trajectory>& group, const FootprintConfig& cfg) {
  if (group.size() < 2) return 0.0;
  std::vector<std::vector<std::int64_t>> cells;
  cells.reserve(group.size());
  for (const auto& t : group) cells.push_back(footprint_cells(t, cfg));
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      sum += footprint_iou(cells[i], cells[j]);
      ++pairs;
    }
  }
  return 1.0 - sum / static_cast<double>(pairs);
}

}  // namespace grft
