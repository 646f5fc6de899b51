#pragma once
// Piecewise-uniform radial grid on [r_wall, r_infinity].

#include <algorithm>
#include <cmath>
#include <vector>

#include "cavmol/errors.hpp"
#include "cavmol/params.hpp"

namespace cavmol {

class RadialGrid {
 public:
  /// One uniform stretch of the grid.
  struct Segment {
    double start;
    double end;
    int intervals;
    double step() const { return (end - start) / intervals; }
  };

  RadialGrid() = default;

  explicit RadialGrid(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw ValidationError("grid", "no segments");
    for (std::size_t s = 0; s < segments_.size(); ++s) {
      const auto& seg = segments_[s];
      if (!(seg.start > 0.0) || !(seg.end > seg.start) || seg.intervals < 1)
        throw ValidationError("grid", "invalid segment");
      if (s > 0 && seg.start != segments_[s - 1].end)
        throw ValidationError("grid", "segments must be contiguous");
    }
    build_nodes();
  }

  static RadialGrid uniform(double r_wall, double r_infinity, int n_points) {
    if (!(r_wall > 0.0) || !(r_infinity > r_wall))
      throw ValidationError("grid", "need 0 < r_wall < r_infinity");
    if (n_points < 2) throw ValidationError("n_points", "must be >= 2");
    return RadialGrid({Segment{r_wall, r_infinity, n_points - 1}});
  }

  /// Step wall_step on [r_wall, 2 r_wall], doubling on each further doubling
  /// of R until max_step is reached. Every segment holds a multiple of
  /// `multiple` intervals so the grid can be coarsened by that factor.
  static RadialGrid graded(double r_wall, double r_infinity, double wall_step, double max_step,
                           int multiple = 4) {
    if (!(r_wall > 0.0) || !(r_infinity > r_wall))
      throw ValidationError("grid", "need 0 < r_wall < r_infinity");
    if (!(wall_step > 0.0) || !(max_step >= wall_step))
      throw ValidationError("grid", "need 0 < wall_step <= max_step");
    std::vector<Segment> segs;
    double start = r_wall;
    double step = wall_step;
    while (start < r_infinity) {
      double end = (2.0 * step > max_step) ? r_infinity : std::min(2.0 * start, r_infinity);
      if (end == start) break;
      int n = static_cast<int>(std::ceil((end - start) / (step * multiple))) * multiple;
      segs.push_back(Segment{start, end, std::max(n, multiple)});
      start = end;
      step *= 2.0;
    }
    return RadialGrid(std::move(segs));
  }

  static RadialGrid from_spec(const GridSpec& g) {
    if (g.n_points) return uniform(g.r_wall, g.r_infinity, *g.n_points);
    return graded(g.r_wall, g.r_infinity, g.wall_step, g.max_step);
  }

  /// Every interval split in two.
  RadialGrid refined() const {
    auto segs = segments_;
    for (auto& s : segs) s.intervals *= 2;
    return RadialGrid(std::move(segs));
  }

  /// Every `factor` intervals merged into one; the node set is a subset.
  RadialGrid coarsened(int factor) const {
    auto segs = segments_;
    for (auto& s : segs) {
      if (s.intervals % factor != 0)
        throw ValidationError("grid", "segment intervals not divisible by coarsening factor");
      s.intervals /= factor;
    }
    return RadialGrid(std::move(segs));
  }

  std::size_t size() const { return nodes_.size(); }
  double operator[](std::size_t k) const { return nodes_[k]; }
  const std::vector<double>& nodes() const { return nodes_; }
  double r_wall() const { return nodes_.front(); }
  double r_infinity() const { return nodes_.back(); }
  const std::vector<Segment>& segments() const { return segments_; }

  /// Step from node k to node k+1.
  double step(std::size_t k) const { return steps_[k]; }
  double max_step() const { return *std::max_element(steps_.begin(), steps_.end()); }

  /// Trapezoid quadrature weight of node k.
  double weight(std::size_t k) const {
    double w = 0.0;
    if (k > 0) w += 0.5 * steps_[k - 1];
    if (k + 1 < nodes_.size()) w += 0.5 * steps_[k];
    return w;
  }

  template <class Values>
  double trapezoid(const Values& f) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) sum += weight(k) * f[k];
    return sum;
  }

 private:
  void build_nodes() {
    nodes_.clear();
    steps_.clear();
    for (const auto& seg : segments_) {
      const double h = seg.step();
      if (nodes_.empty()) nodes_.push_back(seg.start);
      for (int i = 1; i <= seg.intervals; ++i) {
        nodes_.push_back(i == seg.intervals ? seg.end : seg.start + i * h);
        steps_.push_back(h);
      }
    }
  }

  std::vector<Segment> segments_;
  std::vector<double> nodes_;
  std::vector<double> steps_;
};

}  // namespace cavmol
