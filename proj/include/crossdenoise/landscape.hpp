#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crossdenoise/dataset.hpp"
#include "crossdenoise/trainer.hpp"

namespace cdn {

struct SurfaceCell {
  double alpha = 0.0;
  double beta = 0.0;
  bool valid = false;   // alpha <= beta
  bool failed = false;  // training raised; cell kept absent
  double score = 0.0;   // mean best-validation score over seeds
};

struct PerformanceSurface {
  std::vector<double> alphas;  // row axis, ascending
  std::vector<double> betas;   // column axis, ascending
  std::vector<SurfaceCell> cells;  // row-major alphas x betas
  int seeds_per_point = 0;

  const SurfaceCell& at(std::size_t ai, std::size_t bi) const {
    return cells[ai * betas.size() + bi];
  }
};

enum class Curvature { concave, convex, saddle, indeterminate };
std::string to_string(Curvature c);

struct HessianVerdict {
  double alpha = 0.0;  // center point
  double beta = 0.0;
  double h11 = 0.0;
  double h22 = 0.0;
  double h12 = 0.0;
  double det_h = 0.0;
  Curvature classification = Curvature::indeterminate;
};

// Central finite differences on a 3x3 grid of scores: values[i][j] holds
// f(x0 + (i-1)hx, y0 + (j-1)hy). Concave when H11 < 0 and det > 0, convex
// when H11 > 0 and det > 0, saddle when det < 0, indeterminate otherwise.
HessianVerdict hessian_concavity(const std::array<std::array<double, 3>, 3>& values, double h_x,
                                 double h_y);

// Train one model per valid (alpha, beta, seed) with shared splits; cells run
// in parallel with single-threaded inner training. Per-cell failures mark the
// cell instead of aborting the sweep.
PerformanceSurface sweep(const DataSplit& split, const TrainConfig& base,
                         const std::vector<double>& alpha_values,
                         const std::vector<double>& beta_values,
                         const std::vector<std::uint64_t>& seeds, int workers,
                         int max_epochs_per_cell = 40);

// 0.01-step 3x3 stencil around each anchor, classified by hessian_concavity.
std::vector<HessianVerdict> stencil_verdicts(const DataSplit& split, const TrainConfig& base,
                                             const std::vector<std::pair<double, double>>& anchors,
                                             double step, const std::vector<std::uint64_t>& seeds,
                                             int workers, int max_epochs_per_cell = 40);

// CSV matrix, rows = alpha, cols = beta; absent cells stay empty.
std::string surface_csv(const PerformanceSurface& surface);
// Self-contained SVG 1.1 heatmap: linear color ramp, axis labels, no
// external assets and no timestamps. Absent cells stay blank.
std::string surface_svg(const PerformanceSurface& surface);
// "alpha,beta,H11,H22,H12,detH,class" rows.
std::string verdicts_csv(const std::vector<HessianVerdict>& verdicts);

}  // namespace cdn
