#include "crossdenoise/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crossdenoise/common.hpp"
#include "crossdenoise/io.hpp"
#include "crossdenoise/parallel.hpp"

namespace cdn {

std::string to_string(Curvature c) {
  switch (c) {
    case Curvature::concave: return "concave";
    case Curvature::convex: return "convex";
    case Curvature::saddle: return "saddle";
    case Curvature::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

HessianVerdict hessian_concavity(const std::array<std::array<double, 3>, 3>& values, double h_x,
                                 double h_y) {
  check(h_x > 0.0 && h_y > 0.0, "hessian: step sizes must be positive");
  for (const auto& row : values)
    for (double v : row) check(std::isfinite(v), "hessian: non-finite grid value");

  double f_c = values[1][1];
  HessianVerdict v;
  v.h11 = (values[2][1] - 2.0 * f_c + values[0][1]) / (h_x * h_x);
  v.h22 = (values[1][2] - 2.0 * f_c + values[1][0]) / (h_y * h_y);
  v.h12 = (values[2][2] - values[0][2] - values[2][0] + values[0][0]) / (4.0 * h_x * h_y);
  v.det_h = v.h11 * v.h22 - v.h12 * v.h12;

  if (v.h11 < 0.0 && v.det_h > 0.0) v.classification = Curvature::concave;
  else if (v.h11 > 0.0 && v.det_h > 0.0) v.classification = Curvature::convex;
  else if (v.det_h < 0.0) v.classification = Curvature::saddle;
  else v.classification = Curvature::indeterminate;
  return v;
}

namespace {

// mean best-validation score over seeds for one (alpha, beta) point
double train_point(const DataSplit& split, const TrainConfig& base, double alpha, double beta,
                   const std::vector<std::uint64_t>& seeds, int inner_workers, int max_epochs) {
  double sum = 0.0;
  for (std::uint64_t seed : seeds) {
    TrainConfig cfg = base;
    cfg.alpha = alpha;
    cfg.beta = beta;
    cfg.seed = seed;
    cfg.max_epochs = max_epochs;
    cfg.workers = inner_workers;
    TrainResult res = train(split, cfg);
    sum += res.best_score;
  }
  return sum / static_cast<double>(seeds.size());
}

}  // namespace

PerformanceSurface sweep(const DataSplit& split, const TrainConfig& base,
                         const std::vector<double>& alpha_values,
                         const std::vector<double>& beta_values,
                         const std::vector<std::uint64_t>& seeds, int workers,
                         int max_epochs_per_cell) {
  check(!alpha_values.empty() && !beta_values.empty(), "sweep: empty grid axis");
  check(!seeds.empty(), "sweep: need at least one seed");

  PerformanceSurface surface;
  surface.alphas = alpha_values;
  surface.betas = beta_values;
  surface.seeds_per_point = static_cast<int>(seeds.size());
  std::sort(surface.alphas.begin(), surface.alphas.end());
  std::sort(surface.betas.begin(), surface.betas.end());
  surface.cells.resize(surface.alphas.size() * surface.betas.size());

  int inner_workers = workers > 1 ? 1 : std::max(1, base.workers);
  std::int64_t n_cells = static_cast<std::int64_t>(surface.cells.size());
  std::size_t n_beta = surface.betas.size();
  parallel_for(n_cells, workers, [&](std::int64_t idx) {
    auto ai = static_cast<std::size_t>(idx) / n_beta;
    auto bi = static_cast<std::size_t>(idx) % n_beta;
    SurfaceCell& cell = surface.cells[static_cast<std::size_t>(idx)];
    cell.alpha = surface.alphas[ai];
    cell.beta = surface.betas[bi];
    cell.valid = cell.alpha >= 0.0 && cell.alpha <= cell.beta;
    if (!cell.valid) return;
    try {
      cell.score = train_point(split, base, cell.alpha, cell.beta, seeds, inner_workers,
                               max_epochs_per_cell);
    } catch (const std::exception&) {
      cell.failed = true;
      cell.valid = false;
    }
  });
  return surface;
}

std::vector<HessianVerdict> stencil_verdicts(const DataSplit& split, const TrainConfig& base,
                                             const std::vector<std::pair<double, double>>& anchors,
                                             double step, const std::vector<std::uint64_t>& seeds,
                                             int workers, int max_epochs_per_cell) {
  check(step > 0.0, "stencil: step must be positive");
  check(!anchors.empty(), "stencil: no anchors");
  for (auto [a, b] : anchors) {
    check(a - step >= 0.0, "stencil: alpha - step must stay >= 0 around anchor");
    check(a + step <= b - step, "stencil: 3x3 grid must satisfy alpha <= beta everywhere");
  }

  struct Point {
    std::size_t anchor;
    int di, dj;
  };
  std::vector<Point> points;
  for (std::size_t a = 0; a < anchors.size(); ++a)
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) points.push_back(Point{a, di, dj});

  int inner_workers = workers > 1 ? 1 : std::max(1, base.workers);
  std::vector<double> scores(points.size());
  parallel_for(static_cast<std::int64_t>(points.size()), workers, [&](std::int64_t idx) {
    const Point& p = points[static_cast<std::size_t>(idx)];
    double alpha = anchors[p.anchor].first + p.di * step;
    double beta = anchors[p.anchor].second + p.dj * step;
    scores[static_cast<std::size_t>(idx)] =
        train_point(split, base, alpha, beta, seeds, inner_workers, max_epochs_per_cell);
  });

  std::vector<HessianVerdict> verdicts;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    std::array<std::array<double, 3>, 3> grid{};
    for (std::size_t p = 0; p < points.size(); ++p)
      if (points[p].anchor == a) grid[points[p].di + 1][points[p].dj + 1] = scores[p];
    HessianVerdict v = hessian_concavity(grid, step, step);
    v.alpha = anchors[a].first;
    v.beta = anchors[a].second;
    verdicts.push_back(v);
  }
  return verdicts;
}

std::string surface_csv(const PerformanceSurface& surface) {
  std::vector<std::string> header = {"alpha"};
  for (double b : surface.betas) header.push_back(fmt_g(b, 15));
  std::string out = csv_row(header);
  for (std::size_t ai = 0; ai < surface.alphas.size(); ++ai) {
    std::vector<std::string> row = {fmt_g(surface.alphas[ai], 15)};
    for (std::size_t bi = 0; bi < surface.betas.size(); ++bi) {
      const SurfaceCell& cell = surface.at(ai, bi);
      row.push_back(cell.valid ? fmt_fixed(cell.score, 6) : std::string());
    }
    out += csv_row(row);
  }
  return out;
}

namespace {

std::string ramp_color(double t) {
  // linear ramp from deep violet to yellow
  constexpr int lo[3] = {68, 1, 84};
  constexpr int hi[3] = {253, 231, 37};
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(lo[0] + t * (hi[0] - lo[0]))),
                static_cast<int>(std::lround(lo[1] + t * (hi[1] - lo[1]))),
                static_cast<int>(std::lround(lo[2] + t * (hi[2] - lo[2]))));
  return buf;
}

}  // namespace

std::string surface_svg(const PerformanceSurface& surface) {
  constexpr int cell = 44;
  constexpr int left = 76, top = 34, bottom = 56, right = 120;
  int width = left + cell * static_cast<int>(surface.betas.size()) + right;
  int height = top + cell * static_cast<int>(surface.alphas.size()) + bottom;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& c : surface.cells)
    if (c.valid) {
      lo = std::min(lo, c.score);
      hi = std::max(hi, c.score);
    }
  bool flat = !(hi > lo);

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "<defs><linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">"
         "<stop offset=\"0\" stop-color=\"" + ramp_color(0.0) + "\"/>"
         "<stop offset=\"1\" stop-color=\"" + ramp_color(1.0) + "\"/>"
         "</linearGradient></defs>\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(left) + "\" y=\"20\" font-family=\"sans-serif\" "
         "font-size=\"13\">validation score over (alpha, beta)</text>\n";

  for (std::size_t ai = 0; ai < surface.alphas.size(); ++ai) {
    for (std::size_t bi = 0; bi < surface.betas.size(); ++bi) {
      const SurfaceCell& c = surface.at(ai, bi);
      if (!c.valid) continue;  // invalid domain cells stay blank
      double t = flat ? 0.5 : (c.score - lo) / (hi - lo);
      int x = left + static_cast<int>(bi) * cell;
      int y = top + static_cast<int>(ai) * cell;
      svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
             std::to_string(cell) + "\" height=\"" + std::to_string(cell) + "\" fill=\"" +
             ramp_color(t) + "\"><title>alpha=" + fmt_g(c.alpha, 15) + " beta=" +
             fmt_g(c.beta, 15) + " score=" + fmt_fixed(c.score, 6) + "</title></rect>\n";
    }
  }

  // axis tick labels
  for (std::size_t bi = 0; bi < surface.betas.size(); ++bi) {
    int x = left + static_cast<int>(bi) * cell + cell / 2;
    svg += "<text x=\"" + std::to_string(x) + "\" y=\"" +
           std::to_string(top + cell * static_cast<int>(surface.alphas.size()) + 18) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
           fmt_g(surface.betas[bi], 15) + "</text>\n";
  }
  for (std::size_t ai = 0; ai < surface.alphas.size(); ++ai) {
    int y = top + static_cast<int>(ai) * cell + cell / 2 + 4;
    svg += "<text x=\"" + std::to_string(left - 8) + "\" y=\"" + std::to_string(y) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
           fmt_g(surface.alphas[ai], 15) + "</text>\n";
  }
  int axis_y = top + cell * static_cast<int>(surface.alphas.size()) + 40;
  svg += "<text x=\"" + std::to_string(left + cell * static_cast<int>(surface.betas.size()) / 2) +
         "\" y=\"" + std::to_string(axis_y) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">beta</text>\n";
  svg += "<text x=\"16\" y=\"" +
         std::to_string(top + cell * static_cast<int>(surface.alphas.size()) / 2) +
         "\" font-family=\"sans-serif\" font-size=\"12\">alpha</text>\n";

  // legend
  int lx = left + cell * static_cast<int>(surface.betas.size()) + 24;
  int lh = std::max(60, cell * static_cast<int>(surface.alphas.size()) - 10);
  svg += "<rect x=\"" + std::to_string(lx) + "\" y=\"" + std::to_string(top) +
         "\" width=\"16\" height=\"" + std::to_string(lh) + "\" fill=\"url(#ramp)\"/>\n";
  if (std::isfinite(lo)) {
    svg += "<text x=\"" + std::to_string(lx + 22) + "\" y=\"" + std::to_string(top + 10) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + fmt_fixed(hi, 4) + "</text>\n";
    svg += "<text x=\"" + std::to_string(lx + 22) + "\" y=\"" + std::to_string(top + lh) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + fmt_fixed(lo, 4) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string verdicts_csv(const std::vector<HessianVerdict>& verdicts) {
  std::string out = "alpha,beta,H11,H22,H12,detH,class\n";
  for (const auto& v : verdicts)
    out += csv_row({fmt_g(v.alpha, 15), fmt_g(v.beta, 15), fmt_g(v.h11, 12), fmt_g(v.h22, 12),
                    fmt_g(v.h12, 12), fmt_g(v.det_h, 12), to_string(v.classification)});
  return out;
}

}  // namespace cdn
