#include <cmath>

#include "doctest.h"

#include "crossdenoise/common.hpp"
#include "crossdenoise/dataset.hpp"
#include "crossdenoise/landscape.hpp"

using namespace cdn;

namespace {

using Grid = std::array<std::array<double, 3>, 3>;

Grid sample_quadratic(double (*f)(double, double), double x0, double y0, double hx, double hy) {
  Grid g{};
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) g[i + 1][j + 1] = f(x0 + i * hx, y0 + j * hy);
  return g;
}

double neg_bowl(double x, double y) { return -(x * x + y * y); }
double bowl(double x, double y) { return x * x + y * y; }
double saddle_fn(double x, double y) { return x * x - y * y; }
double flat(double, double) { return 4.2; }

}  // namespace

TEST_SUITE_BEGIN("landscape");

TEST_CASE("quadratics classify exactly for any grid step") {
  for (double h : {0.01, 0.1, 0.25, 1.0, 3.0}) {
    auto concave = hessian_concavity(sample_quadratic(neg_bowl, 0.7, -0.2, h, h), h, h);
    CHECK(concave.classification == Curvature::concave);
    CHECK(concave.h11 == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(concave.h22 == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(concave.det_h == doctest::Approx(4.0).epsilon(1e-9));

    auto convex = hessian_concavity(sample_quadratic(bowl, -1.0, 2.0, h, h), h, h);
    CHECK(convex.classification == Curvature::convex);

    auto saddle = hessian_concavity(sample_quadratic(saddle_fn, 0.0, 0.0, h, h), h, h);
    CHECK(saddle.classification == Curvature::saddle);
    CHECK(saddle.det_h == doctest::Approx(-4.0).epsilon(1e-9));
  }
}

TEST_CASE("constant surface is indeterminate") {
  auto v = hessian_concavity(sample_quadratic(flat, 0, 0, 0.5, 0.5), 0.5, 0.5);
  CHECK(v.h11 == 0.0);
  CHECK(v.det_h == 0.0);
  CHECK(v.classification == Curvature::indeterminate);
}

TEST_CASE("classification is invariant to adding a constant") {
  auto g = sample_quadratic(saddle_fn, 0.3, 0.1, 0.2, 0.4);
  auto v1 = hessian_concavity(g, 0.2, 0.4);
  for (auto& row : g)
    for (auto& x : row) x += 17.5;
  auto v2 = hessian_concavity(g, 0.2, 0.4);
  CHECK(v1.classification == v2.classification);
  CHECK(v1.h11 == doctest::Approx(v2.h11).epsilon(1e-9));
  CHECK(v1.det_h == doctest::Approx(v2.det_h).epsilon(1e-9));
}

TEST_CASE("classification is invariant to swapping steps with a transpose") {
  auto g = sample_quadratic(neg_bowl, 0.4, 0.9, 0.2, 0.5);
  auto v1 = hessian_concavity(g, 0.2, 0.5);
  Grid t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[j][i] = g[i][j];
  auto v2 = hessian_concavity(t, 0.5, 0.2);
  CHECK(v1.classification == v2.classification);
  CHECK(v1.h11 == doctest::Approx(v2.h22).epsilon(1e-12));
  CHECK(v1.det_h == doctest::Approx(v2.det_h).epsilon(1e-12));
}

TEST_CASE("verdict labels partition all sign combinations") {
  // sweep sign patterns through crafted grids covering every branch
  auto mk = [](double h11, double h22, double h12) {
    Grid g{};
    // f(x, y) = (h11 x^2 + h22 y^2)/2 + h12 x y reproduces the target Hessian
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j)
        g[i + 1][j + 1] = 0.5 * h11 * i * i + 0.5 * h22 * j * j + h12 * i * j;
    return g;
  };
  CHECK(hessian_concavity(mk(-2, -2, 0), 1, 1).classification == Curvature::concave);
  CHECK(hessian_concavity(mk(2, 2, 0), 1, 1).classification == Curvature::convex);
  CHECK(hessian_concavity(mk(2, -2, 0), 1, 1).classification == Curvature::saddle);
  CHECK(hessian_concavity(mk(0, 0, 0), 1, 1).classification == Curvature::indeterminate);
  CHECK(hessian_concavity(mk(0, 2, 0), 1, 1).classification == Curvature::indeterminate);
}

TEST_CASE("hessian rejects non-finite values") {
  Grid g{};
  g[1][1] = std::nan("");
  CHECK_THROWS_AS(hessian_concavity(g, 1, 1), ContractError);
}

namespace {

DataSplit sweep_split() {
  auto ds = synth_generate(24, 18, 3, 0.25, 6, 0.1);
  return split_dataset(ds, 6);
}

TrainConfig sweep_base() {
  TrainConfig cfg;
  cfg.model = ModelKind::gmf;
  cfg.embedding_dim = 4;
  cfg.batch_size = 64;
  cfg.eval_ks = {5};
  cfg.selection_k = 5;
  cfg.patience = 50;
  return cfg;
}

}  // namespace

TEST_CASE("1x1 sweep equals a single training run") {
  auto split = sweep_split();
  auto base = sweep_base();
  auto surface = sweep(split, base, {1.0}, {2.0}, {9}, 1, 3);
  REQUIRE(surface.cells.size() == 1);
  CHECK(surface.cells[0].valid);

  TrainConfig direct = base;
  direct.alpha = 1.0;
  direct.beta = 2.0;
  direct.seed = 9;
  direct.max_epochs = 3;
  auto res = train(split, direct);
  CHECK(surface.cells[0].score == res.best_score);
}

TEST_CASE("sweep marks alpha > beta cells absent and fills the rest") {
  auto split = sweep_split();
  auto surface = sweep(split, sweep_base(), {0.5, 2.0}, {1.0, 2.5}, {4}, 2, 2);
  REQUIRE(surface.cells.size() == 4);
  CHECK(surface.at(0, 0).valid);        // 0.5 <= 1.0
  CHECK(surface.at(0, 1).valid);        // 0.5 <= 2.5
  CHECK_FALSE(surface.at(1, 0).valid);  // 2.0 > 1.0
  CHECK(surface.at(1, 1).valid);        // 2.0 <= 2.5

  auto csv = surface_csv(surface);
  CHECK(csv.find("alpha,1,2.5\n") == 0);
  CHECK(csv.find("\n2,,") != std::string::npos);  // invalid cell stays empty

  auto svg = surface_svg(surface);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("rect") != std::string::npos);
}

TEST_CASE("sweep cell with uniform strategy at alpha = beta = 1 matches the vanilla score") {
  auto split = sweep_split();
  auto base = sweep_base();
  base.strategy.strategy = WeightStrategy::uniform;
  auto surface = sweep(split, base, {1.0}, {1.0}, {3}, 1, 4);

  TrainConfig vanilla = base;
  vanilla.seed = 3;
  vanilla.max_epochs = 4;
  auto res = train_unweighted(split, vanilla);
  CHECK(surface.cells[0].score == res.best_score);
}

TEST_CASE("5x5 upper-triangle sweep peaks away from the domain boundary") {
  // boundary cells approximate the decayed regions of the (alpha, beta)
  // domain: the alpha = 0 row and the beta = 5 edge
  auto ds = synth_generate(150, 100, 6, 0.3, 3, 0.06);
  auto split = split_dataset(ds, 3);
  TrainConfig base;
  base.model = ModelKind::gmf;
  base.embedding_dim = 16;
  base.batch_size = 128;
  base.patience = 10;
  base.eval_ks = {10};
  base.selection_k = 10;
  std::vector<double> grid = {0.0, 1.25, 2.5, 3.75, 5.0};
  auto surface = sweep(split, base, grid, grid, {1, 2}, 2, 30);

  double best = -1.0;
  std::size_t best_a = 0, best_b = 0;
  for (std::size_t ai = 0; ai < 5; ++ai)
    for (std::size_t bi = 0; bi < 5; ++bi) {
      const auto& c = surface.at(ai, bi);
      if (c.valid && c.score > best) {
        best = c.score;
        best_a = ai;
        best_b = bi;
      }
    }
  CHECK(best_a != 0);  // not on the alpha = 0 edge
  CHECK(best_b != 4);  // not on the beta = 5 edge
}

TEST_CASE("stencil mode yields one verdict per anchor") {
  auto split = sweep_split();
  auto verdicts = stencil_verdicts(split, sweep_base(), {{1.0, 2.0}}, 0.05, {5}, 2, 2);
  REQUIRE(verdicts.size() == 1);
  CHECK(verdicts[0].alpha == 1.0);
  CHECK(verdicts[0].beta == 2.0);
  auto csv = verdicts_csv(verdicts);
  CHECK(csv.find("alpha,beta,H11,H22,H12,detH,class\n") == 0);
}

TEST_CASE("a failing cell is marked absent instead of aborting the sweep") {
  DataSplit broken = sweep_split();
  broken.train.interactions.clear();  // every training run will throw
  auto surface = sweep(broken, sweep_base(), {1.0}, {2.0}, {3}, 1, 2);
  REQUIRE(surface.cells.size() == 1);
  CHECK(surface.cells[0].failed);
  CHECK_FALSE(surface.cells[0].valid);
  auto csv = surface_csv(surface);
  CHECK(csv.find("\n1,\n") != std::string::npos);  // absent cell stays empty
}

TEST_CASE("stencil rejects grids that leave the alpha <= beta domain") {
  auto split = sweep_split();
  CHECK_THROWS_AS(stencil_verdicts(split, sweep_base(), {{1.0, 1.01}}, 0.05, {5}, 1, 2),
                  ContractError);
}

TEST_SUITE_END();
