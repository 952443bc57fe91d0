#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "test_util.hpp"

#include "crossdenoise/common.hpp"
#include "crossdenoise/rng.hpp"
#include "crossdenoise/weighting.hpp"

using namespace cdn;

namespace {

LossRecordSet records_from(const std::vector<double>& losses) {
  LossRecordSet records;
  for (std::size_t j = 0; j < losses.size(); ++j)
    records.push_back({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j), losses[j]});
  return records;
}

std::vector<std::optional<double>> present(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

}  // namespace

TEST_SUITE_BEGIN("weighting");

TEST_CASE("accumulate sums per entity over every occurrence") {
  EntityLossStats stats(2, 3);
  accumulate(stats, {{0, 0, 0.2}, {0, 1, 0.4}});
  CHECK(stats.user_loss_sum[0] == doctest::Approx(0.6));
  CHECK(stats.user_count[0] == 2);

  accumulate(stats, {});
  CHECK(stats.user_count[0] == 2);  // empty records leave stats unchanged

  EntityLossStats item_stats(4, 2);
  accumulate(item_stats, {{0, 1, 0.1}, {1, 1, 0.1}, {2, 1, 0.1}});
  CHECK(item_stats.item_loss_sum[1] == doctest::Approx(0.3));
  CHECK(item_stats.item_count[1] == 3);
}

TEST_CASE("accumulate rejects negative losses") {
  EntityLossStats stats(1, 1);
  LossRecordSet bad = {{0, 0, -0.1}};
  CHECK_THROWS_AS(accumulate(stats, bad), ContractError);
}

TEST_CASE("mean_entity_loss guards the zero-count division") {
  EntityLossStats stats(3, 1);
  accumulate(stats, {{0, 0, 0.2}, {0, 0, 0.4}, {2, 0, 0.5}});
  auto [users, items] = mean_entity_loss(stats);
  CHECK(*users[0] == doctest::Approx(0.3));
  CHECK_FALSE(users[1].has_value());  // absent, not 0 and not NaN
  CHECK(*users[2] == doctest::Approx(0.5));
  CHECK(*items[0] == doctest::Approx(1.1 / 3.0));
}

TEST_CASE("mean_entity_loss: equal sums and counts give equal averages") {
  EntityLossStats stats(4, 1);
  accumulate(stats, {{0, 0, 0.3}, {1, 0, 0.3}, {2, 0, 0.3}, {3, 0, 0.3},
                     {0, 0, 0.5}, {1, 0, 0.5}, {2, 0, 0.5}, {3, 0, 0.5}});
  auto [users, items] = mean_entity_loss(stats);
  for (const auto& u : users) CHECK(*u == *users[0]);
  (void)items;
}

TEST_CASE("rank_map orients lowest loss to beta") {
  auto rep = rank_map(present({0.2, 0.5, 0.9}), 1.0, 2.0);
  CHECK(rep.scores == std::vector<double>{2.0, 1.5, 1.0});
}

TEST_CASE("rank_map degenerate range collapses to a constant") {
  auto rep = rank_map(present({0.4, 0.1, 0.9, 0.3}), 1.5, 1.5);
  for (double s : rep.scores) CHECK(s == 1.5);
}

TEST_CASE("rank_map sends absent entities to the midpoint") {
  std::vector<std::optional<double>> avg = {0.4, std::nullopt, 0.1};
  auto rep = rank_map(avg, 0.0, 1.0);
  CHECK(rep.scores == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("rank_map: single present entity gets the midpoint") {
  std::vector<std::optional<double>> avg = {std::nullopt, 0.7};
  auto rep = rank_map(avg, 1.0, 3.0);
  CHECK(rep.scores == std::vector<double>{2.0, 2.0});
}

TEST_CASE("rank_map rejects alpha above beta") {
  CHECK_THROWS_AS(rank_map(present({0.1}), 2.0, 1.0), ContractError);
}

TEST_CASE("rank_map properties: bounds, endpoints, shift invariance") {
  Rng rng(31);
  for (int t = 0; t < 300; ++t) {
    std::size_t k = 2 + rng.below(40);
    std::vector<double> losses(k);
    for (auto& l : losses) l = rng.uniform(0.0, 5.0);
    double alpha = rng.uniform(0.0, 5.0);
    double beta = alpha + rng.uniform(0.0, 5.0 - alpha);
    auto rep = rank_map(present(losses), alpha, beta);

    auto lo = std::min_element(losses.begin(), losses.end()) - losses.begin();
    auto hi = std::max_element(losses.begin(), losses.end()) - losses.begin();
    CHECK(rep.scores[lo] == beta);
    CHECK(rep.scores[hi] == alpha);
    for (double s : rep.scores) {
      CHECK(s >= alpha);
      CHECK(s <= beta);
    }

    std::vector<double> shifted(losses);
    for (auto& l : shifted) l += 3.7;
    auto rep_shift = rank_map(present(shifted), alpha, beta);
    CHECK(rep.scores == rep_shift.scores);
  }
}

TEST_CASE("ecdf: single record gets the Hazen midpoint") {
  auto w = ecdf_base_weights(records_from({0.42}));
  REQUIRE(w.size() == 1);
  CHECK(w[0] == 0.5);
}

TEST_CASE("ecdf spec example: three distinct losses") {
  auto w = ecdf_base_weights(records_from({0.1, 0.5, 0.9}));
  CHECK(w[0] == doctest::Approx(2.5 / 3.0).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(1.5 / 3.0).epsilon(1e-15));
  CHECK(w[2] == doctest::Approx(0.5 / 3.0).epsilon(1e-15));
}

TEST_CASE("ecdf ties share the right-side rank") {
  auto w = ecdf_base_weights(records_from({0.3, 0.3}));
  CHECK(w[0] == 0.75);
  CHECK(w[1] == 0.75);
}

TEST_CASE("ecdf equals the counting oracle, with and without ties") {
  Rng rng(77);
  for (int t = 0; t < 200; ++t) {
    std::size_t n = 1 + rng.below(200);
    auto records = oracle::random_records(n, 40, 40, rng, t % 2 == 0);
    auto fast = ecdf_base_weights(records);
    auto slow = oracle::ecdf_counting(records);
    for (std::size_t j = 0; j < n; ++j) CHECK(fast[j] == doctest::Approx(slow[j]).epsilon(1e-14));
  }
}

TEST_CASE("ecdf distinct losses form the exact Hazen permutation with mean one half") {
  Rng rng(12);
  std::size_t n = 37;
  std::vector<double> losses;
  for (std::size_t j = 0; j < n; ++j) losses.push_back(rng.uniform(0.0, 2.0));
  auto w = ecdf_base_weights(records_from(losses));
  auto sorted = w;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t r = 1; r <= n; ++r)
    CHECK(sorted[r - 1] == doctest::Approx((double(r) - 0.5) / double(n)).epsilon(1e-15));
  double mean = 0.0;
  for (double v : w) mean += v;
  CHECK(mean / double(n) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ecdf depends on ranks only: invariant under increasing transforms") {
  Rng rng(13);
  std::vector<double> losses;
  for (int j = 0; j < 60; ++j) losses.push_back(rng.uniform(0.0, 3.0));
  auto w1 = ecdf_base_weights(records_from(losses));
  std::vector<double> transformed(losses);
  for (auto& l : transformed) l = std::exp(2.0 * l) + 1.0;  // strictly increasing
  auto w2 = ecdf_base_weights(records_from(transformed));
  CHECK(w1 == w2);
}

TEST_CASE("ecdf parallel path equals the serial path bitwise") {
  Rng rng(14);
  // large enough to engage the block-parallel sort, with plenty of ties
  auto records = oracle::random_records(50000, 50, 50, rng, true);
  auto serial = ecdf_base_weights(records, 1);
  CHECK(serial == ecdf_base_weights(records, 2));
  CHECK(serial == ecdf_base_weights(records, 5));
}

TEST_CASE("uniform weights are all ones") {
  CHECK(uniform_base_weights(records_from({0.1, 2.0, 0.5})) ==
        std::vector<double>{1.0, 1.0, 1.0});
  CHECK(uniform_base_weights({}).empty());
}

TEST_CASE("uniform base composed with fuse leaves only the entity factors") {
  LossRecordSet records = {{0, 1, 0.8}, {1, 0, 0.1}};
  auto base = uniform_base_weights(records);
  ReputationVector wu{{1.2, 1.8}, 1.0, 2.0};
  ReputationVector wi{{1.5, 1.1}, 1.0, 2.0};
  auto table = fuse(base, wu, wi, records);
  CHECK(table.lookup(0, 1) == 1.0 * wu.scores[0] * wi.scores[1]);
  CHECK(table.lookup(1, 0) == 1.0 * wu.scores[1] * wi.scores[0]);
}

TEST_CASE("topk spec example keeps the two smallest") {
  auto w = topk_base_weights(records_from({0.1, 0.5, 0.9, 0.7}), 0.5);
  CHECK(w == std::vector<double>{1.0, 1.0, 0.0, 0.0});
}

TEST_CASE("topk guards: full remember rate and the floor rule") {
  auto all = topk_base_weights(records_from({0.4, 0.2, 0.9}), 1.0);
  CHECK(all == std::vector<double>{1.0, 1.0, 1.0});
  auto single = topk_base_weights(records_from({0.4}), 0.5);  // floor(0.5) = 0 discards
  CHECK(single == std::vector<double>{1.0});
}

TEST_CASE("topk equals the counting oracle") {
  Rng rng(15);
  for (int t = 0; t < 150; ++t) {
    std::size_t n = 1 + rng.below(120);
    auto records = oracle::random_records(n, 20, 20, rng, t % 2 == 0);
    double rho = rng.uniform(0.05, 1.0);
    CHECK(topk_base_weights(records, rho) == oracle::topk_counting(records, rho));
  }
}

TEST_CASE("linear scaling spec examples and guards") {
  CHECK(linear_base_weights(records_from({0.1, 0.5, 0.9})) ==
        std::vector<double>{1.0, 0.5, 0.0});
  CHECK(linear_base_weights(records_from({0.7, 0.7, 0.7})) ==
        std::vector<double>{1.0, 1.0, 1.0});
  CHECK(linear_base_weights(records_from({0.7})) == std::vector<double>{1.0});
}

TEST_CASE("linear equals the negate-then-min-max oracle") {
  Rng rng(16);
  for (int t = 0; t < 150; ++t) {
    std::size_t n = 1 + rng.below(100);
    auto records = oracle::random_records(n, 20, 20, rng, t % 3 == 0);
    CHECK(linear_base_weights(records) == oracle::linear_minmax(records));
  }
}

TEST_CASE("ecdf, linear and topk are monotone nonincreasing in loss") {
  Rng rng(18);
  for (int t = 0; t < 50; ++t) {
    auto records = oracle::random_records(2 + rng.below(80), 20, 20, rng, t % 2 == 0);
    auto check_monotone = [&](const std::vector<double>& w) {
      for (std::size_t a = 0; a < records.size(); ++a)
        for (std::size_t b = 0; b < records.size(); ++b)
          if (records[a].loss < records[b].loss) CHECK(w[a] >= w[b]);
    };
    check_monotone(ecdf_base_weights(records));
    check_monotone(linear_base_weights(records));
    check_monotone(topk_base_weights(records, 0.6));
  }
}

TEST_CASE("gmm separates a two-component mixture") {
  Rng rng(19);
  LossRecordSet records;
  for (int j = 0; j < 100; ++j)
    records.push_back({0, 0, std::max(0.0, rng.normal(0.1, 0.02))});
  for (int j = 0; j < 100; ++j)
    records.push_back({0, 0, std::max(0.0, rng.normal(2.0, 0.02))});
  auto result = gmm_base_weights(records, WeightStrategyConfig{});
  for (int j = 0; j < 100; ++j) CHECK(result.weights[j] > 0.99);
  for (int j = 100; j < 200; ++j) CHECK(result.weights[j] < 0.01);
}

TEST_CASE("gmm degenerate inputs: identical losses weigh equally, singleton weighs one") {
  auto equal = gmm_base_weights(records_from({0.5, 0.5, 0.5, 0.5}), WeightStrategyConfig{});
  for (double w : equal.weights) CHECK(w == doctest::Approx(equal.weights[0]));
  auto single = gmm_base_weights(records_from({0.5}), WeightStrategyConfig{});
  CHECK(single.weights == std::vector<double>{1.0});
}

TEST_CASE("gmm never throws on hard inputs, reports convergence instead") {
  WeightStrategyConfig cfg;
  cfg.gmm_max_iters = 1;  // force an early cut-off
  Rng rng(20);
  auto records = oracle::random_records(50, 5, 5, rng, false);
  auto result = gmm_base_weights(records, cfg);
  CHECK(result.weights.size() == 50);
  CHECK(result.iterations == 1);
}

TEST_CASE("fuse multiplies base with both reputations") {
  LossRecordSet records = {{0, 0, 0.2}};
  ReputationVector wu{{2.0}, 0.0, 2.0};
  ReputationVector wi{{1.5}, 0.0, 2.0};
  auto table = fuse({0.5}, wu, wi, records);
  CHECK(table.lookup(0, 0) == 1.5);
  CHECK(table.lookup(0, 1) == 1.0);  // absent pair defaults to 1
}

TEST_CASE("fuse toggles replace factors with exactly one") {
  Rng rng(23);
  auto records = oracle::random_records(50, 8, 8, rng, false);
  auto base = ecdf_base_weights(records);
  EntityLossStats stats(8, 8);
  accumulate(stats, records);
  auto [ua, ia] = mean_entity_loss(stats);
  auto wu = rank_map(ua, 0.5, 2.5);
  auto wi = rank_map(ia, 0.5, 2.5);

  ComponentToggles bw_only{true, false, false};
  auto table = fuse(base, wu, wi, records, bw_only);
  for (std::size_t j = 0; j < records.size(); ++j) {
    bool last_of_pair = true;
    for (std::size_t k = j + 1; k < records.size(); ++k)
      if (records[k].user == records[j].user && records[k].item == records[j].item)
        last_of_pair = false;
    if (last_of_pair) CHECK(table.lookup(records[j].user, records[j].item) == base[j]);
  }
}

TEST_CASE("fuse with alpha = beta = 1 collapses entity factors") {
  Rng rng(24);
  auto records = oracle::random_records(40, 6, 6, rng, false);
  auto base = ecdf_base_weights(records);
  EntityLossStats stats(6, 6);
  accumulate(stats, records);
  auto [ua, ia] = mean_entity_loss(stats);
  auto table = fuse(base, rank_map(ua, 1.0, 1.0), rank_map(ia, 1.0, 1.0), records);
  for (std::size_t j = 0; j < records.size(); ++j) {
    bool last_of_pair = true;
    for (std::size_t k = j + 1; k < records.size(); ++k)
      if (records[k].user == records[j].user && records[k].item == records[j].item)
        last_of_pair = false;
    if (last_of_pair)
      CHECK(table.lookup(records[j].user, records[j].item) ==
            doctest::Approx(base[j]).epsilon(1e-15));
  }
}

TEST_CASE("fuse is multiplicative-exact and the last duplicate wins") {
  LossRecordSet records = {{1, 2, 0.3}, {1, 2, 0.8}};
  ReputationVector wu{{1.0, 1.3}, 0.0, 2.0};
  ReputationVector wi{{1.0, 1.0, 0.7}, 0.0, 2.0};
  std::vector<double> base = {0.9, 0.4};
  auto table = fuse(base, wu, wi, records);
  CHECK(table.size() == 1);
  CHECK(table.lookup(1, 2) == base[1] * wu.scores[1] * wi.scores[2]);
}

TEST_CASE("fuse demands reputation coverage") {
  LossRecordSet records = {{3, 0, 0.3}};
  ReputationVector wu{{1.0}, 0.0, 1.0};  // only user 0 covered
  ReputationVector wi{{1.0}, 0.0, 1.0};
  CHECK_THROWS_AS(fuse({0.5}, wu, wi, records), ContractError);
}

TEST_CASE("weight table text dump round-trips the numbers at full precision") {
  LossRecordSet records = {{0, 1, 0.123456789}, {2, 0, 1.7}};
  auto table = fuse({1.0 / 3.0, 0.25}, ReputationVector{{1.1, 1.0, 0.9}, 0, 2},
                    ReputationVector{{1.0, 1.2}, 0, 2}, records);
  auto text = table.serialize();
  CHECK(text.find('\t') != std::string::npos);
  double parsed = std::stod(text.substr(text.find_last_of('\t') + 1));
  CHECK(parsed == table.lookup(2, 0));
}

TEST_SUITE_END();
