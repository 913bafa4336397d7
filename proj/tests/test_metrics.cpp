#include "flowbench/metrics.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace flowbench;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// P(s+ > s-) + 0.5 P(s+ = s-) over every positive/negative pair.
double pairwise_auc(const Vector& p, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (y[static_cast<std::size_t>(i)] != 1) continue;
    for (Index j = 0; j < p.size(); ++j) {
      if (y[static_cast<std::size_t>(j)] != 0) continue;
      pairs += 1.0;
      wins += p(i) > p(j) ? 1.0 : (p(i) == p(j) ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

std::vector<int> flip(const std::vector<int>& y) {
  std::vector<int> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = 1 - y[i];
  return out;
}

}  // namespace

TEST_SUITE("confusion") {
  TEST_CASE("basic counts and the tie rule") {
    CHECK(confusion(vec({0.9, 0.1}), std::vector<int>{1, 0}) == ConfusionCounts{1, 1, 0, 0});
    CHECK(confusion(vec({0.5}), std::vector<int>{0}).fp == 1);
    CHECK(confusion(vec({0.1, 0.2, 0.3}), std::vector<int>{0, 0, 0}).tn == 3);
    CHECK_THROWS_AS(confusion(vec({0.1}), std::vector<int>{0, 1}), Error);
    CHECK_THROWS_AS(confusion(vec({0.1}), std::vector<int>{0}, -0.1), Error);
    CHECK_THROWS_AS(confusion(vec({0.1}), std::vector<int>{0}, std::nan("")), Error);
  }

  TEST_CASE("extreme thresholds") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u;
    Vector p(40);
    std::vector<int> y(40);
    for (Index i = 0; i < 40; ++i) {
      p(i) = u(rng);
      y[static_cast<std::size_t>(i)] = static_cast<int>(i % 3 == 0);
    }
    CHECK(metrics(confusion(p, y, 0.0)).dr == 1.0);
    const auto none = confusion(p, y, 1.5);
    CHECK(none.tp + none.fp == 0);
    CHECK(metrics(none).far == 0.0);
    CHECK(confusion(p, y).total() == 40);
  }
}

TEST_SUITE("metrics") {
  TEST_CASE("worked example") {
    const auto m = metrics({50, 40, 5, 5});
    CHECK(std::abs(m.acc - 0.90) < 5e-5);
    CHECK(std::abs(m.dr - 0.9091) < 5e-5);
    CHECK(std::abs(m.far - 0.1111) < 5e-5);
    CHECK(std::abs(m.precision - 0.9091) < 5e-5);
    CHECK(std::abs(m.f1 - 0.9091) < 5e-5);
    CHECK_FALSE(m.degenerate);
  }

  TEST_CASE("perfect classifier") {
    const auto m = metrics({7, 9, 0, 0});
    CHECK(m.acc == 1.0);
    CHECK(m.dr == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.far == 0.0);
  }

  TEST_CASE("zero denominators give zero and a flag") {
    const auto m = metrics({0, 5, 0, 3});
    CHECK(m.dr == 0.0);
    CHECK(m.f1 == 0.0);
    CHECK(m.precision == 0.0);
    CHECK(m.degenerate);
    CHECK(metrics({0, 0, 0, 0}).acc == 0.0);
  }

  TEST_CASE("metrics follow the counts exactly") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
      const ConfusionCounts c{static_cast<std::int64_t>(1 + rng() % 50), static_cast<std::int64_t>(1 + rng() % 50),
                              static_cast<std::int64_t>(1 + rng() % 50), static_cast<std::int64_t>(1 + rng() % 50)};
      const auto m = metrics(c);
      const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn), fp = static_cast<double>(c.fp),
                   fn = static_cast<double>(c.fn);
      CHECK(m.acc == (tp + tn) / (tp + tn + fp + fn));
      CHECK(m.dr == tp / (tp + fn));
      CHECK(m.far == fp / (fp + tn));
      CHECK(m.precision == tp / (tp + fp));
      CHECK(std::abs(m.f1 - 2 * m.precision * m.dr / (m.precision + m.dr)) < 1e-12);
    }
  }
}

TEST_SUITE("roc") {
  TEST_CASE("hand-enumerable case") {
    const auto r = roc_auc(vec({0.9, 0.8, 0.7, 0.6}), std::vector<int>{1, 0, 1, 0});
    CHECK(r.auc == 0.75);
    CHECK(r.curve.points.front().far == 0.0);
    CHECK(r.curve.points.front().dr == 0.0);
    CHECK(r.curve.points.back().far == 1.0);
    CHECK(r.curve.points.back().dr == 1.0);
  }

  TEST_CASE("perfect separation and all-tied scores") {
    CHECK(roc_auc(vec({0.1, 0.2, 0.8, 0.9}), std::vector<int>{0, 0, 1, 1}).auc == 1.0);
    const auto tied = roc_auc(vec({0.5, 0.5, 0.5}), std::vector<int>{0, 1, 1});
    CHECK(tied.auc == 0.5);
    CHECK(tied.curve.points.size() == 2);
  }

  TEST_CASE("equals the pairwise rank statistic, ties included") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
      const Index n = 2 + static_cast<Index>(rng() % 49);
      const bool coarse = trial % 2 == 0;
      Vector p(n);
      std::vector<int> y(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) {
        p(i) = coarse ? static_cast<double>(rng() % 5) / 4.0 : uniform01(rng);
        y[static_cast<std::size_t>(i)] = static_cast<int>(rng() & 1U);
      }
      y[0] = 0;
      y[1] = 1;
      const auto r = roc_auc(p, y);
      CHECK(std::abs(r.auc - pairwise_auc(p, y)) < 1e-12);
      CHECK(std::abs(r.auc + roc_auc(p, flip(y)).auc - 1.0) < 1e-12);
      for (std::size_t k = 1; k < r.curve.points.size(); ++k) {
        CHECK(r.curve.points[k].far >= r.curve.points[k - 1].far);
        CHECK(r.curve.points[k].dr >= r.curve.points[k - 1].dr);
      }
    }
  }

  TEST_CASE("invariant under strictly increasing transforms") {
    std::mt19937_64 rng(4);
    Vector p(60);
    std::vector<int> y(60);
    for (Index i = 0; i < 60; ++i) {
      p(i) = static_cast<double>(rng() % 20) / 20.0;
      y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 3 == 0);
    }
    y[0] = 0;
    y[1] = 1;
    const double base = roc_auc(p, y).auc;
    CHECK(roc_auc(Vector(p.array().exp()), y).auc == base);
    CHECK(roc_auc(Vector(3.0 * p.array() - 2.0), y).auc == base);
  }

  TEST_CASE("uninformative scores sit near one half") {
    std::mt19937_64 rng(5);
    Vector p(4000);
    std::vector<int> y(4000);
    for (Index i = 0; i < 4000; ++i) {
      p(i) = uniform01(rng);
      y[static_cast<std::size_t>(i)] = static_cast<int>(rng() & 1U);
    }
    CHECK(std::abs(roc_auc(p, y).auc - 0.5) < 0.05);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(roc_auc(vec({0.1, 0.2}), std::vector<int>{1, 1}), Error);
    CHECK_THROWS_AS(roc_auc(vec({0.1, std::nan("")}), std::vector<int>{0, 1}), Error);
    CHECK_THROWS_AS(roc_auc(vec({0.1}), std::vector<int>{0, 1}), Error);
  }

  TEST_CASE("CSV dump") {
    RocCurve c{{{0.0, 0.0}, {0.25, 0.5}, {1.0, 1.0}}};
    std::ostringstream s;
    write_roc_csv(s, c);
    CHECK(s.str() == "far,dr\n0,0\n0.25,0.5\n1,1\n");
  }
}

TEST_SUITE("per-attack") {
  TEST_CASE("full and zero detection") {
    const std::vector<std::string> types{"dos", "dos", "fuzzers", "Normal"};
    const auto all = per_attack_dr(vec({0.9, 0.8, 0.7, 0.1}), std::vector<int>{1, 1, 1, 0}, types);
    CHECK(all.size() == 2);
    CHECK(all.at("dos").dr == 1.0);
    CHECK(all.at("fuzzers").dr == 1.0);

    std::vector<std::string> t(10, "worms");
    const auto none = per_attack_dr(Vector::Zero(10), std::vector<int>(10, 1), t);
    CHECK(none.at("worms").actual == 10);
    CHECK(none.at("worms").detected == 0);
    CHECK(none.at("worms").dr == 0.0);
    CHECK_THROWS_AS(per_attack_dr(Vector::Zero(2), std::vector<int>{1, 1}, t), Error);
  }

  TEST_CASE("planted detectability is recovered") {
    std::mt19937_64 rng(6);
    const std::vector<std::pair<std::string, double>> planted{{"dos", 0.95}, {"exploits", 0.7}, {"recon", 0.3}};
    const int per_type = 2000;
    Vector p(3 * per_type);
    std::vector<int> y(3 * per_type, 1);
    std::vector<std::string> types;
    Index row = 0;
    for (const auto& [name, rate] : planted) {
      for (int i = 0; i < per_type; ++i) {
        p(row++) = uniform01(rng) < rate ? 0.9 : 0.1;
        types.push_back(name);
      }
    }
    const auto r = per_attack_dr(p, y, types);
    for (const auto& [name, rate] : planted) {
      const double sigma = std::sqrt(rate * (1 - rate) / per_type);
      CHECK(std::abs(r.at(name).dr - rate) < 3 * sigma);
    }
  }
}

TEST_SUITE("evaluate") {
  TEST_CASE("report is consistent with its counts") {
    const auto data = testutil::blobs(200, 1, 0.4, 1.5, 7);
    const Vector p = (data.values.col(0).array() / 3.0).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    const auto r = evaluate(p, data.labels);
    CHECK(r.counts.total() == 200);
    const auto again = metrics(r.counts);
    CHECK(again.acc == r.m.acc);
    CHECK(again.f1 == r.m.f1);
    CHECK(r.auc == roc_auc(p, data.labels).auc);
    CHECK_FALSE(r.per_attack.has_value());
  }

  TEST_CASE("aggregation") {
    const auto a = evaluate(vec({0.9, 0.1, 0.6}), std::vector<int>{1, 0, 0});
    const EvalReport same[] = {a, a, a};
    const auto agg = aggregate_folds(same);
    CHECK(agg.m.acc == doctest::Approx(a.m.acc).epsilon(1e-15));
    CHECK(agg.auc == doctest::Approx(a.auc).epsilon(1e-15));
    CHECK(agg.counts.total() == 9);

    EvalReport x, y;
    x.auc = 0.9;
    y.auc = 1.0;
    const EvalReport pair[] = {x, y};
    CHECK(aggregate_folds(pair).auc == doctest::Approx(0.95));
    CHECK_THROWS_AS(aggregate_folds(std::span<const EvalReport>{}), Error);
  }

  TEST_CASE("five folds cover the dataset") {
    std::mt19937_64 rng(8);
    const int n = 103;
    std::vector<EvalReport> folds;
    for (int f = 0; f < 5; ++f) {
      std::vector<int> y;
      std::vector<double> p;
      for (int i = f; i < n; i += 5) {
        y.push_back(static_cast<int>(rng() & 1U));
        p.push_back(uniform01(rng));
      }
      y[0] = 0;
      y[1] = 1;
      folds.push_back(evaluate(Eigen::Map<Vector>(p.data(), static_cast<Index>(p.size())), y));
    }
    CHECK(aggregate_folds(folds).counts.total() == n);
  }

  TEST_CASE("per-attack tallies are summed across folds") {
    const std::vector<std::string> t{"Normal", "dos", "dos"};
    const auto a = evaluate(vec({0.1, 0.9, 0.2}), std::vector<int>{0, 1, 1}, t);
    const auto b = evaluate(vec({0.1, 0.9, 0.8}), std::vector<int>{0, 1, 1}, t);
    const EvalReport folds[] = {a, b};
    const auto agg = aggregate_folds(folds);
    REQUIRE(agg.per_attack.has_value());
    CHECK(agg.per_attack->at("dos").actual == 4);
    CHECK(agg.per_attack->at("dos").detected == 3);
    CHECK(agg.per_attack->at("dos").dr == 0.75);
  }
}
