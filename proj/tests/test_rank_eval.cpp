#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <cstdio>
#include <numeric>

#include "reidlab/rank_eval.hpp"
#include "rerank_reference.hpp"

using namespace reidlab;

namespace {

RealMatrix random_matrix(std::size_t rows, std::size_t cols, RngStream& rng,
                         double scale = 1.0) {
  RealMatrix m(rows, cols);
  for (double& v : m.data) v = scale * rng.normal();
  return m;
}

// Brute-force CMC/mAP oracle: per query, sort (distance, index) pairs and
// scan. Written independently of the library's rank_query path.
struct OracleResult {
  RealVector cmc;
  double map = 0.0;
  int evaluated = 0;
};

OracleResult oracle_eval(const RealMatrix& dist, const MatchMask& mask,
                         const std::vector<int>& qids,
                         const std::vector<int>& gids, int max_rank) {
  OracleResult out;
  out.cmc.assign(max_rank, 0.0);
  double ap_sum = 0.0;
  for (std::size_t q = 0; q < dist.rows; ++q) {
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t g = 0; g < dist.cols; ++g)
      if (mask.at(q, g)) order.emplace_back(dist.at(q, g), g);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) {
                       return a.first < b.first;
                     });
    std::size_t relevant = 0;
    for (const auto& [d, g] : order) relevant += gids[g] == qids[q] ? 1 : 0;
    if (relevant == 0) continue;
    ++out.evaluated;

    std::size_t first_hit = order.size();
    std::size_t hits = 0;
    double ap = 0.0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (gids[order[pos].second] != qids[q]) continue;
      ++hits;
      first_hit = std::min(first_hit, pos);
      ap += static_cast<double>(hits) / (pos + 1);
    }
    ap_sum += ap / relevant;
    for (int k = static_cast<int>(first_hit); k < max_rank; ++k)
      out.cmc[k] += 1.0;
  }
  for (double& v : out.cmc) v /= out.evaluated;
  out.map = ap_sum / out.evaluated;
  return out;
}

}  // namespace

TEST_CASE("distance matrix hand values") {
  RealMatrix q(2, 3);
  q.data = {0, 0, 0, 1, 0, 0};
  RealMatrix g(2, 3);
  g.data = {0, 0, 0, 0, 1, 0};
  const RealMatrix d = l2_distance_matrix(q, g);
  CHECK(d.at(0, 0) == 0.0);
  CHECK(d.at(0, 1) == doctest::Approx(1.0));
  CHECK(d.at(1, 0) == doctest::Approx(1.0));
  CHECK(d.at(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("distance matrix matches a naive loop on random data") {
  RngStream rng(41);
  const RealMatrix q = random_matrix(50, 17, rng, 2.0);
  const RealMatrix g = random_matrix(50, 17, rng, 2.0);
  const RealMatrix d = l2_distance_matrix(q, g);
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t j = 0; j < 50; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 17; ++k) {
        const double diff = q.at(i, k) - g.at(j, k);
        s += diff * diff;
      }
      CHECK(d.at(i, j) == doctest::Approx(std::sqrt(s)).epsilon(1e-9));
      CHECK(d.at(i, j) >= 0.0);
    }
}

TEST_CASE("distances are invariant under an orthogonal transform") {
  RngStream rng(42);
  const std::size_t dim = 8;
  const RealMatrix q = random_matrix(6, dim, rng);
  const RealMatrix g = random_matrix(9, dim, rng);

  // Gram-Schmidt on a random square matrix gives an orthogonal basis.
  std::vector<RealVector> basis;
  while (basis.size() < dim) {
    RealVector v(dim);
    for (double& x : v) x = rng.normal();
    for (const RealVector& b : basis) {
      double proj = 0.0;
      for (std::size_t k = 0; k < dim; ++k) proj += v[k] * b[k];
      for (std::size_t k = 0; k < dim; ++k) v[k] -= proj * b[k];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  auto rotate = [&](const RealMatrix& m) {
    RealMatrix out(m.rows, dim);
    for (std::size_t r = 0; r < m.rows; ++r)
      for (std::size_t c = 0; c < dim; ++c)
        for (std::size_t k = 0; k < dim; ++k)
          out.at(r, c) += basis[c][k] * m.at(r, k);
    return out;
  };

  const RealMatrix d0 = l2_distance_matrix(q, g);
  const RealMatrix d1 = l2_distance_matrix(rotate(q), rotate(g));
  for (std::size_t i = 0; i < d0.data.size(); ++i)
    CHECK(d0.data[i] == doctest::Approx(d1.data[i]).epsilon(1e-9));
}

TEST_CASE("protocol mask rejects same-identity same-camera pairs only") {
  const std::vector<SampleMeta> query{{1, 0}, {2, 1}};
  const std::vector<SampleMeta> gallery{{1, 0}, {1, 1}, {2, 1}, {3, 0}};
  const MatchMask m = protocol_mask(query, gallery);
  CHECK_FALSE(m.at(0, 0));  // same id, same camera
  CHECK(m.at(0, 1));        // same id, different camera
  CHECK(m.at(0, 2));
  CHECK(m.at(0, 3));
  CHECK(m.at(1, 0));
  CHECK(m.at(1, 1));
  CHECK_FALSE(m.at(1, 2));
  CHECK(m.at(1, 3));
}

TEST_CASE("cmc hand example: first hit at position 3") {
  RealMatrix dist(1, 5);
  dist.data = {0.1, 0.2, 0.3, 0.4, 0.5};
  const std::vector<int> qids{7};
  const std::vector<int> gids{1, 2, 7, 7, 3};
  const RealVector c = cmc(dist, MatchMask(1, 5), qids, gids, 5);
  CHECK(c == RealVector{0.0, 0.0, 1.0, 1.0, 1.0});
}

TEST_CASE("mAP hand examples") {
  const std::vector<int> qids{1};

  SUBCASE("pattern relevant, non, relevant, non gives 5/6") {
    RealMatrix dist(1, 4);
    dist.data = {0.1, 0.2, 0.3, 0.4};
    const std::vector<int> gids{1, 2, 1, 3};
    CHECK(mean_average_precision(dist, MatchMask(1, 4), qids, gids) ==
          doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  }
  SUBCASE("all relevant items first gives 1") {
    RealMatrix dist(1, 4);
    dist.data = {0.1, 0.2, 0.3, 0.4};
    const std::vector<int> gids{1, 1, 2, 2};
    CHECK(mean_average_precision(dist, MatchMask(1, 4), qids, gids) ==
          doctest::Approx(1.0));
  }
  SUBCASE("single relevant at position r gives 1/r") {
    for (int r = 1; r <= 6; ++r) {
      RealMatrix dist(1, 6);
      std::vector<int> gids(6, 2);
      for (int j = 0; j < 6; ++j) dist.at(0, j) = 0.1 * (j + 1);
      gids[r - 1] = 1;
      CHECK(mean_average_precision(dist, MatchMask(1, 6), qids, gids) ==
            doctest::Approx(1.0 / r).epsilon(1e-12));
    }
  }
}

TEST_CASE("cmc and mAP match the brute-force oracle on random instances") {
  RngStream rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nq = 4 + rng.next_below(6);
    const std::size_t ng = 10 + rng.next_below(15);
    const int max_rank = 5;
    RealMatrix dist(nq, ng);
    for (double& v : dist.data) v = rng.uniform();
    std::vector<int> qids(nq), gids(ng);
    std::vector<SampleMeta> qmeta(nq), gmeta(ng);
    for (std::size_t i = 0; i < nq; ++i) {
      qids[i] = static_cast<int>(rng.next_below(5));
      qmeta[i] = {qids[i], static_cast<int>(rng.next_below(3))};
    }
    for (std::size_t j = 0; j < ng; ++j) {
      gids[j] = static_cast<int>(rng.next_below(5));
      gmeta[j] = {gids[j], static_cast<int>(rng.next_below(3))};
    }
    const MatchMask mask = protocol_mask(qmeta, gmeta);

    bool any_admissible_positive = false;
    for (std::size_t q = 0; q < nq && !any_admissible_positive; ++q)
      for (std::size_t g = 0; g < ng; ++g)
        if (mask.at(q, g) && gids[g] == qids[q]) {
          any_admissible_positive = true;
          break;
        }
    if (!any_admissible_positive) continue;

    const OracleResult ref = oracle_eval(dist, mask, qids, gids, max_rank);
    const EvalReport got = evaluate_ranking(dist, mask, qids, gids, max_rank);
    CHECK(got.num_queries_evaluated == ref.evaluated);
    CHECK(got.map == doctest::Approx(ref.map).epsilon(1e-12));
    REQUIRE(got.cmc.size() == static_cast<std::size_t>(max_rank));
    for (int k = 0; k < max_rank; ++k)
      CHECK(got.cmc[k] == doctest::Approx(ref.cmc[k]).epsilon(1e-12));
    for (int k = 1; k < max_rank; ++k) CHECK(got.cmc[k] >= got.cmc[k - 1]);
  }
}

TEST_CASE("cmc throws when no query has an admissible positive") {
  RealMatrix dist(1, 2);
  dist.data = {0.1, 0.2};
  CHECK_THROWS_AS(cmc(dist, MatchMask(1, 2), {9}, {1, 2}, 2),
                  std::invalid_argument);
}

TEST_CASE("ties break by gallery index") {
  RealMatrix dist(1, 3);
  dist.data = {0.5, 0.5, 0.5};
  const RealVector c = cmc(dist, MatchMask(1, 3), {1}, {2, 1, 1}, 3);
  // all tied: the first relevant item by index sits at position 2
  CHECK(c == RealVector{0.0, 1.0, 1.0});
}

TEST_CASE("re-ranking with lambda 1 preserves the original per-query order") {
  RngStream rng(44);
  const RealMatrix q = random_matrix(5, 6, rng);
  const RealMatrix g = random_matrix(20, 6, rng);
  const RealMatrix orig = l2_distance_matrix(q, g);
  const RealMatrix rr = k_reciprocal_rerank(q, g, 8, 3, 1.0);
  REQUIRE(rr.rows == 5);
  REQUIRE(rr.cols == 20);
  for (std::size_t i = 0; i < 5; ++i) {
    std::vector<std::size_t> a(20), b(20);
    std::iota(a.begin(), a.end(), 0);
    b = a;
    std::stable_sort(a.begin(), a.end(), [&](std::size_t x, std::size_t y) {
      return orig.at(i, x) < orig.at(i, y);
    });
    std::stable_sort(b.begin(), b.end(), [&](std::size_t x, std::size_t y) {
      return rr.at(i, x) < rr.at(i, y);
    });
    CHECK(a == b);
  }
}

TEST_CASE("re-ranking lifts mAP on noisy overlapping clusters") {
  // Identities as Gaussian blobs with heavy overlap: neighborhood context
  // should recover matches that raw distances mis-rank.
  RngStream rng(52);
  const std::size_t dim = 8;
  const int ids = 10, per = 8;
  RealMatrix g(ids * per, dim), q(ids * 2, dim);
  std::vector<int> gids, qids;
  std::vector<RealVector> centers(ids, RealVector(dim));
  for (auto& c : centers)
    for (auto& v : c) v = 2.0 * rng.normal();
  for (int i = 0; i < ids; ++i)
    for (int s = 0; s < per; ++s) {
      for (std::size_t d = 0; d < dim; ++d)
        g.at(i * per + s, d) = centers[i][d] + 1.1 * rng.normal();
      gids.push_back(i);
    }
  for (int i = 0; i < ids; ++i)
    for (int s = 0; s < 2; ++s) {
      for (std::size_t d = 0; d < dim; ++d)
        q.at(i * 2 + s, d) = centers[i][d] + 1.1 * rng.normal();
      qids.push_back(i);
    }

  const MatchMask mask(q.rows, g.rows);
  const RealMatrix raw = l2_distance_matrix(q, g);
  const double raw_map = mean_average_precision(raw, mask, qids, gids);
  for (int k1 : {15, 20, 25}) {
    const RealMatrix rr = k_reciprocal_rerank(q, g, k1, 6, 0.3);
    CHECK(mean_average_precision(rr, mask, qids, gids) > raw_map);
  }
}

TEST_CASE("re-ranking matches the straight-line reference implementation") {
  RngStream rng(46);
  for (int trial = 0; trial < 5; ++trial) {
    const RealMatrix q = random_matrix(10, 7, rng);
    RealMatrix g = random_matrix(30, 7, rng);
    // add structure so reciprocal sets are nontrivial
    for (std::size_t j = 0; j < 30; ++j)
      for (std::size_t d = 0; d < 7; ++d) g.at(j, d) += (j % 5) * 1.5;
    const int k1 = 6 + trial;
    const int k2 = 2 + trial % 3;
    const double lambda = 0.1 * (trial + 1);
    const RealMatrix got = k_reciprocal_rerank(q, g, k1, k2, lambda);
    const RealMatrix want = testing::rerank_reference(q, g, k1, k2, lambda);
    REQUIRE(got.rows == want.rows);
    REQUIRE(got.cols == want.cols);
    for (std::size_t i = 0; i < got.data.size(); ++i)
      CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-9));
  }
}

TEST_CASE("re-ranking parameter validation") {
  RngStream rng(47);
  const RealMatrix q = random_matrix(2, 3, rng);
  const RealMatrix g = random_matrix(4, 3, rng);
  CHECK_THROWS_AS(k_reciprocal_rerank(q, g, 0, 1, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(k_reciprocal_rerank(q, g, 3, 5, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(k_reciprocal_rerank(q, g, 20, 6, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(k_reciprocal_rerank(q, g, 3, 2, 1.5), std::invalid_argument);
}

TEST_CASE("feature file round trip") {
  RngStream rng(48);
  FeatureSet fs;
  fs.features = random_matrix(7, 4, rng);
  fs.ids = {1, 1, 2, 2, 3, 3, 4};
  fs.cameras = {0, 1, 0, 1, 0, 1, 0};
  const std::string path = "features_roundtrip.txt";
  save_features(path, fs);
  const FeatureSet back = load_features(path);
  std::remove(path.c_str());
  CHECK(back.ids == fs.ids);
  CHECK(back.cameras == fs.cameras);
  REQUIRE(back.features.rows == fs.features.rows);
  REQUIRE(back.features.cols == fs.features.cols);
  for (std::size_t i = 0; i < fs.features.data.size(); ++i)
    CHECK(back.features.data[i] ==
          doctest::Approx(fs.features.data[i]).epsilon(1e-15));
}
