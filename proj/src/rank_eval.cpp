#include "reidlab/rank_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "reidlab/kernels.hpp"

namespace reidlab {

int worker_count() {
  if (const char* env = std::getenv("REID_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

// Chunked parallel loop over [0, n); deterministic because chunks write
// disjoint rows.
void parallel_rows(std::size_t n, const std::function<void(std::size_t)>& body) {
  const int workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w)
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  for (auto& t : threads) t.join();
}

}  // namespace

RealMatrix l2_distance_matrix(const RealMatrix& queries,
                              const RealMatrix& gallery) {
  if (queries.cols != gallery.cols)
    throw std::invalid_argument("l2_distance_matrix: feature dim mismatch");
  RealMatrix dist(queries.rows, gallery.rows);
  RealVector qn(queries.rows), gn(gallery.rows);
  for (std::size_t i = 0; i < queries.rows; ++i)
    qn[i] = kernels::dot(queries.row(i), queries.row(i));
  for (std::size_t j = 0; j < gallery.rows; ++j)
    gn[j] = kernels::dot(gallery.row(j), gallery.row(j));
  parallel_rows(queries.rows, [&](std::size_t i) {
    for (std::size_t j = 0; j < gallery.rows; ++j) {
      double d2 = qn[i] + gn[j] - 2.0 * kernels::dot(queries.row(i), gallery.row(j));
      if (d2 < 0.0) d2 = 0.0;  // round-off
      dist.at(i, j) = std::sqrt(d2);
    }
  });
  return dist;
}

MatchMask protocol_mask(const std::vector<SampleMeta>& query,
                        const std::vector<SampleMeta>& gallery) {
  MatchMask mask(query.size(), gallery.size(), true);
  for (std::size_t i = 0; i < query.size(); ++i)
    for (std::size_t j = 0; j < gallery.size(); ++j)
      if (query[i].identity == gallery[j].identity &&
          query[i].camera == gallery[j].camera)
        mask.at(i, j) = 0;
  return mask;
}

namespace {

struct RankedQuery {
  std::vector<std::size_t> order;  // admissible gallery indices by distance
  bool has_positive = false;
};

RankedQuery rank_query(const RealMatrix& dist, const MatchMask& mask,
                       std::size_t q, const std::vector<int>& query_ids,
                       const std::vector<int>& gallery_ids) {
  RankedQuery r;
  for (std::size_t j = 0; j < dist.cols; ++j) {
    if (!mask.at(q, j)) continue;
    r.order.push_back(j);
    if (gallery_ids[j] == query_ids[q]) r.has_positive = true;
  }
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dist.at(q, a) < dist.at(q, b);
                   });
  return r;
}

void check_eval_shapes(const RealMatrix& dist, const MatchMask& mask,
                       const std::vector<int>& query_ids,
                       const std::vector<int>& gallery_ids) {
  if (dist.rows != mask.rows || dist.cols != mask.cols ||
      dist.rows != query_ids.size() || dist.cols != gallery_ids.size())
    throw std::invalid_argument("evaluation: shape mismatch");
}

}  // namespace

RealVector cmc(const RealMatrix& dist, const MatchMask& mask,
               const std::vector<int>& query_ids,
               const std::vector<int>& gallery_ids, int max_rank) {
  check_eval_shapes(dist, mask, query_ids, gallery_ids);
  if (max_rank < 1) throw std::invalid_argument("cmc: max_rank >= 1");
  RealVector hits(max_rank, 0.0);
  int evaluated = 0;
  for (std::size_t q = 0; q < dist.rows; ++q) {
    const RankedQuery r = rank_query(dist, mask, q, query_ids, gallery_ids);
    if (!r.has_positive) continue;
    ++evaluated;
    for (std::size_t pos = 0; pos < r.order.size(); ++pos)
      if (gallery_ids[r.order[pos]] == query_ids[q]) {
        for (int k = static_cast<int>(pos); k < max_rank; ++k) hits[k] += 1.0;
        break;
      }
  }
  if (evaluated == 0)
    throw std::invalid_argument("cmc: no query has an admissible positive");
  for (double& h : hits) h /= evaluated;
  return hits;
}

double mean_average_precision(const RealMatrix& dist, const MatchMask& mask,
                              const std::vector<int>& query_ids,
                              const std::vector<int>& gallery_ids) {
  check_eval_shapes(dist, mask, query_ids, gallery_ids);
  double ap_sum = 0.0;
  int evaluated = 0;
  for (std::size_t q = 0; q < dist.rows; ++q) {
    const RankedQuery r = rank_query(dist, mask, q, query_ids, gallery_ids);
    if (!r.has_positive) continue;
    ++evaluated;
    double ap = 0.0;
    int relevant = 0;
    for (std::size_t pos = 0; pos < r.order.size(); ++pos)
      if (gallery_ids[r.order[pos]] == query_ids[q]) {
        ++relevant;
        ap += static_cast<double>(relevant) / static_cast<double>(pos + 1);
      }
    ap_sum += ap / relevant;
  }
  if (evaluated == 0)
    throw std::invalid_argument("mAP: no query has an admissible positive");
  return ap_sum / evaluated;
}

EvalReport evaluate_ranking(const RealMatrix& dist, const MatchMask& mask,
                            const std::vector<int>& query_ids,
                            const std::vector<int>& gallery_ids,
                            int max_rank) {
  EvalReport report;
  report.map = mean_average_precision(dist, mask, query_ids, gallery_ids);
  report.cmc = cmc(dist, mask, query_ids, gallery_ids, max_rank);
  for (std::size_t q = 0; q < dist.rows; ++q) {
    const RankedQuery r = rank_query(dist, mask, q, query_ids, gallery_ids);
    r.has_positive ? ++report.num_queries_evaluated
                   : ++report.num_queries_skipped;
  }
  return report;
}

RealMatrix k_reciprocal_rerank(const RealMatrix& queries,
                               const RealMatrix& gallery, int k1, int k2,
                               double lambda) {
  if (queries.cols != gallery.cols)
    throw std::invalid_argument("rerank: feature dim mismatch");
  const std::size_t nq = queries.rows;
  const std::size_t ng = gallery.rows;
  const std::size_t n = nq + ng;
  if (k1 < 1 || k2 < 1 || k2 > k1)
    throw std::invalid_argument("rerank: need k1 >= k2 >= 1");
  if (static_cast<std::size_t>(k1) + 1 > n)
    throw std::invalid_argument("rerank: k1 too large for the set size");
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("rerank: lambda in [0, 1]");

  // Union feature matrix, queries first.
  RealMatrix all(n, queries.cols);
  std::copy(queries.data.begin(), queries.data.end(), all.data.begin());
  std::copy(gallery.data.begin(), gallery.data.end(),
            all.data.begin() + nq * queries.cols);

  // Squared distances, column-normalized to [0, 1] then transposed, as in
  // the published formulation; within a row this preserves ranking order.
  RealMatrix d0 = l2_distance_matrix(all, all);
  for (double& v : d0.data) v *= v;
  RealVector col_max(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      col_max[j] = std::max(col_max[j], d0.at(i, j));
  RealMatrix dist(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      dist.at(i, j) = col_max[i] > 0.0 ? d0.at(j, i) / col_max[i] : 0.0;

  // initial_rank[i] = indices of row i sorted by ascending distance
  std::vector<std::vector<std::size_t>> initial_rank(n);
  parallel_rows(n, [&](std::size_t i) {
    auto& order = initial_rank[i];
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return dist.at(i, a) < dist.at(i, b);
                     });
  });

  auto k_reciprocal = [&](std::size_t item, int k) {
    std::vector<std::size_t> result;
    for (int j = 0; j <= k; ++j) {
      const std::size_t cand = initial_rank[item][j];
      // reciprocal: item must appear in cand's top-k list too
      for (int b = 0; b <= k; ++b)
        if (initial_rank[cand][b] == item) {
          result.push_back(cand);
          break;
        }
    }
    return result;
  };

  // Encoding vectors V with half-k expansion and Gaussian weights.
  RealMatrix V(n, n);
  const int half_k = static_cast<int>(std::round(k1 / 2.0));
  parallel_rows(n, [&](std::size_t i) {
    std::vector<std::size_t> expansion = k_reciprocal(i, k1);
    const std::vector<std::size_t> base = expansion;
    for (std::size_t cand : base) {
      const std::vector<std::size_t> cand_set = k_reciprocal(cand, half_k);
      std::size_t common = 0;
      for (std::size_t c : cand_set)
        if (std::find(base.begin(), base.end(), c) != base.end()) ++common;
      if (3 * common > 2 * cand_set.size())
        expansion.insert(expansion.end(), cand_set.begin(), cand_set.end());
    }
    std::sort(expansion.begin(), expansion.end());
    expansion.erase(std::unique(expansion.begin(), expansion.end()),
                    expansion.end());
    double total = 0.0;
    for (std::size_t j : expansion) total += std::exp(-dist.at(i, j));
    for (std::size_t j : expansion) V.at(i, j) = std::exp(-dist.at(i, j)) / total;
  });

  // Local query expansion over the k2 nearest neighbors.
  if (k2 > 1) {
    RealMatrix Vqe(n, n);
    parallel_rows(n, [&](std::size_t i) {
      for (int j = 0; j < k2; ++j)
        kernels::axpy(1.0 / k2, V.row(initial_rank[i][j]), Vqe.row(i));
    });
    V = std::move(Vqe);
  }

  // Jaccard distance. Rows of V sum to 1, so sum(max) = 2 - sum(min).
  std::vector<std::vector<std::size_t>> inv_index(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (V.at(i, j) != 0.0) inv_index[j].push_back(i);

  RealMatrix out(nq, ng);
  parallel_rows(nq, [&](std::size_t q) {
    RealVector min_sum(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double vq = V.at(q, j);
      if (vq == 0.0) continue;
      for (std::size_t item : inv_index[j])
        min_sum[item] += std::min(vq, V.at(item, j));
    }
    for (std::size_t g = 0; g < ng; ++g) {
      const double jaccard = 1.0 - min_sum[nq + g] / (2.0 - min_sum[nq + g]);
      out.at(q, g) = (1.0 - lambda) * jaccard + lambda * dist.at(q, nq + g);
    }
  });
  return out;
}

// ---- interop files ----------------------------------------------------

std::vector<SampleMeta> FeatureSet::meta() const {
  std::vector<SampleMeta> m(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) m[i] = {ids[i], cameras[i]};
  return m;
}

void save_features(const std::string& path, const FeatureSet& fs) {
  if (fs.ids.size() != fs.features.rows || fs.cameras.size() != fs.features.rows)
    throw std::invalid_argument("save_features: id/camera count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_features: cannot open " + path);
  out.precision(17);
  out << "reidlab-features v1 " << fs.features.rows << ' ' << fs.features.cols
      << '\n';
  for (std::size_t i = 0; i < fs.features.rows; ++i) {
    out << fs.ids[i] << ' ' << fs.cameras[i];
    for (double v : fs.features.row(i)) out << ' ' << v;
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_features: write failed: " + path);
}

FeatureSet load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_features: cannot open " + path);
  std::string magic, version;
  std::size_t count = 0, dim = 0;
  in >> magic >> version >> count >> dim;
  if (magic != "reidlab-features" || version != "v1")
    throw std::runtime_error("load_features: unrecognized header in " + path);
  FeatureSet fs;
  fs.features = RealMatrix(count, dim);
  fs.ids.resize(count);
  fs.cameras.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    in >> fs.ids[i] >> fs.cameras[i];
    for (double& v : fs.features.row(i)) in >> v;
  }
  if (!in) throw std::runtime_error("load_features: truncated file: " + path);
  return fs;
}

void write_metrics_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "metric,value\n";
  out << "mAP," << report.map << '\n';
  for (std::size_t k = 0; k < report.cmc.size(); ++k)
    out << "rank" << (k + 1) << ',' << report.cmc[k] << '\n';
  out << "queries_evaluated," << report.num_queries_evaluated << '\n';
  out << "queries_skipped," << report.num_queries_skipped << '\n';
}

void write_cmc_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "k,accuracy\n";
  for (std::size_t k = 0; k < report.cmc.size(); ++k)
    out << (k + 1) << ',' << report.cmc[k] << '\n';
}

void write_cmc_svg(const std::string& path, const EvalReport& report) {
  const int w = 480, h = 320, margin = 40;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\""
      << w - margin << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
      << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">CMC"
      << "</text>\n";
  const std::size_t k = report.cmc.size();
  out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < k; ++i) {
    const double x =
        margin + (k == 1 ? 0.0
                         : static_cast<double>(i) / (k - 1) * (w - 2 * margin));
    const double y = h - margin - report.cmc[i] * (h - 2 * margin);
    out << x << ',' << y << ' ';
  }
  out << "\"/>\n</svg>\n";
}

}  // namespace reidlab
