#pragma once

// Retrieval evaluation: L2 distance ranking, protocol masking, CMC, mAP,
// and k-reciprocal re-ranking. Ties break by gallery index (stable sort)
// so reports are reproducible.

#include <cstdint>
#include <string>
#include <vector>

#include "reidlab/numerics.hpp"

namespace reidlab {

struct SampleMeta {
  int identity = 0;
  int camera = 0;
};

struct MatchMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> admissible;  // row-major

  MatchMask() = default;
  MatchMask(std::size_t r, std::size_t c, bool fill = true)
      : rows(r), cols(c), admissible(r * c, fill ? 1 : 0) {}
  std::uint8_t& at(std::size_t r, std::size_t c) {
    return admissible[r * cols + c];
  }
  bool at(std::size_t r, std::size_t c) const {
    return admissible[r * cols + c] != 0;
  }
};

// Euclidean distances, queries x gallery, via the expanded form with tiny
// negatives clamped to zero.
RealMatrix l2_distance_matrix(const RealMatrix& queries,
                              const RealMatrix& gallery);

// Same identity AND same camera as the query is inadmissible.
MatchMask protocol_mask(const std::vector<SampleMeta>& query,
                        const std::vector<SampleMeta>& gallery);

// Rank-k accuracies, k = 1..max_rank. Queries without an admissible
// positive are excluded from the average.
RealVector cmc(const RealMatrix& dist, const MatchMask& mask,
               const std::vector<int>& query_ids,
               const std::vector<int>& gallery_ids, int max_rank);

double mean_average_precision(const RealMatrix& dist, const MatchMask& mask,
                              const std::vector<int>& query_ids,
                              const std::vector<int>& gallery_ids);

struct EvalReport {
  double map = 0.0;
  RealVector cmc;  // cmc[k-1] = rank-k accuracy
  int num_queries_evaluated = 0;
  int num_queries_skipped = 0;
  std::string settings;
};

EvalReport evaluate_ranking(const RealMatrix& dist, const MatchMask& mask,
                            const std::vector<int>& query_ids,
                            const std::vector<int>& gallery_ids, int max_rank);

// k-reciprocal re-ranking over the union of queries and gallery:
// reciprocal neighbor sets expanded by half-k inclusion, Gaussian-weighted
// encoding vectors, local query expansion over k2 neighbors, Jaccard
// distance, then d* = (1 - lambda) * d_J + lambda * d_original (with the
// original distances squared and column-normalized, as published).
RealMatrix k_reciprocal_rerank(const RealMatrix& queries,
                               const RealMatrix& gallery, int k1, int k2,
                               double lambda);

// ---- interop files ----------------------------------------------------

struct FeatureSet {
  RealMatrix features;
  std::vector<int> ids;
  std::vector<int> cameras;

  std::vector<SampleMeta> meta() const;
};

void save_features(const std::string& path, const FeatureSet& fs);
FeatureSet load_features(const std::string& path);

void write_metrics_csv(const std::string& path, const EvalReport& report);
void write_cmc_csv(const std::string& path, const EvalReport& report);
void write_cmc_svg(const std::string& path, const EvalReport& report);

// Worker cap from REID_LAB_THREADS (defaults to hardware concurrency).
int worker_count();

}  // namespace reidlab
