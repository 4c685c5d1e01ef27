#pragma once

// Exhaustive L2 / Hamming ranking and retrieval metrics: average precision,
// mAP, Recall@R, the 4 x Recall@4 convention, and per-bit activation
// statistics for hash diagnostics.

#include <cstdint>
#include <string>
#include <vector>

#include "nip/descriptor.hpp"
#include "nip/orbit_store.hpp"

namespace nip {

uint64_t hamming(const BinaryHash& a, const BinaryHash& b);
double l2(const Descriptor& a, const Descriptor& b);

// one query against every code in the index, in index order
std::vector<uint32_t> scan_distances(const BinaryHash& query,
                                     const HashIndex& db);

struct RankedEntry {
  std::string image_id;
  double distance;
};

struct RankedList {
  std::string query_id;
  std::vector<RankedEntry> entries;  // ascending distance, ties by id
};

struct RankOptions {
  bool include_self = false;  // keep the query's own id in the ranking
};

RankedList rank_hamming(const BinaryHash& query, const HashIndex& db,
                        const RankOptions& opt = {});
RankedList rank_l2(const Descriptor& query, const DescriptorTable& db,
                   const RankOptions& opt = {});

// `relevant` must be sorted unique ids. AP averages precision at each
// relevant hit; the denominator counts the relevant items present in the
// ranking. No relevant retrieved gives 0.
double average_precision(const RankedList& r,
                         const std::vector<std::string>& relevant);
// |relevant in top R| / |relevant|
double recall_at_r(const RankedList& r,
                   const std::vector<std::string>& relevant, uint32_t R);

struct QueryResult {
  std::string query_id;
  double ap = 0.0;
  std::vector<double> recall;  // parallel to EvalOptions::recall_at
};

struct EvalOptions {
  bool include_self = false;
  std::vector<uint32_t> recall_at = {1, 4};
  bool ukb = false;  // adds 4 x mean Recall@4 with self included
};

struct EvalReport {
  std::vector<QueryResult> per_query;
  std::vector<uint32_t> recall_at;
  double map = 0.0;
  std::vector<double> mean_recall;
  bool has_ukb = false;
  double ukb_score = 0.0;
  Metadata meta;

  // per-query TSV rows, a summary line, then a key=value block
  std::string render() const;
};

EvalReport evaluate_hashes(const HashIndex& db, const GroundTruth& gt,
                           const EvalOptions& opt = {});
EvalReport evaluate_descriptors(const DescriptorTable& db,
                                const GroundTruth& gt,
                                const EvalOptions& opt = {});

struct BitStats {
  std::vector<double> means;  // activation frequency per bit
  double mean_of_means = 0.0;
  double std_across_bits = 0.0;  // dispersion of the per-bit means
};

BitStats bit_stats(const HashIndex& hashes);
std::string bit_stats_csv(const BitStats& s);

}  // namespace nip
