#include "nip/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nip/kernels.hpp"

namespace nip {

uint64_t hamming(const BinaryHash& a, const BinaryHash& b) {
  if (a.n_bits != b.n_bits)
    throw DimError("hamming over " + std::to_string(a.n_bits) + " vs " +
                   std::to_string(b.n_bits) + " bits");
  return kernels::active().hamming(a.bits.data(), b.bits.data(), a.bits.size());
}

double l2(const Descriptor& a, const Descriptor& b) {
  if (a.values.size() != b.values.size())
    throw DimError("l2 over dim " + std::to_string(a.values.size()) + " vs " +
                   std::to_string(b.values.size()));
  return std::sqrt(kernels::active().l2sq(a.values.data(), b.values.data(),
                                          a.values.size()));
}

std::vector<uint32_t> scan_distances(const BinaryHash& query,
                                     const HashIndex& db) {
  if (query.n_bits != db.n_bits())
    throw DimError("query has " + std::to_string(query.n_bits) +
                   " bits, index has " + std::to_string(db.n_bits()));
  std::vector<uint32_t> out(db.size());
  kernels::active().hamming_scan(query.bits.data(), db.codes(), db.stride(),
                                 db.size(), out.data());
  return out;
}

namespace {

RankedList assemble(const std::string& query_id,
                    const std::vector<std::string>& ids,
                    const std::vector<double>& dist, bool include_self) {
  RankedList r;
  r.query_id = query_id;
  r.entries.reserve(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (!include_self && ids[i] == query_id) continue;
    r.entries.push_back({ids[i], dist[i]});
  }
  std::sort(r.entries.begin(), r.entries.end(),
            [](const RankedEntry& a, const RankedEntry& b) {
              if (a.distance != b.distance) return a.distance < b.distance;
              return a.image_id < b.image_id;
            });
  return r;
}

}  // namespace

RankedList rank_hamming(const BinaryHash& query, const HashIndex& db,
                        const RankOptions& opt) {
  std::vector<uint32_t> d = scan_distances(query, db);
  std::vector<double> dist(d.begin(), d.end());
  return assemble(query.image_id, db.ids(), dist, opt.include_self);
}

RankedList rank_l2(const Descriptor& query, const DescriptorTable& db,
                   const RankOptions& opt) {
  if (query.values.size() != db.dim())
    throw DimError("query dim " + std::to_string(query.values.size()) +
                   " does not match table dim " + std::to_string(db.dim()));
  const auto& k = kernels::active();
  std::vector<double> dist(db.size());
  for (size_t i = 0; i < db.size(); ++i)
    dist[i] = std::sqrt(k.l2sq(query.values.data(), db.row(i).data(), db.dim()));
  return assemble(query.image_id, db.ids(), dist, opt.include_self);
}

double average_precision(const RankedList& r,
                         const std::vector<std::string>& relevant) {
  if (relevant.empty()) throw MetricError("empty relevant set");
  size_t present = 0;
  for (const auto& e : r.entries)
    if (std::binary_search(relevant.begin(), relevant.end(), e.image_id))
      ++present;
  if (present == 0) return 0.0;
  double sum = 0.0;
  size_t hits = 0;
  for (size_t k = 0; k < r.entries.size(); ++k) {
    if (std::binary_search(relevant.begin(), relevant.end(),
                           r.entries[k].image_id)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(present);
}

double recall_at_r(const RankedList& r,
                   const std::vector<std::string>& relevant, uint32_t R) {
  if (relevant.empty()) throw MetricError("empty relevant set");
  if (R < 1) throw MetricError("R must be >= 1");
  size_t hits = 0;
  size_t top = std::min<size_t>(R, r.entries.size());
  for (size_t k = 0; k < top; ++k)
    if (std::binary_search(relevant.begin(), relevant.end(),
                           r.entries[k].image_id))
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

namespace {

template <typename RankFn>
EvalReport evaluate_impl(const GroundTruth& gt, const EvalOptions& opt,
                         RankFn&& rank_query) {
  EvalReport rep;
  rep.recall_at = opt.recall_at;
  rep.mean_recall.assign(opt.recall_at.size(), 0.0);
  double ukb_sum = 0.0;

  for (const auto& q : gt.queries) {
    RankedList ranked = rank_query(q.query_id, opt.include_self);
    QueryResult res;
    res.query_id = q.query_id;
    res.ap = average_precision(ranked, q.relevant);
    for (size_t i = 0; i < opt.recall_at.size(); ++i) {
      res.recall.push_back(recall_at_r(ranked, q.relevant, opt.recall_at[i]));
      rep.mean_recall[i] += res.recall.back();
    }
    if (opt.ukb) {
      RankedList with_self = opt.include_self
                                 ? std::move(ranked)
                                 : rank_query(q.query_id, true);
      ukb_sum += recall_at_r(with_self, q.relevant, 4);
    }
    rep.map += res.ap;
    rep.per_query.push_back(std::move(res));
  }

  const double n = static_cast<double>(gt.queries.size());
  if (n > 0) {
    rep.map /= n;
    for (double& v : rep.mean_recall) v /= n;
    if (opt.ukb) {
      rep.has_ukb = true;
      rep.ukb_score = 4.0 * ukb_sum / n;
    }
  }
  return rep;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf);
}

}  // namespace

EvalReport evaluate_hashes(const HashIndex& db, const GroundTruth& gt,
                           const EvalOptions& opt) {
  EvalReport rep = evaluate_impl(
      gt, opt, [&](const std::string& qid, bool include_self) {
        int64_t pos = db.find(qid);
        if (pos < 0) throw NotFound("query id '" + qid + "' not in hash index");
        return rank_hamming(db.hash(static_cast<size_t>(pos)), db,
                            {include_self});
      });
  BitStats bs = bit_stats(db);
  rep.meta.set("metric", "hamming");
  rep.meta.set("ap_definition", std::string("non-interpolated/relevant-present"));
  rep.meta.set("n_bits", static_cast<uint64_t>(db.n_bits()));
  rep.meta.set("bit_mean_of_means", bs.mean_of_means);
  rep.meta.set("bit_std_across_bits", bs.std_across_bits);
  return rep;
}

EvalReport evaluate_descriptors(const DescriptorTable& db,
                                const GroundTruth& gt, const EvalOptions& opt) {
  EvalReport rep = evaluate_impl(
      gt, opt, [&](const std::string& qid, bool include_self) {
        int64_t pos = db.find(qid);
        if (pos < 0)
          throw NotFound("query id '" + qid + "' not in descriptor table");
        return rank_l2(db.descriptor(static_cast<size_t>(pos)), db,
                       {include_self});
      });
  rep.meta.set("metric", "l2");
  rep.meta.set("ap_definition", std::string("non-interpolated/relevant-present"));
  rep.meta.set("dim", static_cast<uint64_t>(db.dim()));
  return rep;
}

std::string EvalReport::render() const {
  std::string out = "query_id\tap";
  for (uint32_t r : recall_at) out += "\trecall@" + std::to_string(r);
  out += '\n';
  for (const auto& q : per_query) {
    out += q.query_id + '\t' + fmt(q.ap);
    for (double v : q.recall) out += '\t' + fmt(v);
    out += '\n';
  }
  out += "summary\tmap=" + fmt(map);
  for (size_t i = 0; i < recall_at.size(); ++i)
    out += "\trecall@" + std::to_string(recall_at[i]) + "=" + fmt(mean_recall[i]);
  if (has_ukb) out += "\tukb_score=" + fmt(ukb_score);
  out += '\n';
  out += "map=" + fmt(map) + '\n';
  for (size_t i = 0; i < recall_at.size(); ++i)
    out += "recall@" + std::to_string(recall_at[i]) + "=" + fmt(mean_recall[i]) + '\n';
  if (has_ukb) out += "ukb_score=" + fmt(ukb_score) + '\n';
  out += "n_queries=" + std::to_string(per_query.size()) + '\n';
  for (const auto& kv : meta.entries()) out += kv.first + "=" + kv.second + '\n';
  return out;
}

BitStats bit_stats(const HashIndex& hashes) {
  if (hashes.size() == 0) throw ValidationError("empty hash collection");
  BitStats s;
  const uint32_t J = hashes.n_bits();
  s.means.assign(J, 0.0);
  for (size_t i = 0; i < hashes.size(); ++i) {
    auto code = hashes.code(i);
    for (uint32_t j = 0; j < J; ++j)
      if ((code[j >> 3] >> (j & 7)) & 1) s.means[j] += 1.0;
  }
  for (double& m : s.means) m /= static_cast<double>(hashes.size());
  for (double m : s.means) s.mean_of_means += m;
  s.mean_of_means /= J;
  double var = 0.0;
  for (double m : s.means) var += (m - s.mean_of_means) * (m - s.mean_of_means);
  s.std_across_bits = std::sqrt(var / J);
  return s;
}

std::string bit_stats_csv(const BitStats& s) {
  std::string out = "bit,mean_activation\n";
  for (size_t j = 0; j < s.means.size(); ++j) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", j, s.means[j]);
    out += buf;
  }
  return out;
}

}  // namespace nip
