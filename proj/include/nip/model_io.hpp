#pragma once

// "NIPM" model container (method-tagged) and the HasherModel wrapper that
// gives the CLI one fit/hash surface over rbmh, lsh, pcahash, itq and
// threshold models. RBM models use their own "NIPR" format.

#include <string>

#include "nip/baselines.hpp"
#include "nip/postproc.hpp"
#include "nip/rbm.hpp"

namespace nip {

void save_pca_model(const std::string& path, const PcaModel& m,
                    const Metadata& meta);
PcaModel load_pca_model(const std::string& path, Metadata* meta_out = nullptr);

struct HasherModel {
  std::string method;  // rbmh | lsh | pcahash | itq | threshold
  RbmParams rbm;
  LshModel lsh;
  PcaModel pca;
  ItqModel itq;
  ThresholdModel threshold;
  Metadata meta;

  uint32_t n_bits() const;
  uint32_t input_dim() const;
  BinaryHash hash(const Descriptor& d) const;

  void save(const std::string& path) const;
  static HasherModel load(const std::string& path);
};

}  // namespace nip
