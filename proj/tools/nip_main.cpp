// nip: pipeline driver for orbit stores, invariant-pooled descriptors,
// binary hashing and Hamming/L2 retrieval evaluation.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "nip/baselines.hpp"
#include "nip/descriptor.hpp"
#include "nip/eval.hpp"
#include "nip/model_io.hpp"
#include "nip/orbit_store.hpp"
#include "nip/pooling.hpp"
#include "nip/postproc.hpp"
#include "nip/rbm.hpp"
#include "nip/rng.hpp"
#include "nip/synth.hpp"

namespace {

using namespace nip;

unsigned resolve_threads(unsigned flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("NIP_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

template <typename Fn>
void parallel_for(size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    size_t i;
    while ((i = next.fetch_add(1)) < n) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  unsigned count = static_cast<unsigned>(std::min<size_t>(threads, n));
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// config echo + input digests; enough to re-run the producing command
Metadata provenance(const std::string& cmd, int argc, char** argv,
                    const std::vector<std::pair<std::string, std::string>>& inputs) {
  Metadata m;
  m.set("tool", std::string("nip"));
  m.set("cmd", cmd);
  std::string args;
  for (int i = 1; i < argc; ++i) {
    if (i > 1) args += ' ';
    args += argv[i];
  }
  m.set("args", args);
  for (const auto& [name, path] : inputs) {
    m.set("input." + name, path);
    m.set("input." + name + ".digest", digest_hex(fnv1a_file(path)));
  }
  return m;
}

void write_text(const std::string& path, const std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  if (std::fwrite(text.data(), 1, text.size(), f) != text.size()) {
    std::fclose(f);
    throw IoError("short write to '" + path + "'");
  }
  if (std::fclose(f) != 0) throw IoError("close failed for '" + path + "'");
}

std::string sniff_magic(const std::string& path) {
  BinReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  return std::string(magic, 4);
}

struct SynthArgs {
  std::string out_store, out_gt;
  SynthSpec spec;
};

struct ConvertArgs {
  std::string manifest, out_store;
  OrbitShape shape;
};

struct PoolArgs {
  std::string store, out, sequence = "A_S,S_T,M_R";
  bool l2norm = true;
  unsigned threads = 0;
};

struct FitPcaArgs {
  std::string in, out_model, model_in, out_desc;
  uint32_t out_dim = 256;
  double epsilon = 1e-5;
};

struct FitHashArgs {
  std::string in, out_model, method = "rbmh";
  uint32_t bits = 256;
  uint64_t seed = 0;
  TrainConfig train;
  uint32_t itq_iterations = 50;
  std::string threshold_mode = "median";
  double threshold_value = 0.0;
};

struct HashArgs {
  std::string in, model, out;
  unsigned threads = 0;
};

struct EvalArgs {
  std::string in, gt, out;
  bool include_self = false;
  bool ukb = false;
  std::vector<uint32_t> recall_at = {1, 4};
};

struct StatsArgs {
  std::string in, out;
};

int cmd_synth(const SynthArgs& a, int argc, char** argv) {
  generate_synth_store(a.spec, a.out_store, a.out_gt,
                       provenance("synth", argc, argv, {}));
  std::printf("wrote %s (%u x %u items, shape %s) and %s\n",
              a.out_store.c_str(), a.spec.n_clusters, a.spec.items_per_cluster,
              a.spec.shape.str().c_str(), a.out_gt.c_str());
  return 0;
}

int cmd_convert(const ConvertArgs& a, int argc, char** argv) {
  std::FILE* f = std::fopen(a.manifest.c_str(), "rb");
  if (!f) throw IoError("cannot open manifest '" + a.manifest + "'");
  std::string content;
  char buf[1 << 14];
  size_t got;
  while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) content.append(buf, got);
  std::fclose(f);

  std::vector<std::string> ids;
  std::vector<std::pair<std::string, std::string>> entries;  // id, raw path
  size_t pos = 0, line_no = 0;
  while (pos < content.size()) {
    size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("manifest line " + std::to_string(line_no) +
                       ": missing TAB");
    entries.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    ids.push_back(entries.back().first);
  }

  const uint64_t expect_bytes = a.shape.elements() * 4;
  write_store(a.out_store, a.shape, ids,
              [&](const std::string& id, std::vector<float>& out) {
                for (const auto& [eid, path] : entries) {
                  if (eid != id) continue;
                  BinReader r(path);
                  if (r.size() != expect_bytes)
                    throw ShapeMismatch("raw file '" + path + "' has " +
                                        std::to_string(r.size()) +
                                        " bytes, shape wants " +
                                        std::to_string(expect_bytes));
                  out.resize(a.shape.elements());
                  r.f32_array(out.data(), out.size());
                  return;
                }
              },
              provenance("convert", argc, argv, {{"manifest", a.manifest}}));
  std::printf("wrote %s (%zu orbits, shape %s)\n", a.out_store.c_str(),
              ids.size(), a.shape.str().c_str());
  return 0;
}

int cmd_validate(const std::string& store, const std::string& out) {
  ValidationReport report = validate_store(store);
  std::string text = report.str();
  if (!out.empty()) write_text(out, text);
  std::fputs(text.c_str(), stdout);
  return report.passed ? 0 : 1;
}

int cmd_pool(const PoolArgs& a, int argc, char** argv) {
  OrbitStore store(a.store);
  PoolSequence seq = parse_sequence(a.sequence);
  unsigned threads = resolve_threads(a.threads);

  std::vector<Descriptor> descs(store.size());
  parallel_for(store.size(), threads, [&](size_t i) {
    OrbitTensor t = store.read_orbit_at(i);
    Descriptor d = nip_descriptor(t, seq);
    descs[i] = a.l2norm ? l2_normalize(d) : std::move(d);
  });

  DescriptorTable table;
  for (const Descriptor& d : descs) table.add(d);
  table.metadata() = provenance("pool", argc, argv, {{"store", a.store}});
  table.metadata().set("sequence", seq.str());
  table.metadata().set("l2norm", static_cast<uint64_t>(a.l2norm ? 1 : 0));
  table.save(a.out);
  std::printf("wrote %s (%zu descriptors, dim %u, sequence %s)\n",
              a.out.c_str(), table.size(), table.dim(), seq.str().c_str());
  return 0;
}

int cmd_fit_pca(const FitPcaArgs& a, int argc, char** argv) {
  DescriptorTable table = DescriptorTable::load(a.in);
  PcaModel model;
  if (!a.model_in.empty()) {
    model = load_pca_model(a.model_in);
  } else {
    model = fit_pca_whitening(table, a.out_dim, a.epsilon);
    if (!a.out_model.empty()) {
      Metadata meta = provenance("fit-pca", argc, argv, {{"descriptors", a.in}});
      meta.set("out_dim", static_cast<uint64_t>(a.out_dim));
      meta.set("epsilon", a.epsilon);
      save_pca_model(a.out_model, model, meta);
      std::printf("wrote %s (pca %zu -> %zu, epsilon %g)\n", a.out_model.c_str(),
                  model.in_dim(), model.out_dim(), a.epsilon);
    }
  }
  if (!a.out_desc.empty()) {
    DescriptorTable projected = apply_pca_whitening(model, table);
    projected.metadata() =
        provenance("fit-pca", argc, argv, {{"descriptors", a.in}});
    projected.metadata().set("pca_out_dim", static_cast<uint64_t>(model.out_dim()));
    projected.save(a.out_desc);
    std::printf("wrote %s (%zu descriptors, dim %u)\n", a.out_desc.c_str(),
                projected.size(), projected.dim());
  }
  return 0;
}

int cmd_fit_hash(FitHashArgs& a, int argc, char** argv) {
  DescriptorTable table = DescriptorTable::load(a.in);
  HasherModel model;
  model.method = a.method;
  model.meta = provenance("fit-hash", argc, argv, {{"descriptors", a.in}});
  model.meta.set("method", a.method);
  model.meta.set("bits", static_cast<uint64_t>(a.bits));
  model.meta.set("seed", a.seed);

  if (a.method == "rbmh") {
    a.train.seed = a.seed;
    a.train.validate();
    RbmParams init = init_rbm(table.dim(), a.bits, derive_seed(a.seed, "rbm-init"));
    auto [params, history] = train_rbm(init, to_matrix(table), a.train);
    model.rbm = std::move(params);
    Metadata train_meta = a.train.to_metadata();
    for (const auto& [k, v] : train_meta.entries())
      model.meta.set("train." + k, v);
    if (!history.epochs.empty()) {
      model.meta.set("final_recon_error", history.epochs.back().recon_error);
      model.meta.set("final_regularizer", history.epochs.back().regularizer);
    }
  } else if (a.method == "lsh") {
    model.lsh = lsh_fit(table.dim(), a.bits, derive_seed(a.seed, "lsh"));
  } else if (a.method == "pcahash") {
    model.pca = pcahash_fit(to_matrix(table), a.bits);
    model.meta.set("centered", static_cast<uint64_t>(1));
  } else if (a.method == "itq") {
    model.itq = itq_fit(to_matrix(table), a.bits, a.itq_iterations,
                        derive_seed(a.seed, "itq"));
    model.meta.set("itq_iterations", static_cast<uint64_t>(a.itq_iterations));
  } else if (a.method == "threshold") {
    if (a.threshold_mode == "median") {
      model.threshold = fit_threshold_median(table);
    } else if (a.threshold_mode == "fixed") {
      model.threshold = make_threshold_fixed(table.dim(), a.threshold_value);
    } else {
      throw ValidationError("threshold mode must be median or fixed");
    }
    model.meta.set("threshold_mode", a.threshold_mode);
  } else {
    throw ValidationError("unknown hasher method '" + a.method + "'");
  }
  model.save(a.out_model);
  std::printf("wrote %s (%s, %u bits from dim %u)\n", a.out_model.c_str(),
              a.method.c_str(), model.n_bits(), model.input_dim());
  return 0;
}

int cmd_hash(const HashArgs& a, int argc, char** argv) {
  DescriptorTable table = DescriptorTable::load(a.in);
  HasherModel model = HasherModel::load(a.model);
  if (table.dim() != model.input_dim())
    throw DimError("descriptor file dim " + std::to_string(table.dim()) +
                   " (" + a.in + ") does not match hasher input dim " +
                   std::to_string(model.input_dim()) + " (" + a.model + ")");
  unsigned threads = resolve_threads(a.threads);

  std::vector<BinaryHash> hashes(table.size());
  parallel_for(table.size(), threads, [&](size_t i) {
    hashes[i] = model.hash(table.descriptor(i));
  });

  HashIndex index(model.n_bits());
  for (const BinaryHash& h : hashes) index.add(h);
  index.metadata() = provenance("hash", argc, argv,
                                {{"descriptors", a.in}, {"model", a.model}});
  index.metadata().set("method", model.method);
  index.save(a.out);
  std::printf("wrote %s (%zu hashes, %u bits, %s)\n", a.out.c_str(),
              index.size(), index.n_bits(), model.method.c_str());
  return 0;
}

int cmd_eval(const EvalArgs& a, int argc, char** argv) {
  GroundTruth gt = load_ground_truth(a.gt);
  EvalOptions opt;
  opt.include_self = a.include_self;
  opt.ukb = a.ukb;
  opt.recall_at = a.recall_at;

  std::string magic = sniff_magic(a.in);
  EvalReport rep;
  if (magic == "NIPH") {
    rep = evaluate_hashes(HashIndex::load(a.in), gt, opt);
  } else if (magic == "NIPD") {
    rep = evaluate_descriptors(DescriptorTable::load(a.in), gt, opt);
  } else {
    throw ValidationError("'" + a.in + "' is neither a NIPD nor a NIPH file");
  }
  Metadata prov = provenance("eval", argc, argv,
                             {{"db", a.in}, {"ground_truth", a.gt}});
  for (const auto& [k, v] : prov.entries()) rep.meta.set(k, v);
  rep.meta.set("include_self", static_cast<uint64_t>(a.include_self ? 1 : 0));

  std::string text = rep.render();
  if (!a.out.empty()) write_text(a.out, text);
  std::printf("map=%.9g", rep.map);
  if (rep.has_ukb) std::printf(" ukb_score=%.9g", rep.ukb_score);
  std::printf(" n_queries=%zu\n", rep.per_query.size());
  return 0;
}

int cmd_stats(const StatsArgs& a, int argc, char** argv) {
  HashIndex index = HashIndex::load(a.in);
  BitStats s = bit_stats(index);
  std::string csv = bit_stats_csv(s);
  Metadata prov = provenance("stats", argc, argv, {{"hashes", a.in}});
  csv += "# ";
  for (const auto& [k, v] : prov.entries()) csv += k + "=" + v + " ";
  csv += "\n";
  if (!a.out.empty()) write_text(a.out, csv);
  std::printf("bits=%zu mean_of_means=%.9g std_across_bits=%.9g\n",
              s.means.size(), s.mean_of_means, s.std_across_bits);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"invariant pooling and binary hashing toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  synth.spec.shape = {8, 3, 64, 5, 5};
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic clustered orbit store");
  s_synth->add_option("--out-store", synth.out_store, "output orbit store")->required();
  s_synth->add_option("--out-gt", synth.out_gt, "output ground-truth TSV")->required();
  s_synth->add_option("--clusters", synth.spec.n_clusters, "number of clusters");
  s_synth->add_option("--items-per-cluster", synth.spec.items_per_cluster, "items per cluster");
  s_synth->add_option("--rot", synth.spec.shape.n_rot, "rotation samples");
  s_synth->add_option("--scale", synth.spec.shape.n_scale, "scale samples");
  s_synth->add_option("--channels", synth.spec.shape.channels, "channels");
  s_synth->add_option("--height", synth.spec.shape.height, "feature map height");
  s_synth->add_option("--width", synth.spec.shape.width, "feature map width");
  s_synth->add_option("--noise", synth.spec.noise, "intra-cluster noise stddev");
  s_synth->add_option("--seed", synth.spec.seed, "random seed");
  s_synth->add_flag("!--no-rotate-items", synth.spec.rotate_items,
                    "do not rotate items within a cluster");

  ConvertArgs convert;
  convert.shape = {36, 10, 512, 7, 7};  // standard pool5-orbit geometry
  auto* s_convert = app.add_subcommand("convert", "build an orbit store from raw float32 files");
  s_convert->add_option("--manifest", convert.manifest, "TSV of image_id TAB raw-file-path")->required();
  s_convert->add_option("--out", convert.out_store, "output orbit store")->required();
  s_convert->add_option("--rot", convert.shape.n_rot, "rotation samples");
  s_convert->add_option("--scale", convert.shape.n_scale, "scale samples");
  s_convert->add_option("--channels", convert.shape.channels, "channels");
  s_convert->add_option("--height", convert.shape.height, "feature map height");
  s_convert->add_option("--width", convert.shape.width, "feature map width");

  std::string validate_store_path, validate_out;
  auto* s_validate = app.add_subcommand("validate", "check store invariants");
  s_validate->add_option("--store", validate_store_path)->required();
  s_validate->add_option("--out", validate_out, "write the report here too");

  PoolArgs pool;
  auto* s_pool = app.add_subcommand("pool", "compute pooled descriptors from an orbit store");
  s_pool->add_option("--store", pool.store)->required();
  s_pool->add_option("--out", pool.out, "output descriptor file")->required();
  s_pool->add_option("--sequence", pool.sequence, "pooling steps, e.g. A_S,S_T,M_R");
  s_pool->add_flag("!--no-l2norm", pool.l2norm, "skip L2 normalization");
  s_pool->add_option("--threads", pool.threads, "worker threads (0 = auto)");

  FitPcaArgs fitpca;
  auto* s_fitpca = app.add_subcommand("fit-pca", "fit PCA whitening and/or project descriptors");
  s_fitpca->add_option("--in", fitpca.in, "training descriptor file")->required();
  s_fitpca->add_option("--out-model", fitpca.out_model, "output model file");
  s_fitpca->add_option("--model-in", fitpca.model_in, "apply an existing model instead of fitting");
  s_fitpca->add_option("--out-desc", fitpca.out_desc, "write projected descriptors here");
  s_fitpca->add_option("--out-dim", fitpca.out_dim, "target dimension");
  s_fitpca->add_option("--epsilon", fitpca.epsilon, "whitening epsilon");

  FitHashArgs fithash;
  auto* s_fithash = app.add_subcommand("fit-hash", "train a hashing model on descriptors");
  s_fithash->add_option("--in", fithash.in, "training descriptor file")->required();
  s_fithash->add_option("--out-model", fithash.out_model)->required();
  s_fithash->add_option("--method", fithash.method, "rbmh|lsh|pcahash|itq|threshold");
  s_fithash->add_option("--bits", fithash.bits, "code size in bits");
  s_fithash->add_option("--seed", fithash.seed, "random seed");
  s_fithash->add_option("--learning-rate", fithash.train.learning_rate);
  s_fithash->add_option("--cd-k", fithash.train.cd_k);
  s_fithash->add_option("--batch", fithash.train.batch_size);
  s_fithash->add_option("--epochs", fithash.train.epochs);
  s_fithash->add_option("--lambda", fithash.train.lambda, "regularization constant");
  s_fithash->add_option("--momentum", fithash.train.momentum);
  s_fithash->add_option("--weight-decay", fithash.train.weight_decay);
  s_fithash->add_option("--itq-iterations", fithash.itq_iterations);
  s_fithash->add_option("--threshold-mode", fithash.threshold_mode, "median|fixed");
  s_fithash->add_option("--threshold-value", fithash.threshold_value);

  HashArgs hash;
  auto* s_hash = app.add_subcommand("hash", "apply a hashing model to descriptors");
  s_hash->add_option("--in", hash.in)->required();
  s_hash->add_option("--model", hash.model)->required();
  s_hash->add_option("--out", hash.out)->required();
  s_hash->add_option("--threads", hash.threads, "worker threads (0 = auto)");

  EvalArgs eval;
  auto* s_eval = app.add_subcommand("eval", "rank and score retrieval quality");
  s_eval->add_option("--in", eval.in, "descriptor (NIPD) or hash (NIPH) file")->required();
  s_eval->add_option("--gt", eval.gt, "ground-truth TSV")->required();
  s_eval->add_option("--out", eval.out, "report file");
  s_eval->add_flag("--include-self", eval.include_self, "keep the query in its own ranking");
  s_eval->add_flag("--ukb", eval.ukb, "also report 4 x Recall@4 with self included");
  s_eval->add_option("--recall-at", eval.recall_at, "recall cutoffs");

  StatsArgs stats;
  auto* s_stats = app.add_subcommand("stats", "per-bit activation statistics of a hash file");
  s_stats->add_option("--in", stats.in)->required();
  s_stats->add_option("--out", stats.out, "CSV output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (s_synth->parsed()) return cmd_synth(synth, argc, argv);
    if (s_convert->parsed()) return cmd_convert(convert, argc, argv);
    if (s_validate->parsed()) return cmd_validate(validate_store_path, validate_out);
    if (s_pool->parsed()) return cmd_pool(pool, argc, argv);
    if (s_fitpca->parsed()) return cmd_fit_pca(fitpca, argc, argv);
    if (s_fithash->parsed()) return cmd_fit_hash(fithash, argc, argv);
    if (s_hash->parsed()) return cmd_hash(hash, argc, argv);
    if (s_eval->parsed()) return cmd_eval(eval, argc, argv);
    if (s_stats->parsed()) return cmd_stats(stats, argc, argv);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
