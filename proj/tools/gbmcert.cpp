// gbmcert command-line entry point.
//
//   gbmcert synth     --out DIR
//   gbmcert synonyms  --embeddings FILE --out FILE
//   gbmcert train     --model KIND --embeddings FILE --train FILE --out DIR
//   gbmcert gbm       --checkpoint FILE --out DIR
//   gbmcert certify   --checkpoint FILE --embeddings FILE --synonyms FILE --data FILE --out DIR
//
// Errors are printed to stderr as one JSON object; exit codes are 0 ok,
// 1 usage, 2 data, 3 numeric.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gbmcert/gbmcert.hpp"

namespace fs = std::filesystem;
using namespace gbmcert;

namespace {

struct Common {
  std::string model = "lstm";
  double beta = 0.0;
  std::uint64_t seed = 42;
  unsigned threads = 1;
  std::string out;
};

struct SynthOpts {
  SyntheticConfig cfg;
};

struct SynonymOpts {
  std::string embeddings;
  std::size_t k = 8;
  double d_e = 0.5;
};

struct TrainOpts {
  std::string embeddings, train, val, format = "tsv";
  std::size_t max_length = 512;
  std::size_t epochs = 20, batch_size = 64, patience = 3;
  std::optional<double> lr, weight_decay;
  std::optional<std::size_t> hidden, filters, state_per_channel;
  double head_gain = 1.0;
};

struct GbmOpts {
  std::string checkpoint;
  std::size_t bins = 20;
};

struct CertifyOpts {
  std::string checkpoint, embeddings, synonyms, data, format = "tsv", mode = "chained";
  std::size_t max_length = 512;
  bool reject_oov = false;
};

fs::path prepare_out(const std::string& out) {
  if (out.empty()) fail(ErrorKind::Usage, "--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorKind::Data, "cannot create output directory '" + out + "': " + ec.message());
  return fs::path(out);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) fail(ErrorKind::Data, "cannot write '" + p.string() + "'");
  return f;
}

void write_json(const fs::path& p, const nlohmann::json& j) { open_out(p) << j.dump(2) << '\n'; }

std::vector<Example> embed_dataset(const TextDataset& ds, const EmbeddingTable& emb,
                                   std::size_t min_length) {
  std::vector<Example> out;
  out.reserve(ds.examples.size());
  for (const auto& e : ds.examples)
    out.push_back({embed_sentence(e.tokens, emb, nullptr, min_length).x, e.label});
  return out;
}

EmbeddingTable read_embeddings(const std::string& path) {
  auto load = load_embeddings(path);
  if (load.duplicate_warnings > 0)
    std::cerr << nlohmann::json{{"warning", "duplicate embedding tokens ignored"},
                                {"count", load.duplicate_warnings}}
                     .dump()
              << '\n';
  return std::move(load.table);
}

int cmd_synth(const Common& c, SynthOpts o) {
  const fs::path dir = prepare_out(c.out);
  o.cfg.seed = c.seed;
  const SyntheticCorpus corpus = make_synthetic(o.cfg);
  {
    auto f = open_out(dir / "embeddings.txt");
    write_embeddings(f, corpus.embeddings);
  }
  for (const auto* ds : {&corpus.train, &corpus.val, &corpus.test}) {
    auto f = open_out(dir / (ds->split + ".tsv"));
    write_dataset(f, *ds);
  }
  return 0;
}

int cmd_synonyms(const Common& c, const SynonymOpts& o) {
  if (c.out.empty()) fail(ErrorKind::Usage, "--out is required");
  const EmbeddingTable emb = read_embeddings(o.embeddings);
  save_synonyms(build_synonyms(emb, o.k, o.d_e), c.out);
  return 0;
}

int cmd_train(const Common& c, const TrainOpts& o) {
  const fs::path dir = prepare_out(c.out);
  const ModelKind kind = model_kind_from_string(c.model);
  const EmbeddingTable emb = read_embeddings(o.embeddings);
  const auto fmt = dataset_format_from_string(o.format);
  const TextDataset train_ds = load_dataset(o.train, fmt, o.max_length);
  const TextDataset val_ds =
      o.val.empty() ? TextDataset{} : load_dataset(o.val, fmt, o.max_length);

  std::size_t classes = 2;
  for (const auto& e : train_ds.examples) classes = std::max(classes, e.label + 1);
  ModelShape shape = default_model_shape(kind, emb.dim(), classes);
  if (o.hidden) shape.hidden_size = *o.hidden;
  if (o.filters) shape.filters = *o.filters;
  if (o.state_per_channel) shape.state_per_channel = *o.state_per_channel;
  shape.validate();

  TrainConfig cfg = default_train_config(kind);
  cfg.beta = c.beta;
  cfg.seed = c.seed;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.patience = o.patience;
  if (o.lr) cfg.adam.base.learning_rate = *o.lr;
  if (o.weight_decay) cfg.adam.base.weight_decay = *o.weight_decay;
  if (kind != ModelKind::S4) cfg.adam.ssm = cfg.adam.base;

  const auto train_set = embed_dataset(train_ds, emb, shape.min_length());
  const auto val_set = embed_dataset(val_ds, emb, shape.min_length());
  const TrainResult res = train(init_model(shape, c.seed, o.head_gain), train_set, val_set, cfg);

  const auto meta = history_metadata(c.model, c.beta, c.seed, res.best_epoch);
  save_checkpoint((dir / "model.ckpt").string(), res.model, meta);
  write_history_csv((dir / "history.csv").string(), res.history);
  write_json(dir / "history.json", meta);
  return 0;
}

int cmd_gbm(const Common& c, const GbmOpts& o, bool model_given) {
  const fs::path dir = prepare_out(c.out);
  if (o.bins == 0) fail(ErrorKind::Usage, "--bins must be positive");
  const auto ck = load_checkpoint(o.checkpoint);
  if (model_given && model_kind_from_string(c.model) != ck.model.shape.kind)
    fail(ErrorKind::Data, "architecture mismatch: checkpoint holds a " +
                              to_string(ck.model.shape.kind) + " model, --model is " + c.model);
  const Gbm g = model_gbm(ck.model);

  {
    auto f = open_out(dir / "gbm.csv");
    f << "row,col,value,block\n";
    for (const auto& b : g.blocks)
      for (std::size_t i = 0; i < g.m.rows(); ++i)
        for (std::size_t j = b.begin; j < b.begin + b.width; ++j)
          f << i << ',' << j << ',' << format_double(g.m(i, j)) << ',' << b.tag << '\n';
  }

  const double hi = lipschitz_constant(g);
  std::vector<std::size_t> counts(o.bins, 0);
  for (std::size_t i = 0; i < g.m.rows(); ++i)
    for (std::size_t j = 0; j < g.m.cols(); ++j) {
      std::size_t bin = hi > 0.0 ? static_cast<std::size_t>(g.m(i, j) / hi * o.bins) : 0;
      ++counts[std::min(bin, o.bins - 1)];
    }
  {
    auto f = open_out(dir / "histogram.csv");
    f << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < o.bins; ++b)
      f << format_double(hi * b / o.bins) << ',' << format_double(hi * (b + 1) / o.bins) << ','
        << counts[b] << '\n';
  }
  write_json(dir / "summary.json", {{"model", to_string(ck.model.shape.kind)},
                                    {"rows", g.m.rows()},
                                    {"cols", g.m.cols()},
                                    {"sum", g.total()},
                                    {"lipschitz", hi}});
  return 0;
}

int cmd_certify(const Common& c, const CertifyOpts& o) {
  const fs::path dir = prepare_out(c.out);
  const auto ck = load_checkpoint(o.checkpoint);
  const EmbeddingTable emb = read_embeddings(o.embeddings);
  const SynonymTable syn = load_synonyms(o.synonyms);
  if (emb.dim() != ck.model.shape.input_size)
    fail(ErrorKind::Data, "embedding dimension " + std::to_string(emb.dim()) +
                              " does not match the checkpoint's " +
                              std::to_string(ck.model.shape.input_size));
  if (syn.dim() != emb.dim()) fail(ErrorKind::Data, "synonym table dimension mismatch");
  const TextDataset ds =
      load_dataset(o.data, dataset_format_from_string(o.format), o.max_length);
  const CertifyMode mode = certify_mode_from_string(o.mode);
  const OovPolicy oov = o.reject_oov ? OovPolicy::Reject : OovPolicy::ZeroVector;

  // Sentences are independent; workers fill disjoint slots so the output
  // order never depends on the thread count.
  std::vector<Certificate> certs(ds.examples.size());
  std::vector<std::exception_ptr> errors(std::max(1u, c.threads));
  auto work = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < certs.size(); i += errors.size()) {
        const auto& e = ds.examples[i];
        certs[i] = certify_sentence(ck.model, e.tokens, emb, syn, mode, oov);
        certs[i].id = std::to_string(i);
        certs[i].label = static_cast<int>(e.label);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (errors.size() == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < errors.size(); ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::size_t certified = 0, correct = 0, both = 0, invalid = 0;
  {
    auto f = open_out(dir / "certificates.jsonl");
    for (const auto& cert : certs) {
      f << to_json(cert).dump() << '\n';
      const bool ok = static_cast<int>(cert.predicted) == cert.label;
      certified += cert.certified ? 1 : 0;
      correct += ok ? 1 : 0;
      both += cert.certified && ok ? 1 : 0;
      invalid += cert.domain_valid ? 0 : 1;
    }
  }
  const double n = certs.empty() ? 1.0 : static_cast<double>(certs.size());
  write_json(dir / "report.json", {{"model", to_string(ck.model.shape.kind)},
                                   {"mode", to_string(mode)},
                                   {"sentences", certs.size()},
                                   {"certified", certified},
                                   {"correct", correct},
                                   {"certified_correct", both},
                                   {"domain_invalid", invalid},
                                   {"clean_accuracy", correct / n},
                                   {"certified_accuracy", both / n}});
  return 0;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return 1;
    case ErrorKind::Numeric: return 3;
    case ErrorKind::Data:
    case ErrorKind::Dimension:
    case ErrorKind::Domain: return 2;
  }
  return 2;
}

int report(const std::string& kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump()
            << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growth bound matrices: training, export and certification"};
  app.set_config("--config", "", "TOML/INI file of option defaults; flags win");
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out, "Output file or directory");
    sub->add_option("--seed", common.seed, "Random seed")->capture_default_str();
    sub->add_option("--threads", common.threads, "Worker threads (1 is deterministic)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };

  SynthOpts synth;
  auto* s_synth = app.add_subcommand("synth", "Write a synthetic corpus and embeddings");
  add_common(s_synth);
  s_synth->add_option("--dim", synth.cfg.dim)->capture_default_str();
  s_synth->add_option("--margin", synth.cfg.margin)->capture_default_str();
  s_synth->add_option("--centre-scale", synth.cfg.centre_scale)->capture_default_str();
  s_synth->add_option("--spread", synth.cfg.spread)->capture_default_str();
  s_synth->add_option("--n-train", synth.cfg.n_train)->capture_default_str();
  s_synth->add_option("--n-val", synth.cfg.n_val)->capture_default_str();
  s_synth->add_option("--n-test", synth.cfg.n_test)->capture_default_str();

  SynonymOpts syn;
  auto* s_syn = app.add_subcommand("synonyms", "Build the synonym table cache");
  add_common(s_syn);
  s_syn->add_option("--embeddings", syn.embeddings)->required();
  s_syn->add_option("--k", syn.k, "Nearest neighbours per word")->capture_default_str();
  s_syn->add_option("--de", syn.d_e, "Distance cut-off")->capture_default_str();

  TrainOpts tr;
  auto* s_train = app.add_subcommand("train", "Train a classifier");
  add_common(s_train);
  s_train->add_option("--model", common.model)
      ->check(CLI::IsMember({"lstm", "bilstm", "s4", "cnn"}))
      ->capture_default_str();
  s_train->add_option("--beta", common.beta, "Weight of the GBM term")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  s_train->add_option("--embeddings", tr.embeddings)->required();
  s_train->add_option("--train", tr.train)->required();
  s_train->add_option("--val", tr.val);
  s_train->add_option("--format", tr.format)->check(CLI::IsMember({"tsv", "csv"}));
  s_train->add_option("--max-length", tr.max_length)->capture_default_str();
  s_train->add_option("--epochs", tr.epochs)->capture_default_str();
  s_train->add_option("--batch-size", tr.batch_size)->capture_default_str();
  s_train->add_option("--patience", tr.patience)->capture_default_str();
  s_train->add_option("--lr", tr.lr);
  s_train->add_option("--weight-decay", tr.weight_decay);
  s_train->add_option("--hidden", tr.hidden);
  s_train->add_option("--filters", tr.filters);
  s_train->add_option("--state-per-channel", tr.state_per_channel);
  s_train->add_option("--head-gain", tr.head_gain, "Scale of the head's initial range")
      ->capture_default_str();

  GbmOpts gb;
  auto* s_gbm = app.add_subcommand("gbm", "Export a checkpoint's GBM");
  add_common(s_gbm);
  auto* gbm_model = s_gbm->add_option("--model", common.model, "Expected architecture")
                        ->check(CLI::IsMember({"lstm", "bilstm", "s4", "cnn"}));
  s_gbm->add_option("--checkpoint", gb.checkpoint)->required();
  s_gbm->add_option("--bins", gb.bins)->capture_default_str();

  CertifyOpts ce;
  auto* s_cert = app.add_subcommand("certify", "Certify sentences against synonym swaps");
  add_common(s_cert);
  s_cert->add_option("--checkpoint", ce.checkpoint)->required();
  s_cert->add_option("--embeddings", ce.embeddings)->required();
  s_cert->add_option("--synonyms", ce.synonyms)->required();
  s_cert->add_option("--data", ce.data)->required();
  s_cert->add_option("--format", ce.format)->check(CLI::IsMember({"tsv", "csv"}));
  s_cert->add_option("--max-length", ce.max_length)->capture_default_str();
  s_cert->add_option("--mode", ce.mode)
      ->check(CLI::IsMember({"chained", "final-cell"}))
      ->capture_default_str();
  s_cert->add_flag("--reject-oov", ce.reject_oov, "Fail on out-of-vocabulary tokens");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), 1);
  }

  try {
    if (*s_synth) return cmd_synth(common, synth);
    if (*s_syn) return cmd_synonyms(common, syn);
    if (*s_train) return cmd_train(common, tr);
    if (*s_gbm) return cmd_gbm(common, gb, gbm_model->count() > 0);
    if (*s_cert) return cmd_certify(common, ce);
  } catch (const Error& e) {
    return report(std::string(to_string(e.kind())), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return report("data", e.what(), 2);
  }
  return report("usage", "no subcommand", 1);
}
