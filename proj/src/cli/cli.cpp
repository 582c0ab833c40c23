#include "prokd/cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prokd/corpus/batching.hpp"
#include "prokd/corpus/conll.hpp"
#include "prokd/corpus/synthetic.hpp"
#include "prokd/error.hpp"
#include "prokd/model/checkpoint.hpp"
#include "prokd/prototypes/prototype_set.hpp"
#include "prokd/training/pipeline.hpp"

namespace prokd::cli {

namespace fs = std::filesystem;
using train::RunConfig;

namespace {

constexpr std::uint64_t sample_stream = 0x73616d70;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string verb;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
  int verbosity = 0;
  std::string checkpoint;
  std::string snapshot;
  std::string predictions;
  std::string gold;
  std::size_t samples = 50;
};

class Context {
 public:
  Context(const Options& o, std::ostream& out, std::ostream& err) : opt(o), out_(out), err_(err) {}

  const Options& opt;

  void info(const std::string& msg) const {
    if (opt.verbosity > 0) err_ << msg << '\n';
  }
  std::ostream& out() const { return out_; }

  RunConfig config() const {
    RunConfig cfg = opt.config.empty() ? RunConfig{} : train::load_config(opt.config);
    if (opt.seed) {
      cfg = train::seeded(std::move(cfg), *opt.seed);
      cfg.seeds = {*opt.seed};
    }
    train::validate(cfg);
    return cfg;
  }

  fs::path path(const std::string& name) const { return fs::path(opt.out) / name; }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw Error("cli", "cannot write " + path(name).string());
    return f;
  }

  void wrote(const std::string& name) const { info("wrote " + path(name).string()); }

 private:
  std::ostream& out_;
  std::ostream& err_;
};

void require_file(const std::string& path, const std::string& flag) {
  if (path.empty()) throw UsageError(flag + " is required");
  if (!fs::is_regular_file(path)) throw UsageError(flag + ": no such file '" + path + "'");
}

void prepare_output(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  const fs::path dir(o.out);
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError("--out '" + o.out + "' is not a directory");
    if (!fs::is_empty(dir) && !o.force)
      throw UsageError("output directory '" + o.out + "' is not empty; pass --force to overwrite");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cli", "cannot create output directory '" + o.out + "': " + ec.message());
}

void write_resolved_config(const Context& c, const RunConfig& cfg) {
  auto f = c.open("config.ini");
  train::write_config(f, cfg);
  c.wrote("config.ini");
}

void write_json(const Context& c, const std::string& name, const nlohmann::json& j) {
  auto f = c.open(name);
  f << j.dump(2) << '\n';
  c.wrote(name);
}

model::LoadedModel load_model(const Context& c) {
  require_file(c.opt.checkpoint, "--checkpoint");
  return model::load_checkpoint_file(c.opt.checkpoint);
}

void check_scheme(const model::LoadedModel& m, const corpus::LabelScheme& scheme) {
  if (!(m.scheme == scheme)) throw Error("cli", "checkpoint label scheme differs from the config's entity types");
}

int generate_data(const Context& c) {
  const RunConfig cfg = c.config();
  if (!cfg.data.synthetic) throw UsageError("generate-data needs data.synthetic = true");
  write_resolved_config(c, cfg);
  const corpus::LabelScheme scheme(cfg.data.entity_types);
  const auto g = corpus::generate_synthetic(cfg.synthetic, scheme);
  const std::pair<const char*, const corpus::Corpus*> files[] = {
      {"source.train.conll", &g.source_train}, {"source.dev.conll", &g.source_dev},
      {"source.test.conll", &g.source_test},   {"target.train.conll", &g.target_train},
      {"target.train.gold.conll", &g.target_train_gold}, {"target.test.conll", &g.target_test}};
  for (const auto& [name, corpus] : files) {
    corpus::write_conll_file(c.path(name).string(), *corpus, scheme);
    c.wrote(name);
  }
  c.out() << "generated " << g.source_train.size() << " source train and " << g.target_train.size()
          << " target train sentences in " << c.opt.out << '\n';
  return exit_ok;
}

int train_teacher_verb(const Context& c) {
  const RunConfig cfg = c.config();
  write_resolved_config(c, cfg);
  const auto data = train::load_dataset(cfg);
  const auto& in = data.inputs;
  auto log = c.open("teacher.log.jsonl");
  c.info("training teacher");
  auto t = train::train_teacher(in.source_train, in.source_dev, in.target_train, in.vocab, in.scheme, cfg, &log);
  c.wrote("teacher.log.jsonl");
  model::save_checkpoint_file(c.path("teacher.ckpt").string(), t.model, in.scheme);
  c.wrote("teacher.ckpt");
  write_json(c, "teacher.report.json", t.report.to_json());
  {
    auto f = c.open("teacher.prototypes.tsv");
    const proto::PrototypeSet* sets[] = {&t.source_prototypes, &t.target_prototypes};
    proto::write_prototype_tsv(f, sets, in.scheme);
    c.wrote("teacher.prototypes.tsv");
  }
  c.out() << "teacher source-dev F1 " << t.report.selected_dev_f1.value_or(0.0) << " (epoch "
          << t.report.selected_epoch << ")\n";
  return exit_ok;
}

int snapshot_verb(const Context& c) {
  const RunConfig cfg = c.config();
  auto m = load_model(c);
  write_resolved_config(c, cfg);
  const auto data = train::load_dataset(cfg);
  check_scheme(m, data.inputs.scheme);
  const auto snap = train::snapshot_teacher(m.model, data.inputs.target_train);
  train::write_snapshot_file(c.path("teacher.snapshot").string(), snap);
  c.wrote("teacher.snapshot");
  c.out() << "snapshot of " << snap.tokens() << " target tokens, digest " << std::hex
          << train::file_digest(c.path("teacher.snapshot").string()) << std::dec << '\n';
  return exit_ok;
}

int distill_verb(const Context& c) {
  const RunConfig cfg = c.config();
  require_file(c.opt.snapshot, "--snapshot");
  write_resolved_config(c, cfg);
  const auto data = train::load_dataset(cfg);
  const auto& in = data.inputs;
  const auto digest = train::file_digest(c.opt.snapshot);
  const auto snap = train::read_snapshot_file(c.opt.snapshot);
  auto log = c.open("student.log.jsonl");
  c.info("distilling student");
  auto s = train::distill_student(snap, in.target_train, in.vocab, in.scheme, cfg, &in.source_dev, &log);
  if (train::file_digest(c.opt.snapshot) != digest) throw Error("training", "snapshot file changed during distillation");
  c.wrote("student.log.jsonl");
  model::save_checkpoint_file(c.path("student.ckpt").string(), s.model, in.scheme);
  c.wrote("student.ckpt");
  write_json(c, "student.report.json", s.report.to_json());
  c.out() << "student trained for " << s.report.epochs.size() << " epochs, " << s.report.fallback_batches
          << " fallback batches\n";
  return exit_ok;
}

int evaluate_verb(const Context& c) {
  eval::MetricsReport report;
  if (!c.opt.predictions.empty() || !c.opt.gold.empty()) {
    require_file(c.opt.predictions, "--predictions");
    require_file(c.opt.gold, "--gold");
    const RunConfig cfg = c.config();
    write_resolved_config(c, cfg);
    const corpus::LabelScheme scheme(cfg.data.entity_types);
    corpus::ConllOptions opt;
    opt.max_length = cfg.max_length;
    const auto pred = corpus::read_conll_file(c.opt.predictions, scheme, opt);
    const auto gold = corpus::read_conll_file(c.opt.gold, scheme, opt);
    if (pred.size() != gold.size()) throw Error("evaluation", "prediction and gold files differ in sentence count");
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (pred.sentences[i].tokens != gold.sentences[i].tokens)
        throw Error("evaluation", "prediction and gold tokens differ in sentence " + std::to_string(i + 1));
    report = eval::token_f1(eval::gold_labels(pred), eval::gold_labels(gold), scheme);
  } else {
    const RunConfig cfg = c.config();
    auto m = load_model(c);
    write_resolved_config(c, cfg);
    auto data = train::load_dataset(cfg);
    check_scheme(m, data.inputs.scheme);
    report = train::evaluate_target(m.model, data);
  }
  write_json(c, "metrics.json", report.to_json());
  c.out() << "precision " << report.overall.precision << " recall " << report.overall.recall << " f1 "
          << report.overall.f1 << '\n';
  return exit_ok;
}

int ablate_verb(const Context& c) {
  const RunConfig cfg = c.config();
  write_resolved_config(c, cfg);
  c.info("running " + std::to_string(cfg.seeds.size()) + " seeds x " +
         std::to_string(train::ablation_variants.size()) + " variants");
  const auto study = train::run_ablation(cfg);
  write_json(c, "ablation.json", study.to_json());
  {
    auto f = c.open("ablation.txt");
    f << "students\n" << study.students.to_text() << "\nteachers\n" << study.teachers.to_text();
    c.wrote("ablation.txt");
  }
  c.out() << study.students.to_text();
  return exit_ok;
}

// Prototypes of one corpus under the model: gold-label means for labeled
// text, probability-weighted means otherwise.
proto::PrototypeSet corpus_prototypes(model::NerModel& m, const corpus::Corpus& corpus, std::size_t tags,
                                      double lambda, std::vector<diff::Tensor>& hidden,
                                      std::vector<std::vector<int>>& labels) {
  const std::size_t dim = m.config().hidden_dim;
  diff::Tensor all_h = diff::Tensor::matrix(corpus.token_count(), dim);
  diff::Tensor all_p = diff::Tensor::matrix(corpus.token_count(), tags);
  std::vector<int> flat;
  std::size_t row = 0;
  for (const auto& s : corpus.sentences) {
    auto h = m.hidden(s);
    auto p = m.probabilities(s);
    std::copy(h.values().begin(), h.values().end(), all_h.row(row).begin());
    std::copy(p.values().begin(), p.values().end(), all_p.row(row).begin());
    std::vector<int> lab = s.labeled() ? s.labels : std::vector<int>{};
    if (!s.labeled())
      for (std::size_t i = 0; i < s.size(); ++i) {
        auto r = p.row(i);
        lab.push_back(static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin()));
      }
    flat.insert(flat.end(), lab.begin(), lab.end());
    labels.push_back(std::move(lab));
    hidden.push_back(std::move(h));
    row += s.size();
  }
  proto::PrototypeSet set(corpus.language, tags, dim, lambda);
  set.update(corpus.labeled() ? proto::compute_source_prototypes(all_h, flat, tags)
                              : proto::compute_target_prototypes(all_h, all_p));
  return set;
}

void sample_tokens(const corpus::Corpus& corpus, const std::vector<diff::Tensor>& hidden,
                   const std::vector<std::vector<int>>& labels, std::size_t per_class, std::uint64_t seed,
                   std::vector<proto::TokenSample>& out) {
  std::vector<std::pair<std::size_t, std::size_t>> positions;
  for (std::size_t s = 0; s < corpus.size(); ++s)
    for (std::size_t i = 0; i < corpus.sentences[s].size(); ++i) positions.emplace_back(s, i);
  std::mt19937_64 rng(seed);
  std::shuffle(positions.begin(), positions.end(), rng);
  std::map<int, std::size_t> taken;
  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  for (const auto& [s, i] : positions)
    if (taken[labels[s][i]]++ < per_class) chosen.emplace_back(s, i);
  std::sort(chosen.begin(), chosen.end());
  for (const auto& [s, i] : chosen) {
    const auto r = hidden[s].row(i);
    out.push_back({corpus.language, labels[s][i], corpus.sentences[s].tokens[i], {r.begin(), r.end()}});
  }
}

int export_prototypes_verb(const Context& c) {
  const RunConfig cfg = c.config();
  auto m = load_model(c);
  write_resolved_config(c, cfg);
  const auto data = train::load_dataset(cfg);
  check_scheme(m, data.inputs.scheme);
  const std::size_t tags = data.inputs.scheme.size();
  std::vector<proto::PrototypeSet> sets;
  std::vector<proto::TokenSample> samples;
  std::uint64_t index = 0;
  for (const auto* corpus : {&data.inputs.source_train, &data.inputs.target_train}) {
    std::vector<diff::Tensor> hidden;
    std::vector<std::vector<int>> labels;
    sets.push_back(corpus_prototypes(m.model, *corpus, tags, cfg.lambda, hidden, labels));
    if (c.opt.samples > 0)
      sample_tokens(*corpus, hidden, labels, c.opt.samples, corpus::derive_seed(cfg.seed, sample_stream, index),
                    samples);
    ++index;
  }
  std::vector<const proto::PrototypeSet*> ptrs;
  for (const auto& s : sets) ptrs.push_back(&s);
  {
    auto f = c.open("prototypes.tsv");
    proto::write_prototype_tsv(f, ptrs, data.inputs.scheme);
    c.wrote("prototypes.tsv");
  }
  if (c.opt.samples > 0) {
    auto f = c.open("tokens.tsv");
    proto::write_token_sample_tsv(f, samples, data.inputs.scheme);
    c.wrote("tokens.tsv");
  }
  std::size_t rows = 0;
  for (const auto& s : sets)
    for (std::size_t k = 0; k < tags; ++k) rows += s.initialized(k) ? 1 : 0;
  c.out() << rows << " prototype rows, " << samples.size() << " token rows\n";
  return exit_ok;
}

int grid_search_verb(const Context& c) {
  const RunConfig cfg = c.config();
  write_resolved_config(c, cfg);
  const auto data = train::load_dataset(cfg);
  c.info("grid of " + std::to_string(cfg.grid.size()) + " configurations");
  const auto result = train::grid_search(cfg, cfg.grid, data.inputs);
  write_json(c, "grid.json", result.to_json());
  {
    auto f = c.open("grid.tsv");
    f << result.to_tsv();
    c.wrote("grid.tsv");
  }
  {
    auto f = c.open("best.ini");
    train::write_config(f, result.best_config);
    c.wrote("best.ini");
  }
  const auto& b = result.rows[result.best];
  c.out() << "best lambda " << b.lambda << " tau1 " << b.tau1 << " tau2 " << b.tau2 << " gamma " << b.gamma
          << " student dev F1 " << b.student_dev_f1 << '\n';
  return exit_ok;
}

int dispatch(const Context& c) {
  if (c.opt.verb == "generate-data") return generate_data(c);
  if (c.opt.verb == "train-teacher") return train_teacher_verb(c);
  if (c.opt.verb == "snapshot") return snapshot_verb(c);
  if (c.opt.verb == "distill") return distill_verb(c);
  if (c.opt.verb == "evaluate") return evaluate_verb(c);
  if (c.opt.verb == "ablate") return ablate_verb(c);
  if (c.opt.verb == "export-prototypes") return export_prototypes_verb(c);
  if (c.opt.verb == "grid-search") return grid_search_verb(c);
  throw UsageError("unknown verb '" + c.opt.verb + "'");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"prokd: prototype-aligned distillation for cross-lingual sequence labeling", "prokd"};
  app.require_subcommand(1, 1);
  app.add_option("--config", o.config, "run config (INI)");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed", o.seed, "override run and data seed");
  app.add_flag("--force", o.force, "write into a non-empty output directory");
  app.add_flag("-v,--verbose", o.verbosity, "progress messages on stderr");

  const std::vector<std::pair<std::string, std::string>> verbs{
      {"generate-data", "write the synthetic corpora as CoNLL files"},
      {"train-teacher", "train the teacher with class alignment"},
      {"snapshot", "store teacher probabilities for the target corpus"},
      {"distill", "train the student from a snapshot"},
      {"evaluate", "score a checkpoint on target test, or a predictions file against gold"},
      {"ablate", "ProKD and the four ablations over the configured seeds"},
      {"export-prototypes", "prototype and token-vector TSV for external projection"},
      {"grid-search", "exhaustive search over the configured grid"}};
  for (const auto& [name, help] : verbs) {
    auto* sub = app.add_subcommand(name, help)->fallthrough();
    if (name == "snapshot" || name == "evaluate" || name == "export-prototypes")
      sub->add_option("--checkpoint", o.checkpoint, "model checkpoint");
    if (name == "distill") sub->add_option("--snapshot", o.snapshot, "teacher snapshot file");
    if (name == "evaluate") {
      sub->add_option("--predictions", o.predictions, "predicted tags (CoNLL)");
      sub->add_option("--gold", o.gold, "gold tags (CoNLL)");
    }
    if (name == "export-prototypes")
      sub->add_option("--samples", o.samples, "token vectors per class per language (0: none)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_usage;
  }
  o.verb = app.get_subcommands().front()->get_name();

  try {
    prepare_output(o);
    Context c(o, out, err);
    return dispatch(c);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_usage;
  } catch (const Error& e) {
    err << "error [" << e.module() << "]: " << e.what() << '\n';
    return exit_runtime;
  } catch (const std::exception& e) {
    err << "error [cli]: " << e.what() << '\n';
    return exit_runtime;
  }
}

}  // namespace prokd::cli
