#include "prokd/training/trainer.hpp"

#include <chrono>
#include <ostream>

#include "prokd/corpus/batching.hpp"
#include "prokd/diffcore/adam.hpp"
#include "prokd/error.hpp"
#include "prokd/evaluation/metrics.hpp"

namespace prokd::train {

using corpus::Corpus;
using corpus::derive_seed;
using corpus::Sentence;
using diff::Graph;
using diff::Tensor;
using diff::Var;

namespace {

constexpr std::uint64_t teacher_init_stream = 0x7465616368;  // "teach"
constexpr std::uint64_t student_init_stream = 0x7374756465;  // "stude"
constexpr std::uint64_t source_batch_stream = 0x73726362;
constexpr std::uint64_t target_batch_stream = 0x74676362;
constexpr std::uint64_t student_batch_stream = 0x73747562;
constexpr std::uint64_t dropout_stream = 0x64726f70;

// Running per-term sums for the epoch-mean bundle.
struct TermMeans {
  std::map<std::string, double> sum;
  std::map<std::string, std::size_t> count;

  void add(const loss::LossBundle& b) {
    for (const auto& [k, v] : b.terms) {
      sum[k] += v;
      ++count[k];
    }
  }
  std::map<std::string, double> means() const {
    std::map<std::string, double> out;
    for (const auto& [k, v] : sum) out[k] = v / static_cast<double>(count.at(k));
    return out;
  }
};

std::vector<const Sentence*> gather(const Corpus& c, const corpus::Batch& b) {
  std::vector<const Sentence*> out;
  out.reserve(b.size());
  for (auto i : b) out.push_back(&c.sentences[i]);
  return out;
}

std::vector<int> batch_labels(std::span<const Sentence* const> batch) {
  std::vector<int> out;
  for (const auto* s : batch) {
    if (!s->labeled()) throw Error("training", "source batch contains an unlabeled sentence");
    out.insert(out.end(), s->labels.begin(), s->labels.end());
  }
  return out;
}

// Hidden vectors of a whole corpus, dropout off, in corpus order.
Tensor corpus_hidden(model::NerModel& m, const Corpus& c, std::size_t chunk = 256) {
  Tensor out = Tensor::matrix(c.token_count(), m.config().hidden_dim);
  std::size_t row = 0;
  for (std::size_t start = 0; start < c.size(); start += chunk) {
    std::vector<const Sentence*> part;
    for (std::size_t i = start; i < std::min(c.size(), start + chunk); ++i) part.push_back(&c.sentences[i]);
    Graph g;
    const auto h = m.encode(g, part, false).value();
    std::copy(h.values().begin(), h.values().end(), out.row(row).begin());
    row += h.rows();
  }
  return out;
}

std::vector<int> corpus_labels(const Corpus& c) {
  std::vector<int> out;
  for (const auto& s : c.sentences) out.insert(out.end(), s.labels.begin(), s.labels.end());
  return out;
}

double dev_f1(model::NerModel& m, const Corpus& dev, const corpus::LabelScheme& scheme) {
  return eval::token_f1(eval::predict(m, dev), eval::gold_labels(dev), scheme).overall.f1;
}

std::vector<Tensor> values_of(const model::NerModel& m) {
  std::vector<Tensor> out;
  for (const auto* p : m.parameters()) out.push_back(p->value);
  return out;
}

void restore(model::NerModel& m, const std::vector<Tensor>& values) {
  auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

model::EncoderConfig encoder_for(const RunConfig& cfg, const corpus::LabelScheme& scheme, std::uint64_t stream) {
  model::EncoderConfig e = cfg.encoder;
  e.num_tags = scheme.size();
  e.seed = derive_seed(cfg.seed, stream);
  return e;
}

void log_line(std::ostream* log, const std::string& phase, const loss::LossBundle& b,
              const std::vector<std::size_t>& skipped, bool fallback) {
  if (!log) return;
  auto j = b.to_json();
  j["phase"] = phase;
  if (!skipped.empty()) j["alignment_skipped_labels"] = skipped;
  if (fallback) j["self_training_fallback"] = true;
  *log << j.dump() << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<double> TrainReport::alpha_trajectory() const {
  std::vector<double> out;
  for (const auto& e : epochs) out.push_back(e.alpha);
  return out;
}

nlohmann::json TrainReport::to_json(bool timing) const {
  nlohmann::json j;
  j["format"] = "prokd-train-report v1";
  j["phase"] = phase;
  j["learning_rate"] = learning_rate;
  j["paper_learning_rate"] = paper_learning_rate;
  j["selected_epoch"] = selected_epoch;
  j["selected_dev_f1"] = selected_dev_f1 ? nlohmann::json(*selected_dev_f1) : nlohmann::json(nullptr);
  j["fallback_batches"] = fallback_batches;
  j["alpha_trajectory"] = alpha_trajectory();
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : epochs) {
    nlohmann::json r;
    r["epoch"] = e.epoch;
    r["terms"] = e.mean.terms;
    r["alpha"] = e.alpha;
    r["source_dev_f1"] = e.source_dev_f1 ? nlohmann::json(*e.source_dev_f1) : nlohmann::json(nullptr);
    r["batches"] = e.batches;
    r["alignment_batches"] = e.alignment_batches;
    r["skipped_alignment"] = e.skipped_alignment;
    r["fallback_batches"] = e.fallback_batches;
    r["source_prototypes"] = e.source_prototypes.values();
    r["target_prototypes"] = e.target_prototypes.values();
    if (timing) r["seconds"] = e.seconds;
    j["epochs"].push_back(std::move(r));
  }
  return j;
}

model::Vocabulary shared_vocabulary(const Corpus& source_train, const Corpus& source_dev, const Corpus& target_train) {
  return model::Vocabulary::from_corpora({&source_train, &source_dev, &target_train});
}

TeacherResult train_teacher(const Corpus& source, const Corpus& source_dev, const Corpus& target,
                            const model::Vocabulary& vocab, const corpus::LabelScheme& scheme, const RunConfig& cfg,
                            std::ostream* log) {
  validate(cfg);
  if (target.labeled()) throw Error("training", "teacher training must receive the target corpus without labels");
  if (!source.labeled()) throw Error("training", "teacher training needs a labeled source corpus");
  if (source.size() == 0 || target.size() == 0) throw Error("training", "empty training corpus");

  const auto enc = encoder_for(cfg, scheme, teacher_init_stream);
  TeacherResult r{model::NerModel(enc, vocab), {}, {source.language, scheme.size(), enc.hidden_dim, cfg.lambda},
                  {target.language, scheme.size(), enc.hidden_dim, cfg.lambda}};
  r.report.phase = "teacher";
  r.report.learning_rate = cfg.teacher.learning_rate;
  r.report.paper_learning_rate = PaperValues::teacher_learning_rate;
  auto& m = r.model;
  auto params = m.parameters();
  diff::AdamState adam;
  adam.learning_rate = cfg.teacher.learning_rate;

  const corpus::BatchIterator src_iter(source.size(), cfg.batch_size, derive_seed(cfg.seed, source_batch_stream));
  const corpus::BatchIterator tgt_iter(target.size(), cfg.batch_size, derive_seed(cfg.seed, target_batch_stream));
  std::vector<corpus::Batch> tgt_batches;
  std::size_t tgt_epoch = 0, tgt_pos = 0;
  auto next_target = [&]() -> const corpus::Batch& {
    if (tgt_pos == tgt_batches.size()) {
      tgt_batches = tgt_iter.epoch(tgt_epoch++);
      tgt_pos = 0;
    }
    return tgt_batches[tgt_pos++];
  };

  const std::vector<int> all_source_labels = corpus_labels(source);
  std::vector<Tensor> best_values;
  double best_f1 = -1.0;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.teacher.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const bool align = !cfg.ablation.no_ca && epoch >= cfg.teacher.alignment_warmup;
    if (align) r.source_prototypes.update(
        proto::compute_source_prototypes(corpus_hidden(m, source), all_source_labels, scheme.size()));

    EpochRecord rec;
    rec.epoch = epoch;
    TermMeans means;
    for (const auto& b : src_iter.epoch(epoch)) {
      const auto batch = gather(source, b);
      const auto gold = batch_labels(batch);
      Graph g;
      const Var p = m.classify(g, m.encode(g, batch, true, derive_seed(cfg.seed, dropout_stream, 2 * step)));
      const Var ce = loss::teacher_ce(p, gold);

      loss::LossBundle bundle;
      bundle.objective = loss::LossBundle::Objective::teacher;
      bundle.epoch = epoch;
      bundle.batch = rec.batches;
      bundle.tau1 = cfg.fusion.tau1;
      bundle.terms["ce_teacher"] = ce.value().item();

      std::optional<Var> ca;
      std::vector<std::size_t> skipped;
      if (align) {
        const auto tbatch = gather(target, next_target());
        const Var ht = m.encode(g, tbatch, true, derive_seed(cfg.seed, dropout_stream, 2 * step + 1));
        const Tensor pt = m.classify(g, ht).value();
        const auto centroids = proto::compute_target_prototypes(ht.value(), pt);
        Tensor weights = pt;
        for (std::size_t k = 0; k < weights.cols(); ++k)
          if (!centroids.present[k])
            for (std::size_t i = 0; i < weights.rows(); ++i) weights.at(i, k) = 1.0;
        const Var batch_centroids = diff::masked_mean(ht, weights);
        Var target_protos = proto::moving_average_expression(r.target_prototypes, batch_centroids, centroids.present);
        r.target_prototypes.update(centroids);
        if (cfg.teacher.gradient == AlignmentGradient::straight_through) {
          Tensor offset = r.target_prototypes.centroids();
          for (std::size_t i = 0; i < offset.size(); ++i) offset[i] -= batch_centroids.value()[i];
          target_protos = diff::add(batch_centroids, offset);
        }
        const auto labels =
            loss::alignment_labels(r.source_prototypes, r.target_prototypes, cfg.exclude_outside, &skipped);
        if (labels.size() >= 2) {
          ca = loss::class_alignment(g.constant(r.source_prototypes.centroids()), target_protos, labels, cfg.fusion);
          bundle.terms["class_alignment"] = ca->value().item();
          ++rec.alignment_batches;
        } else {
          ++rec.skipped_alignment;
        }
      }

      const Var total = loss::teacher_total(ce, ca);
      bundle.terms["total"] = total.value().item();
      g.backward(total, params);
      diff::adam_step(params, adam);
      means.add(bundle);
      log_line(log, "teacher", bundle, skipped, false);
      ++rec.batches;
      ++step;
    }

    rec.mean.objective = loss::LossBundle::Objective::teacher;
    rec.mean.epoch = epoch;
    rec.mean.tau1 = cfg.fusion.tau1;
    rec.mean.terms = means.means();
    rec.source_dev_f1 = dev_f1(m, source_dev, scheme);
    rec.source_prototypes = r.source_prototypes.centroids();
    rec.target_prototypes = r.target_prototypes.centroids();
    if (*rec.source_dev_f1 > best_f1) {
      best_f1 = *rec.source_dev_f1;
      best_values = values_of(m);
      r.report.selected_epoch = epoch;
      r.report.selected_dev_f1 = best_f1;
    }
    rec.seconds = seconds_since(t0);
    r.report.epochs.push_back(std::move(rec));
  }
  restore(m, best_values);
  return r;
}

double student_alpha(std::size_t epoch, const RunConfig& cfg) {
  if (cfg.ablation.no_st) return 1.0;
  if (cfg.ablation.no_cl) return 0.5;
  if (cfg.student.epochs == 1) return 1.0;
  return loss::alpha_schedule(epoch, cfg.student.epochs - 1);
}

StudentResult distill_student(const TeacherSnapshot& snapshot, const Corpus& target, const model::Vocabulary& vocab,
                              const corpus::LabelScheme& scheme, const RunConfig& cfg, const Corpus* source_dev,
                              std::ostream* log) {
  validate(cfg);
  if (target.labeled()) throw Error("training", "distillation must receive the target corpus without labels");
  snapshot.check_matches(target);
  if (snapshot.tags() != scheme.size()) throw Error("training", "snapshot tag count differs from the label scheme");

  const auto enc = encoder_for(cfg, scheme, student_init_stream);
  StudentResult r{model::NerModel(enc, vocab), {}, {target.language, scheme.size(), enc.hidden_dim, cfg.lambda}};
  r.report.phase = "student";
  r.report.learning_rate = cfg.student.learning_rate;
  r.report.paper_learning_rate = PaperValues::student_learning_rate;
  auto& m = r.model;
  auto params = m.parameters();
  diff::AdamState adam;
  adam.learning_rate = cfg.student.learning_rate;
  const double gamma = cfg.ablation.no_pk ? 1.0 : cfg.fusion.gamma;
  const auto offsets = snapshot.offsets();
  const corpus::BatchIterator iter(target.size(), cfg.batch_size, derive_seed(cfg.seed, student_batch_stream));
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.student.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double alpha = student_alpha(epoch, cfg);
    const bool track = epoch >= cfg.student.prototype_warmup;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.alpha = alpha;
    TermMeans means;
    for (const auto& b : iter.epoch(epoch)) {
      const auto batch = gather(target, b);
      std::size_t n = 0;
      for (const auto* s : batch) n += s->size();
      Tensor p = Tensor::matrix(n, snapshot.tags());
      std::size_t row = 0;
      for (auto i : b) {
        const std::size_t len = target.sentences[i].size();
        std::copy_n(snapshot.probs.row(offsets[i]).begin(), len * snapshot.tags(), p.row(row).begin());
        row += len;
      }

      Graph g;
      const Var h = m.encode(g, batch, true, derive_seed(cfg.seed, dropout_stream, step));
      const Var q = m.classify(g, h);
      const Var kd = loss::kd_mse(g.constant(p), q);
      if (track) r.prototypes.update(proto::compute_target_prototypes(h.value(), q.value()));

      loss::LossBundle bundle;
      bundle.objective = loss::LossBundle::Objective::student;
      bundle.epoch = epoch;
      bundle.batch = rec.batches;
      bundle.gamma = gamma;
      bundle.tau2 = cfg.fusion.tau2;
      bundle.terms["kd_mse"] = kd.value().item();

      std::optional<Var> st;
      double batch_alpha = alpha;
      bool fallback = false;
      if (alpha < 1.0) {
        if (r.prototypes.all_initialized()) {
          const Tensor rho = proto::prototype_probabilities(h.value(), r.prototypes, cfg.fusion.tau2);
          const auto pseudo = loss::hard_labels(loss::hybrid_labels(rho, p, gamma));
          st = loss::self_train_ce(q, pseudo);
          bundle.terms["self_train_ce"] = st->value().item();
        } else {
          batch_alpha = 1.0;
          fallback = true;
          ++rec.fallback_batches;
        }
      }
      bundle.alpha = batch_alpha;
      const Var total = loss::student_total(st, kd, batch_alpha);
      bundle.terms["total"] = total.value().item();
      g.backward(total, params);
      diff::adam_step(params, adam);
      means.add(bundle);
      log_line(log, "student", bundle, {}, fallback);
      ++rec.batches;
      ++step;
    }
    rec.mean.objective = loss::LossBundle::Objective::student;
    rec.mean.epoch = epoch;
    rec.mean.alpha = alpha;
    rec.mean.gamma = gamma;
    rec.mean.tau2 = cfg.fusion.tau2;
    rec.mean.terms = means.means();
    if (source_dev) rec.source_dev_f1 = dev_f1(m, *source_dev, scheme);
    rec.target_prototypes = r.prototypes.centroids();
    rec.seconds = seconds_since(t0);
    r.report.fallback_batches += rec.fallback_batches;
    r.report.epochs.push_back(std::move(rec));
  }
  r.report.selected_epoch = cfg.student.epochs - 1;
  r.report.selected_dev_f1 = r.report.epochs.back().source_dev_f1;
  return r;
}

}  // namespace prokd::train
