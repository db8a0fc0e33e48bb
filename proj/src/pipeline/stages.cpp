#include "condense/pipeline/stages.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "condense/abstractor/candidates.hpp"
#include "condense/abstractor/train.hpp"
#include "condense/align.hpp"
#include "condense/error.hpp"
#include "condense/extractor/train.hpp"
#include "condense/rl/a2c.hpp"

#ifndef CONDENSE_GIT_DESCRIBE
#define CONDENSE_GIT_DESCRIBE "unknown"
#endif

namespace condense {

namespace fs = std::filesystem;

std::string ArtifactPaths::vocab() const { return dir + "/vocab.txt"; }
std::string ArtifactPaths::alignments(Split s) const {
  return dir + "/alignments." + std::string(split_name(s)) + ".jsonl";
}
std::string ArtifactPaths::abstractor() const { return dir + "/abstractor.ckpt"; }
std::string ArtifactPaths::candidates(Split s) const {
  return dir + "/candidates." + std::string(split_name(s)) + ".jsonl";
}
std::string ArtifactPaths::extractor() const { return dir + "/extractor.ckpt"; }
std::string ArtifactPaths::extractor_rl() const { return dir + "/extractor_rl.ckpt"; }
std::string ArtifactPaths::critic() const { return dir + "/critic.ckpt"; }
std::string ArtifactPaths::rl_log() const { return dir + "/rl_log.csv"; }
std::string ArtifactPaths::summaries(Split s) const {
  return dir + "/summaries." + std::string(split_name(s)) + ".jsonl";
}
std::string ArtifactPaths::manifest(const std::string& stage) const {
  return dir + "/" + stage + ".manifest.json";
}

void require_artifact(const std::string& path, const std::string& stage) {
  if (!fs::exists(path)) {
    throw ConfigError("missing " + path + "; run '" + stage + "' first");
  }
}

namespace {

using Clock = std::chrono::steady_clock;

const Split kSplits[] = {Split::kTrain, Split::kValid, Split::kTest};

const std::string& corpus_path(const PipelineConfig& c, Split s) {
  switch (s) {
    case Split::kTrain: return c.train_path;
    case Split::kValid: return c.valid_path;
    case Split::kTest: return c.test_path;
  }
  return c.train_path;
}

ArtifactPaths prepare(const PipelineConfig& config) {
  config.validate();
  parse_strategy(config.strategy);
  fs::create_directories(config.out);
  return ArtifactPaths{config.out};
}

WarningSink counter(std::size_t& n) {
  return [&n](const std::string&) { ++n; };
}

std::vector<CorpusRecord> load_corpus(const PipelineConfig& c, Split s, std::ostream& log,
                                      bool truncated = true) {
  const std::string& path = corpus_path(c, s);
  if (path.empty()) throw ConfigError(std::string(split_name(s)) + "_path is not set");
  std::size_t skipped = 0;
  auto records = ingest_corpus(path, counter(skipped));
  if (skipped) log << split_name(s) << ": skipped " << skipped << " records\n";
  if (truncated) truncate_corpus(records, TruncationLimits{c.article_limit, c.summary_limit});
  return records;
}

void write_manifest(const ArtifactPaths& paths, const std::string& stage,
                    const PipelineConfig& config, const std::vector<std::string>& artifacts,
                    Clock::time_point start) {
  nlohmann::json m;
  m["stage"] = stage;
  m["config"] = config.to_json();
  m["overrides"] = config.overrides();
  m["seed"] = config.seed;
  m["git_describe"] = CONDENSE_GIT_DESCRIBE;
  m["wall_time_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
  m["artifacts"] = artifacts;
  std::ofstream out(paths.manifest(stage));
  if (!out) throw DataError("cannot write " + paths.manifest(stage));
  out << m.dump(2) << '\n';
}

PairMode pair_mode(const PipelineConfig& c) {
  return parse_strategy(c.strategy) == Strategy::kTwoToOne ? PairMode::kTwoToOne
                                                           : PairMode::kOneToOne;
}

bool controllable(const PipelineConfig& c) {
  return parse_strategy(c.strategy) == Strategy::kCompressCtrl;
}

AbstractorConfig abstractor_config(const PipelineConfig& c, std::size_t vocab_size) {
  AbstractorConfig a;
  a.vocab_size = vocab_size;
  a.emb_dim = c.emb_dim;
  a.enc_hidden = c.enc_hidden;
  a.dec_hidden = c.dec_hidden;
  a.att_dim = c.att_dim;
  a.level_dim = c.level_dim;
  a.controllable = controllable(c);
  return a;
}

ExtractorConfig extractor_config(const PipelineConfig& c, std::size_t vocab_size) {
  ExtractorConfig e;
  e.vocab_size = vocab_size;
  e.emb_dim = c.emb_dim;
  e.windows = c.cnn_windows;
  e.filters = c.cnn_filters;
  e.doc_hidden = c.doc_hidden;
  e.dec_hidden = c.ptr_hidden;
  e.att_dim = c.att_dim;
  e.mask_repeats = c.mask_repeats;
  e.max_steps = c.max_steps;
  return e;
}

MlTrainConfig ml_config(const PipelineConfig& c, std::size_t epochs, const std::string& ckpt) {
  MlTrainConfig m;
  m.epochs = epochs;
  m.batch_size = c.batch_size;
  m.lr = c.lr_ml;
  m.clip = c.clip;
  m.seed = c.seed;
  m.checkpoint_path = ckpt;
  return m;
}

// Abstractor examples of one split, from its alignment file.
std::vector<AbstractorExample> abstractor_examples(const PipelineConfig& c,
                                                   const ArtifactPaths& paths, Split s,
                                                   const Vocabulary& vocab, std::ostream& log) {
  const auto records = load_corpus(c, s, log);
  const auto alignments = read_alignments(paths.alignments(s));
  if (alignments.size() != records.size()) {
    throw DataError(paths.alignments(s) + " has " + std::to_string(alignments.size()) +
                    " records, corpus has " + std::to_string(records.size()));
  }
  std::vector<AbstractorExample> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (alignments[i].alignment.id != records[i].document.id) {
      throw DataError(paths.alignments(s) + ": record " + std::to_string(i) + " is '" +
                      alignments[i].alignment.id + "', corpus has '" + records[i].document.id + "'");
    }
    for (const PairIndex& p : alignments[i].alignment.pairs) {
      out.push_back(make_example(materialize(records[i], p), vocab, controllable(c), c.summary_limit));
    }
  }
  return out;
}

// Candidate sets joined with their reference summaries by position and id.
std::vector<RlDocument> joined_documents(const PipelineConfig& c, const ArtifactPaths& paths,
                                         Split s, std::ostream& log) {
  require_artifact(paths.candidates(s), "gen-candidates");
  const auto records = load_corpus(c, s, log);
  const auto cands = read_candidates(paths.candidates(s));
  if (cands.size() != records.size()) {
    throw DataError(paths.candidates(s) + " does not match the " + std::string(split_name(s)) +
                    " corpus; rerun 'gen-candidates'");
  }
  std::vector<RlDocument> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (cands[i].id != records[i].document.id) {
      throw DataError(paths.candidates(s) + ": record " + std::to_string(i) + " is '" +
                      cands[i].id + "', corpus has '" + records[i].document.id + "'");
    }
    out.push_back(RlDocument{cands[i].sets, records[i].summary});
  }
  return out;
}

std::vector<ExtractorExample> extractor_examples(const std::vector<RlDocument>& docs) {
  std::vector<ExtractorExample> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    out.push_back(ExtractorExample{d.sets, extraction_labels(make_proxy(d.sets), d.reference).labels});
  }
  return out;
}

bool has_split(const PipelineConfig& c, Split s) { return !corpus_path(c, s).empty(); }

}  // namespace

void run_align(const PipelineConfig& config, std::ostream& log) {
  const auto start = Clock::now();
  const ArtifactPaths paths = prepare(config);
  std::vector<std::string> written;
  for (Split s : kSplits) {
    if (!has_split(config, s)) continue;
    const auto records = load_corpus(config, s, log);
    if (s == Split::kTrain) {
      if (records.empty()) throw DataError(config.train_path + " holds no usable records");
      build_vocab(records, config.vocab_size).save(paths.vocab());
      written.push_back(paths.vocab());
    }
    std::size_t warnings = 0;
    std::vector<AlignmentRecord> out;
    std::size_t pairs = 0;
    for (const auto& r : records) {
      AlignmentRecord a;
      a.alignment = align_document(r, pair_mode(config), counter(warnings));
      pairs += a.alignment.pairs.size();
      out.push_back(std::move(a));
    }
    write_records(paths.alignments(s), out);
    written.push_back(paths.alignments(s));
    log << "align " << split_name(s) << ": " << records.size() << " documents, " << pairs
        << " pairs";
    if (warnings) log << ", " << warnings << " warnings";
    log << '\n';
  }
  if (written.empty()) throw ConfigError("no corpus path is set");
  write_manifest(paths, "align", config, written, start);
}

void run_train_abstractor(const PipelineConfig& config, std::ostream& log) {
  const auto start = Clock::now();
  const ArtifactPaths paths = prepare(config);
  require_artifact(paths.vocab(), "align");
  require_artifact(paths.alignments(Split::kTrain), "align");
  const Vocabulary vocab = Vocabulary::load(paths.vocab());
  const auto train = abstractor_examples(config, paths, Split::kTrain, vocab, log);
  std::vector<AbstractorExample> valid;
  if (has_split(config, Split::kValid)) {
    require_artifact(paths.alignments(Split::kValid), "align");
    valid = abstractor_examples(config, paths, Split::kValid, vocab, log);
  }
  AbstractorModel model(abstractor_config(config, vocab.size()), config.seed);
  log << "train-abstractor: " << train.size() << " pairs, " << valid.size() << " held out\n";
  const auto result = train_abstractor(
      model, train, valid, ml_config(config, config.abstractor_epochs, ""),
      [&](const AbstractorEpoch& e) {
        log << "  epoch " << e.epoch << " nll " << e.train_nll << " acc " << e.token_accuracy
            << " valid_nll " << e.valid_nll << '\n';
      });
  model.save(paths.abstractor(), {{"best_epoch", result.best_epoch}});
  write_manifest(paths, "train-abstractor", config, {paths.abstractor()}, start);
}

void run_gen_candidates(const PipelineConfig& config, std::ostream& log) {
  const auto start = Clock::now();
  const ArtifactPaths paths = prepare(config);
  require_artifact(paths.vocab(), "align");
  require_artifact(paths.abstractor(), "train-abstractor");
  const Vocabulary vocab = Vocabulary::load(paths.vocab());
  const AbstractorModel model = AbstractorModel::load(paths.abstractor());
  if (model.config().controllable != controllable(config)) {
    throw ConfigError(paths.abstractor() + " was trained for a different strategy; rerun 'train-abstractor'");
  }
  CandidateOptions opts;
  opts.strategy = parse_strategy(config.strategy);
  opts.k = config.k;
  opts.beam = BeamConfig{config.beam, config.beam_groups, config.diversity, config.max_decode};
  std::vector<std::string> written;
  for (Split s : kSplits) {
    if (!has_split(config, s)) continue;
    const auto records = load_corpus(config, s, log);
    std::vector<Document> docs;
    docs.reserve(records.size());
    for (const auto& r : records) docs.push_back(r.document);
    std::size_t warnings = 0;
    const auto out = generate_candidates(model, vocab, docs, opts, config.workers, counter(warnings));
    write_records(paths.candidates(s), out);
    written.push_back(paths.candidates(s));
    log << "gen-candidates " << split_name(s) << ": " << out.size() << " documents";
    if (warnings) log << ", " << warnings << " warnings";
    log << '\n';
  }
  write_manifest(paths, "gen-candidates", config, written, start);
}

void run_pretrain_extractor(const PipelineConfig& config, std::ostream& log) {
  const auto start = Clock::now();
  const ArtifactPaths paths = prepare(config);
  require_artifact(paths.vocab(), "align");
  const Vocabulary vocab = Vocabulary::load(paths.vocab());
  const auto train = extractor_examples(joined_documents(config, paths, Split::kTrain, log));
  std::vector<ExtractorExample> valid;
  if (has_split(config, Split::kValid)) {
    valid = extractor_examples(joined_documents(config, paths, Split::kValid, log));
  }
  ExtractorModel model(extractor_config(config, vocab.size()), config.seed);
  if (!config.word_vectors.empty()) {
    const std::size_t found = model.load_word_vectors(config.word_vectors, vocab);
    log << "word vectors: " << found << " of " << vocab.size() << " tokens\n";
  }
  log << "pretrain-extractor: " << train.size() << " documents, " << valid.size()
      << " held out\n";
  const auto result = pretrain_extractor(
      model, vocab, train, valid, ml_config(config, config.extractor_epochs, ""),
      [&](const ExtractorEpoch& e) {
        log << "  epoch " << e.epoch << " nll " << e.train_nll << " acc " << e.accuracy
            << " valid_nll " << e.valid_nll << " valid_acc " << e.valid_accuracy << '\n';
      });
  model.save(paths.extractor(), {{"best_epoch", result.best_epoch}});
  write_manifest(paths, "pretrain-extractor", config, {paths.extractor()}, start);
}

void run_train_rl(const PipelineConfig& config, std::ostream& log) {
  const auto start = Clock::now();
  const ArtifactPaths paths = prepare(config);
  require_artifact(paths.vocab(), "align");
  const Vocabulary vocab = Vocabulary::load(paths.vocab());
  const auto train = joined_documents(config, paths, Split::kTrain, log);
  const auto valid = has_split(config, Split::kValid)
                         ? joined_documents(config, paths, Split::kValid, log)
                         : train;

  ExtractorModel policy = [&] {
    if (fs::exists(paths.extractor())) return ExtractorModel::load(paths.extractor());
    if (!config.allow_cold_start) {
      throw ConfigError("missing " + paths.extractor() +
                        "; run 'pretrain-extractor' first (or set allow_cold_start)");
    }
    log << "train-rl: cold start from random weights\n";
    return ExtractorModel(extractor_config(config, vocab.size()), config.seed);
  }();
  ExtractorConfig critic_config = policy.config();
  critic_config.value_head = true;
  ExtractorModel critic(critic_config, config.seed + 1, "critic");
  // the critic starts from the policy's encoder and pointer weights
  for (const auto& p : critic.params().all()) {
    const std::string name = "ext" + p->name.substr(p->name.find('.'));
    if (name != "ext.value.weight" && name != "ext.value.bias" && policy.params().contains(name)) {
      p->value = policy.params().get(name).value;
    }
  }

  A2cConfig rl;
  rl.gamma = config.gamma;
  rl.policy_lr = config.lr_rl;
  rl.critic_lr = config.lr_rl;
  rl.clip = config.clip;
  rl.batch_size = config.batch_size;
  rl.epochs = config.rl_epochs;
  rl.whiten_advantages = config.whiten_advantages;
  rl.seed = config.seed;
  log << "train-rl: " << train.size() << " documents, " << valid.size() << " for validation\n";
  const RlTrainLog result = train_rl(policy, critic, vocab, train, valid, rl, [&](const RlEpoch& e) {
    log << "  epoch " << e.epoch << " reward " << e.mean_reward << " policy " << e.policy_loss
        << " critic " << e.critic_loss << " val_rouge_l " << e.val_rouge_l << '\n';
  });
  policy.save(paths.extractor_rl(), {{"best_epoch", result.best_epoch}});
  critic.save(paths.critic());
  write_rl_log(paths.rl_log(), result);
  write_manifest(paths, "train-rl", config, {paths.extractor_rl(), paths.critic(), paths.rl_log()},
                 start);
}

void run_summarize(const PipelineConfig& config, std::ostream& log) {
  const auto start = Clock::now();
  const ArtifactPaths paths = prepare(config);
  const Split split = parse_split(config.eval_split);
  require_artifact(paths.vocab(), "align");
  require_artifact(paths.candidates(split), "gen-candidates");
  const std::string ckpt = config.summarizer == "rl" ? paths.extractor_rl() : paths.extractor();
  require_artifact(ckpt, config.summarizer == "rl" ? "train-rl" : "pretrain-extractor");
  const Vocabulary vocab = Vocabulary::load(paths.vocab());
  const ExtractorModel model = ExtractorModel::load(ckpt);
  const auto cands = read_candidates(paths.candidates(split));

  std::vector<SummaryRecord> out(cands.size());
  std::vector<std::exception_ptr> errors(config.workers);
  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < cands.size(); i += config.workers) {
        const SummaryHypothesis h = extract_greedy(model, cands[i].sets, vocab);
        out[i] = SummaryRecord{cands[i].id, h.sentences, h.slots};
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (config.workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < config.workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  write_records(paths.summaries(split), out);
  log << "summarize " << split_name(split) << ": " << out.size() << " documents\n";
  write_manifest(paths, "summarize", config, {paths.summaries(split)}, start);
}

double EvaluationReport::original_percent() const {
  const std::size_t total = original + condensed;
  return total ? 100.0 * double(original) / double(total) : 0.0;
}

double EvaluationReport::condensed_percent() const {
  const std::size_t total = original + condensed;
  return total ? 100.0 * double(condensed) / double(total) : 0.0;
}

EvaluationReport evaluate_summaries(const std::vector<SummaryRecord>& summaries,
                                    const std::vector<CorpusRecord>& references,
                                    const std::vector<std::size_t>& set_sizes) {
  if (set_sizes.size() != summaries.size()) {
    throw ConfigError("one candidate-set size per summary is required");
  }
  std::map<std::string, const ReferenceSummary*> by_id;
  for (const auto& r : references) by_id[r.document.id] = &r.summary;
  EvaluationReport rep;
  rep.documents = summaries.size();
  if (summaries.empty()) return rep;
  auto accumulate = [](RougeScore& total, const RougeScore& s) {
    total.recall += s.recall;
    total.precision += s.precision;
    total.f1 += s.f1;
  };
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const SummaryRecord& s = summaries[i];
    const auto it = by_id.find(s.id);
    if (it == by_id.end()) throw DataError("no reference for summary '" + s.id + "'");
    const auto& ref = it->second->sentences;
    accumulate(rep.rouge1, rouge_n(s.summary, ref, 1));
    accumulate(rep.rouge2, rouge_n(s.summary, ref, 2));
    accumulate(rep.rouge_l, rouge_l(s.summary, ref));
    if (set_sizes[i] == 0) throw DataError("empty candidate set for '" + s.id + "'");
    for (std::size_t slot : s.slots) {
      if (slot % set_sizes[i] == 0) {
        ++rep.original;
      } else {
        ++rep.condensed;
      }
    }
    for (const auto& sentence : s.summary) rep.avg_tokens += double(sentence.size());
    rep.avg_sentences += double(s.summary.size());
  }
  const double n = double(summaries.size());
  for (RougeScore* r : {&rep.rouge1, &rep.rouge2, &rep.rouge_l}) {
    r->recall /= n;
    r->precision /= n;
    r->f1 /= n;
  }
  rep.avg_tokens /= n;
  rep.avg_sentences /= n;
  return rep;
}

std::string format_report(const EvaluationReport& r, bool recall) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "documents " << r.documents << '\n';
  out << "ROUGE-1 F1 " << 100 * r.rouge1.f1 << '\n';
  out << "ROUGE-2 F1 " << 100 * r.rouge2.f1 << '\n';
  out << "ROUGE-L F1 " << 100 * r.rouge_l.f1 << '\n';
  if (recall) {
    out << "ROUGE-1 R " << 100 * r.rouge1.recall << '\n';
    out << "ROUGE-2 R " << 100 * r.rouge2.recall << '\n';
    out << "ROUGE-L R " << 100 * r.rouge_l.recall << '\n';
    out << std::setprecision(1);
    out << "Org.% " << r.original_percent() << '\n';
    out << "Con.% " << r.condensed_percent() << '\n';
    out << "avg length " << r.avg_tokens << " tokens, " << r.avg_sentences << " sentences\n";
  }
  return out.str();
}

EvaluationReport run_evaluate(const PipelineConfig& config, bool recall, std::ostream& out,
                              std::ostream& log) {
  const auto start = Clock::now();
  const ArtifactPaths paths = prepare(config);
  const Split split = parse_split(config.eval_split);
  require_artifact(paths.summaries(split), "summarize");
  require_artifact(paths.candidates(split), "gen-candidates");
  const auto summaries = read_summaries(paths.summaries(split));
  std::map<std::string, std::size_t> sizes;
  for (const auto& c : read_candidates(paths.candidates(split))) {
    sizes[c.id] = c.sets.empty() ? 0 : c.sets.front().size();
  }
  std::vector<std::size_t> set_sizes;
  for (const auto& s : summaries) {
    const auto it = sizes.find(s.id);
    if (it == sizes.end()) throw DataError("no candidates for summary '" + s.id + "'");
    set_sizes.push_back(it->second);
  }
  // references are scored in full, not truncated
  const auto references = load_corpus(config, split, log, false);
  const EvaluationReport report = evaluate_summaries(summaries, references, set_sizes);
  const std::string text = format_report(report, recall);
  out << text;
  std::ofstream(config.out + "/evaluation." + std::string(split_name(split)) + ".txt") << text;
  write_manifest(paths, "evaluate", config,
                 {config.out + "/evaluation." + std::string(split_name(split)) + ".txt"}, start);
  return report;
}

}  // namespace condense
