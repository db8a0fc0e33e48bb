// Command-line front end: one subcommand per pipeline stage.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "condense/error.hpp"
#include "condense/pipeline/stages.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  std::optional<std::string> strategy;
  std::optional<std::size_t> k;
  std::optional<std::size_t> beam;
  bool recall = false;
};

condense::PipelineConfig effective_config(const Flags& f) {
  condense::PipelineConfig c =
      f.config.empty() ? condense::PipelineConfig{} : condense::PipelineConfig::load(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.workers) c.workers = *f.workers;
  if (f.out) c.out = *f.out;
  if (f.strategy) c.strategy = *f.strategy;
  if (f.k) c.k = *f.k;
  if (f.beam) c.beam = *f.beam;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extract-and-condense summarization pipeline"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "flat JSON config file");
  app.add_option("--seed", f.seed, "random seed");
  app.add_option("--workers", f.workers, "threads for gen-candidates and summarize");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--strategy", f.strategy, "candidate strategy")
      ->check(CLI::IsMember({"one2one-topk", "one2one-long-short", "compress-ctrl", "two2one"}));
  app.add_option("--k", f.k, "condensed candidates per sentence (one2one-topk)");
  app.add_option("--beam", f.beam, "beam size");

  app.add_subcommand("align", "align summaries to source sentences; build the vocabulary");
  app.add_subcommand("train-abstractor", "train the sentence abstractor");
  app.add_subcommand("gen-candidates", "decode candidate sets for every document sentence");
  app.add_subcommand("pretrain-extractor", "maximum-likelihood training of the extractor");
  app.add_subcommand("train-rl", "actor-critic fine-tuning of the extractor");
  app.add_subcommand("summarize", "greedy extraction over the evaluation split");
  auto* evaluate = app.add_subcommand("evaluate", "score summaries against references");
  evaluate->add_flag("--recall", f.recall, "also print recall, Org.%/Con.% and average length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const condense::PipelineConfig config = effective_config(f);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "align") {
      condense::run_align(config, std::cerr);
    } else if (cmd == "train-abstractor") {
      condense::run_train_abstractor(config, std::cerr);
    } else if (cmd == "gen-candidates") {
      condense::run_gen_candidates(config, std::cerr);
    } else if (cmd == "pretrain-extractor") {
      condense::run_pretrain_extractor(config, std::cerr);
    } else if (cmd == "train-rl") {
      condense::run_train_rl(config, std::cerr);
    } else if (cmd == "summarize") {
      condense::run_summarize(config, std::cerr);
    } else {
      condense::run_evaluate(config, f.recall, std::cout, std::cerr);
    }
  } catch (const condense::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
