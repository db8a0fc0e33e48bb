#include <filesystem>
#include <fstream>
#include <sstream>

#include "condense/error.hpp"
#include "condense/pipeline/stages.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support/synthetic.hpp"

using namespace condense;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_corpus(const std::string& path, std::size_t docs, std::uint64_t seed) {
  Rng rng(seed);
  std::ofstream out(path);
  for (std::size_t i = 0; i < docs; ++i) {
    const auto d = synthetic::extraction_doc(rng, 20, 2, 4);
    nlohmann::json j;
    j["id"] = "doc" + std::to_string(seed) + "_" + std::to_string(i);
    for (const auto& s : d.record.document.sentences) j["article"].push_back(join_tokens(s));
    for (const auto& s : d.record.summary.sentences) j["abstract"].push_back(join_tokens(s));
    out << j.dump() << '\n';
  }
}

// A tiny configuration over a generated corpus in `dir`.
PipelineConfig toy_config(const std::string& dir) {
  fs::create_directories(dir);
  write_corpus(dir + "/train.jsonl", 40, 1);
  write_corpus(dir + "/valid.jsonl", 8, 2);
  write_corpus(dir + "/test.jsonl", 8, 3);
  PipelineConfig c;
  c.train_path = dir + "/train.jsonl";
  c.valid_path = dir + "/valid.jsonl";
  c.test_path = dir + "/test.jsonl";
  c.out = dir + "/run";
  c.emb_dim = 8;
  c.enc_hidden = 8;
  c.dec_hidden = 8;
  c.att_dim = 8;
  c.level_dim = 4;
  c.cnn_windows = {1, 2};
  c.cnn_filters = 4;
  c.doc_hidden = 4;
  c.ptr_hidden = 8;
  c.beam = 3;
  c.beam_groups = 3;
  c.max_decode = 12;
  c.abstractor_epochs = 2;
  c.extractor_epochs = 2;
  c.rl_epochs = 1;
  c.batch_size = 8;
  return c;
}

void run_all(const PipelineConfig& c) {
  std::ostringstream log, out;
  run_align(c, log);
  run_train_abstractor(c, log);
  run_gen_candidates(c, log);
  run_pretrain_extractor(c, log);
  run_train_rl(c, log);
  run_summarize(c, log);
  run_evaluate(c, true, out, log);
}

SummaryRecord summary(const std::string& id, std::vector<Sentence> s, std::vector<std::size_t> slots) {
  return SummaryRecord{id, std::move(s), std::move(slots)};
}

}  // namespace

TEST_CASE("config defaults carry the published hyperparameters") {
  const PipelineConfig c;
  CHECK(c.lr_ml == 5e-4);
  CHECK(c.lr_rl == 5e-5);
  CHECK(c.batch_size == 32);
  CHECK(c.clip == 2.0);
  CHECK(c.gamma == 0.95);
  CHECK(c.article_limit == 100);
  CHECK(c.summary_limit == 30);
  CHECK(c.cnn_windows == std::vector<std::size_t>{3, 4, 5});
  CHECK(c.cnn_filters == 100);
  CHECK(c.level_dim == 128);
  CHECK(2 * c.enc_hidden == 512);
  CHECK(c.ptr_hidden == 256);
  CHECK(c.overrides().empty());
}

TEST_CASE("config JSON: round trip, overrides, rejection of unknown or nested keys") {
  PipelineConfig c;
  c.seed = 9;
  c.strategy = "two2one";
  const PipelineConfig back = PipelineConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(c.overrides() == nlohmann::json{{"seed", 9}, {"strategy", "two2one"}});
  CHECK(PipelineConfig::from_json({{"k", 3}}).k == 3);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"kk", 3}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"k", "three"}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"k", {{"a", 1}}}}), ConfigError);
  PipelineConfig bad;
  bad.gamma = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("references scored against themselves give 100") {
  CorpusRecord r;
  r.document.id = "a";
  r.summary.sentences = {{"x", "y", "z"}, {"q"}};
  const auto rep = evaluate_summaries({summary("a", r.summary.sentences, {0, 3})}, {r}, {3});
  const std::string text = format_report(rep, false);
  CHECK(text.find("ROUGE-1 F1 100.00") != std::string::npos);
  CHECK(text.find("ROUGE-2 F1 100.00") != std::string::npos);
  CHECK(text.find("ROUGE-L F1 100.00") != std::string::npos);
  CHECK(text.find("Org.%") == std::string::npos);
  CHECK_THROWS_AS(evaluate_summaries({summary("b", {}, {})}, {r}, {3}), DataError);
}

TEST_CASE("selection percentages count version-0 slots as original") {
  CorpusRecord r;
  r.document.id = "a";
  r.summary.sentences = {{"x"}};
  // sets of three: slots 0, 3, 6, ... are originals
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < 9; ++i) slots.push_back(3 * i);
  for (std::size_t i = 0; i < 11; ++i) slots.push_back(3 * i + 1 + i % 2);
  const auto rep = evaluate_summaries({summary("a", {{"x"}}, slots)}, {r}, {3});
  CHECK(rep.original == 9);
  CHECK(rep.condensed == 11);
  const std::string text = format_report(rep, true);
  CHECK(text.find("Org.% 45.0\n") != std::string::npos);
  CHECK(text.find("Con.% 55.0\n") != std::string::npos);
  CHECK(rep.original_percent() + rep.condensed_percent() == 100.0);

  const auto originals = evaluate_summaries({summary("a", {{"x"}}, {0, 3})}, {r}, {3});
  CHECK(format_report(originals, true).find("Org.% 100.0\nCon.% 0.0\n") != std::string::npos);
}

TEST_CASE("missing upstream artifacts name the stage to run") {
  PipelineConfig c;
  c.out = "test_pipeline_empty";
  c.train_path = "unused.jsonl";
  fs::remove_all(c.out);
  std::ostringstream log;
  auto message = [&](auto&& stage) {
    try {
      stage(c, log);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message(run_train_abstractor).find("'align'") != std::string::npos);
  CHECK(message(run_gen_candidates).find("'align'") != std::string::npos);
  CHECK(message(run_summarize).find("'align'") != std::string::npos);
  fs::remove_all(c.out);
}

TEST_CASE("pipeline runs end to end, deterministically, and independent of worker count") {
  const std::string dir = "test_pipeline_run";
  fs::remove_all(dir);
  PipelineConfig a = toy_config(dir);
  run_all(a);
  for (const char* stage : {"align", "train-abstractor", "gen-candidates", "pretrain-extractor",
                            "train-rl", "summarize", "evaluate"}) {
    const auto m = nlohmann::json::parse(slurp(ArtifactPaths{a.out}.manifest(stage)));
    CHECK(m.at("stage") == stage);
    CHECK(m.at("config") == a.to_json());
    CHECK(m.contains("git_describe"));
    CHECK(m.at("wall_time_seconds").get<double>() >= 0.0);
    CHECK(m.at("overrides").contains("emb_dim"));
  }
  const std::string rl_log = slurp(ArtifactPaths{a.out}.rl_log());
  CHECK(rl_log.substr(0, rl_log.find('\n')) == "epoch,mean_reward,policy_loss,critic_loss,val_rouge_l");

  PipelineConfig b = a;
  b.out = dir + "/run_again";
  b.workers = 3;
  run_all(b);
  const ArtifactPaths pa{a.out}, pb{b.out};
  CHECK(slurp(pa.candidates(Split::kTest)) == slurp(pb.candidates(Split::kTest)));
  CHECK(slurp(pa.summaries(Split::kTest)) == slurp(pb.summaries(Split::kTest)));
  CHECK(slurp(pa.extractor_rl()) == slurp(pb.extractor_rl()));
  CHECK(!slurp(pa.summaries(Split::kTest)).empty());

  // cold-start RL is refused unless asked for
  fs::remove(pa.extractor());
  std::ostringstream log;
  CHECK_THROWS_WITH_AS(run_train_rl(a, log), doctest::Contains("pretrain-extractor"), ConfigError);
  a.allow_cold_start = true;
  CHECK_NOTHROW(run_train_rl(a, log));
  fs::remove_all(dir);
}
