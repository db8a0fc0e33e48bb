#include "condense/abstractor/candidates.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include "condense/error.hpp"

namespace condense::inline CONDENSE_PRECISION {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kTopK: return "one2one-topk";
    case Strategy::kLongShort: return "one2one-long-short";
    case Strategy::kCompressCtrl: return "compress-ctrl";
    case Strategy::kTwoToOne: return "two2one";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::kTopK, Strategy::kLongShort, Strategy::kCompressCtrl,
                     Strategy::kTwoToOne}) {
    if (strategy_name(s) == name) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

namespace {

Sentence realize(const Hypothesis& h, const Vocabulary& vocab, const EncodedSequence& src) {
  return decode(h.content(), vocab, src.oov_tokens);
}

Sentence top1(const AbstractorModel& model, const Vocabulary& vocab, const Sentence& input,
              const BeamConfig& beam, std::optional<CompressionLevel> level) {
  const EncodedSequence src = encode(input, vocab);
  const BeamResult r = diverse_beam_search(model, src, beam, level);
  return realize(r.hypotheses.front(), vocab, src);
}

Sentence concat_sentences(const Sentence& a, const Sentence& b) {
  Sentence out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

CandidateSet generate_candidate_set(const AbstractorModel& model, const Vocabulary& vocab,
                                    const Document& doc, std::size_t index,
                                    const CandidateOptions& options, const WarningSink& warn) {
  const Sentence& x = doc.sentences.at(index);
  const bool controllable = model.config().controllable;
  if ((options.strategy == Strategy::kCompressCtrl) != controllable) {
    throw ConfigError(std::string(strategy_name(options.strategy)) +
                      " does not match the abstractor checkpoint");
  }
  if (options.k == 0) throw ConfigError("k must be at least 1");
  if (options.strategy != Strategy::kTopK && options.k != 2) {
    throw ConfigError(std::string(strategy_name(options.strategy)) + " produces exactly k=2");
  }
  auto flag = [&](const std::string& what) {
    if (warn) warn(doc.id + " sentence " + std::to_string(index) + ": " + what);
  };

  CandidateSet set{x};
  switch (options.strategy) {
    case Strategy::kTopK:
    case Strategy::kLongShort: {
      BeamConfig beam = options.beam;
      beam.beam = std::max(beam.beam, options.k);
      const EncodedSequence src = encode(x, vocab);
      const BeamResult r = diverse_beam_search(model, src, beam);
      std::vector<Sentence> outs;
      for (const auto& h : r.hypotheses) outs.push_back(realize(h, vocab, src));
      if (options.strategy == Strategy::kTopK) {
        if (outs.size() < options.k) flag("fewer hypotheses than k; duplicating the last");
        for (std::size_t i = 0; i < options.k; ++i) set.push_back(outs[std::min(i, outs.size() - 1)]);
      } else {
        if (outs.size() < 2) {
          flag("fewer than two hypotheses; duplicating");
          set.push_back(outs.front());
          set.push_back(outs.front());
        } else {
          // ties keep the better-ranked hypothesis
          std::size_t longest = 0, shortest = 0;
          for (std::size_t i = 1; i < outs.size(); ++i) {
            if (outs[i].size() > outs[longest].size()) longest = i;
            if (outs[i].size() < outs[shortest].size()) shortest = i;
          }
          set.push_back(outs[longest]);
          set.push_back(outs[shortest]);
        }
      }
      break;
    }
    case Strategy::kCompressCtrl:
      set.push_back(top1(model, vocab, x, options.beam, CompressionLevel::kLow));
      set.push_back(top1(model, vocab, x, options.beam, CompressionLevel::kHigh));
      break;
    case Strategy::kTwoToOne: {
      const std::size_t n = doc.sentences.size();
      if (n == 1) {
        flag("single-sentence document; decoding the sentence alone");
        const Sentence alone = top1(model, vocab, x, options.beam, std::nullopt);
        set.push_back(alone);
        set.push_back(alone);
        break;
      }
      const Sentence& left = index > 0 ? doc.sentences[index - 1] : doc.sentences[index + 1];
      const Sentence& right = index + 1 < n ? doc.sentences[index + 1] : doc.sentences[index - 1];
      set.push_back(top1(model, vocab, concat_sentences(x, left), options.beam, std::nullopt));
      set.push_back(top1(model, vocab, concat_sentences(x, right), options.beam, std::nullopt));
      break;
    }
  }
  return set;
}

CandidateRecord generate_candidates(const AbstractorModel& model, const Vocabulary& vocab,
                                    const Document& doc, const CandidateOptions& options,
                                    const WarningSink& warn) {
  CandidateRecord rec;
  rec.id = doc.id;
  rec.strategy = std::string(strategy_name(options.strategy));
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    rec.sets.push_back(generate_candidate_set(model, vocab, doc, i, options, warn));
  }
  return rec;
}

std::vector<CandidateRecord> generate_candidates(const AbstractorModel& model,
                                                 const Vocabulary& vocab,
                                                 const std::vector<Document>& docs,
                                                 const CandidateOptions& options,
                                                 std::size_t workers, const WarningSink& warn) {
  std::vector<CandidateRecord> out(docs.size());
  workers = std::max<std::size_t>(1, std::min(workers, docs.size()));
  // warnings are buffered per document and replayed in input order
  std::vector<std::vector<std::string>> notes(docs.size());
  std::vector<std::exception_ptr> errors(workers);
  auto run = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < docs.size(); i += workers) {
        out[i] = generate_candidates(model, vocab, docs[i], options,
                                     [&](const std::string& m) { notes[i].push_back(m); });
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (warn) {
    for (const auto& n : notes) {
      for (const auto& m : n) warn(m);
    }
  }
  return out;
}

}  // namespace condense::inline CONDENSE_PRECISION
