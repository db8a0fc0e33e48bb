#include "condense/abstractor/beam.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "condense/error.hpp"

namespace condense::inline CONDENSE_PRECISION {

using namespace nn;

std::vector<std::int32_t> Hypothesis::content() const {
  if (finished && !tokens.empty()) return {tokens.begin(), tokens.end() - 1};
  return tokens;
}

double Hypothesis::normalized() const {
  return tokens.empty() ? log_prob : log_prob / static_cast<double>(tokens.size());
}

namespace {

struct Live {
  Hypothesis hyp;
  LstmState state;
};

// Ranking order: finished first, then normalized score, then tokens.
bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.finished != b.finished) return a.finished;
  if (a.normalized() != b.normalized()) return a.normalized() > b.normalized();
  return a.tokens < b.tokens;
}

std::vector<double> log_probs(const Tensor& dist) {
  std::vector<double> out(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    out[i] = dist[i] > 0 ? std::log(static_cast<double>(dist[i]))
                         : -std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace

Hypothesis greedy_decode(const AbstractorModel& model, const EncodedSequence& source,
                         std::optional<CompressionLevel> level, std::size_t max_length) {
  Graph g(GradMode::kNone);
  const EncodedSource src = model.encode(g, source);
  LstmState state = src.initial;
  std::int32_t prev = Vocabulary::kBos;
  Hypothesis hyp;
  for (std::size_t t = 0; t < max_length; ++t) {
    const DecodeStep step = model.decode_step(g, src, state, prev, level);
    const Tensor& dist = step.dist.value();
    const auto best = static_cast<std::int32_t>(
        std::max_element(dist.data(), dist.data() + dist.size()) - dist.data());
    hyp.tokens.push_back(best);
    hyp.log_prob += std::log(static_cast<double>(dist[static_cast<std::size_t>(best)]));
    state = step.state;
    prev = best;
    if (best == Vocabulary::kEos) {
      hyp.finished = true;
      break;
    }
  }
  return hyp;
}

BeamResult diverse_beam_search(const AbstractorModel& model, const EncodedSequence& source,
                               const BeamConfig& config, std::optional<CompressionLevel> level) {
  if (config.beam == 0) throw ConfigError("beam size must be at least 1");
  if (config.groups == 0) throw ConfigError("diverse beam search needs at least one group");
  const std::size_t groups = std::min(config.groups, config.beam);

  Graph g(GradMode::kNone);
  const EncodedSource src = model.encode(g, source);

  std::vector<std::size_t> width(groups, config.beam / groups);
  for (std::size_t i = 0; i < config.beam % groups; ++i) ++width[i];

  std::vector<std::vector<Live>> alive(groups, {Live{Hypothesis{}, src.initial}});
  std::vector<std::vector<Hypothesis>> finished(groups);

  for (std::size_t t = 0; t < config.max_length; ++t) {
    std::map<std::int32_t, std::size_t> chosen;  // tokens picked by earlier groups at step t
    bool any = false;
    for (std::size_t gi = 0; gi < groups; ++gi) {
      if (alive[gi].empty() || finished[gi].size() >= width[gi]) continue;
      any = true;
      struct Expansion {
        double score;  // penalized, used for selection only
        double log_prob;
        std::size_t parent;
        std::int32_t token;
        LstmState state;
      };
      std::vector<Expansion> pool;
      for (std::size_t p = 0; p < alive[gi].size(); ++p) {
        const Live& live = alive[gi][p];
        const std::int32_t prev =
            live.hyp.tokens.empty() ? Vocabulary::kBos : live.hyp.tokens.back();
        const DecodeStep step = model.decode_step(g, src, live.state, prev, level);
        const auto lp = log_probs(step.dist.value());
        std::vector<std::int32_t> ids(lp.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int32_t>(i);
        const std::size_t keep = std::min(ids.size(), width[gi]);
        std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep), ids.end(),
                          [&](std::int32_t a, std::int32_t b) {
                            return lp[a] != lp[b] ? lp[a] > lp[b] : a < b;
                          });
        for (std::size_t rank = 0; rank < keep; ++rank) {
          const std::int32_t tok = ids[rank];
          const double base = live.hyp.log_prob + lp[tok];
          if (!std::isfinite(base)) continue;
          const auto it = chosen.find(tok);
          const double hamming = it == chosen.end() ? 0.0 : double(it->second);
          pool.push_back({base - config.penalty * (double(rank) + hamming), base, p, tok,
                          step.state});
        }
      }
      std::stable_sort(pool.begin(), pool.end(), [](const Expansion& a, const Expansion& b) {
        return a.score > b.score;
      });
      std::vector<Live> next;
      for (const Expansion& e : pool) {
        if (next.size() + finished[gi].size() >= width[gi]) break;
        Hypothesis h = alive[gi][e.parent].hyp;
        h.tokens.push_back(e.token);
        h.log_prob = e.log_prob;
        ++chosen[e.token];
        if (e.token == Vocabulary::kEos) {
          h.finished = true;
          finished[gi].push_back(std::move(h));
        } else {
          next.push_back(Live{std::move(h), e.state});
        }
      }
      alive[gi] = std::move(next);
    }
    if (!any) break;
  }

  BeamResult result;
  std::vector<Hypothesis> pool;
  for (const auto& f : finished) pool.insert(pool.end(), f.begin(), f.end());
  if (pool.empty()) {
    result.truncated = true;
    for (const auto& a : alive) {
      for (const Live& l : a) pool.push_back(l.hyp);
    }
  }
  std::sort(pool.begin(), pool.end(), better);
  for (Hypothesis& h : pool) {
    const bool seen = std::any_of(result.hypotheses.begin(), result.hypotheses.end(),
                                  [&](const Hypothesis& o) { return o.tokens == h.tokens; });
    if (!seen) result.hypotheses.push_back(std::move(h));
    if (result.hypotheses.size() == config.beam) break;
  }
  if (result.truncated && result.hypotheses.size() > 1) result.hypotheses.resize(1);
  return result;
}

}  // namespace condense::inline CONDENSE_PRECISION
