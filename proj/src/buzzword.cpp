#include "headlab/buzzword.hpp"

#include <algorithm>
#include <numeric>

#include "headlab/error.hpp"

namespace headlab {

FrequencyTable::FrequencyTable(TimeStep origin, int vocab_size) : origin_(origin), vocab_size_(vocab_size) {}

std::int64_t FrequencyTable::count(int step, int token_id) const {
  if (step < 0 || step >= num_steps()) return 0;
  return counts_[static_cast<std::size_t>(step)][static_cast<std::size_t>(token_id)];
}

std::int64_t FrequencyTable::total(int step) const {
  if (step < 0 || step >= num_steps()) return 0;
  return totals_[static_cast<std::size_t>(step)];
}

void FrequencyTable::add(int step, int token_id, std::int64_t n) {
  if (step < 0) throw Error("FrequencyTable: negative step");
  if (token_id < 0 || token_id >= vocab_size_) throw Error("FrequencyTable: token id out of range");
  if (step >= num_steps()) {
    counts_.resize(static_cast<std::size_t>(step) + 1, std::vector<std::int64_t>(static_cast<std::size_t>(vocab_size_), 0));
    totals_.resize(static_cast<std::size_t>(step) + 1, 0);
  }
  counts_[static_cast<std::size_t>(step)][static_cast<std::size_t>(token_id)] += n;
  totals_[static_cast<std::size_t>(step)] += n;
}

FrequencyTable count_frequencies(const Corpus& corpus, const Vocabulary& vocab, TimeStep origin) {
  FrequencyTable table(origin, vocab.size());
  for (const auto& [step, posts] : corpus.by_step()) {
    if (step < origin) continue;
    for (const std::size_t i : posts) {
      for (const auto& tok : tokenize(corpus.posts()[i].headline)) {
        if (const auto id = vocab.find(tok); id && *id >= kFirstRegularId) table.add(step - origin, *id);
      }
    }
  }
  return table;
}

FrequencyTable count_frequencies(const Corpus& corpus, const Vocabulary& vocab) {
  const TimeStep origin = corpus.by_step().empty() ? 0 : corpus.by_step().begin()->first;
  return count_frequencies(corpus, vocab, origin);
}

std::string_view stage_name(BuzzStage s) {
  switch (s) {
    case BuzzStage::ratio1:
      return "ratio1";
    case BuzzStage::ratio3:
      return "ratio3";
    case BuzzStage::ratio6:
      return "ratio6";
    case BuzzStage::fill:
      return "fill";
  }
  return "?";
}

BuzzStage parse_stage(std::string_view s) {
  for (auto st : {BuzzStage::ratio1, BuzzStage::ratio3, BuzzStage::ratio6, BuzzStage::fill}) {
    if (stage_name(st) == s) return st;
  }
  throw Error("unknown buzzword stage '" + std::string(s) + "'");
}

namespace {

std::int64_t window_sum(const FrequencyTable& t, int token, int from, int to) {
  std::int64_t s = 0;
  for (int x = from; x <= to; ++x) s += t.count(x, token);
  return s;
}

struct Ranked {
  int id;
  double score;
};

void take_best(std::vector<Ranked> ranked, std::size_t quota, BuzzStage stage, const Vocabulary& vocab,
               std::size_t cap, std::vector<bool>& present, BuzzwordList& out) {
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  std::size_t added = 0;
  for (const Ranked& r : ranked) {
    if (added == quota || out.entries.size() >= cap) break;
    if (present[static_cast<std::size_t>(r.id)]) continue;
    present[static_cast<std::size_t>(r.id)] = true;
    out.entries.push_back({r.id, vocab.token(r.id), stage, r.score});
    ++added;
  }
}

}  // namespace

BuzzwordList generate_buzzwords(const FrequencyTable& table, const Vocabulary& vocab, int step,
                                const BuzzwordQuotas& quotas) {
  BuzzwordList out;
  out.step = step;
  if (step < 1) return out;
  if (table.vocab_size() != vocab.size()) throw Error("generate_buzzwords: table and vocabulary disagree");

  const double eps = quotas.smoothing;
  std::vector<bool> present(static_cast<std::size_t>(vocab.size()), false);
  const auto ratio_stage = [&](int min_step, int span, std::size_t quota, BuzzStage stage) {
    if (step < min_step) return;
    std::vector<Ranked> ranked;
    ranked.reserve(static_cast<std::size_t>(vocab.regular_size()));
    for (int id = kFirstRegularId; id < vocab.size(); ++id) {
      const auto recent = window_sum(table, id, step - span, step - 1);
      const auto older = window_sum(table, id, step - 2 * span, step - span - 1);
      ranked.push_back({id, (static_cast<double>(recent) + eps) / (static_cast<double>(older) + eps)});
    }
    take_best(std::move(ranked), quota, stage, vocab, quotas.cap, present, out);
  };
  ratio_stage(2, 1, quotas.ratio1, BuzzStage::ratio1);
  ratio_stage(6, 3, quotas.ratio3, BuzzStage::ratio3);
  ratio_stage(12, 6, quotas.ratio6, BuzzStage::ratio6);

  std::vector<Ranked> by_tf;
  by_tf.reserve(static_cast<std::size_t>(vocab.regular_size()));
  for (int id = kFirstRegularId; id < vocab.size(); ++id) {
    by_tf.push_back({id, static_cast<double>(table.count(step - 1, id))});
  }
  take_best(std::move(by_tf), quotas.cap, BuzzStage::fill, vocab, quotas.cap, present, out);
  return out;
}

TokenSeq build_trend_text(const BuzzwordList& list, std::size_t max_tokens) {
  TokenSeq out;
  for (const auto& e : list.entries) {
    if (out.size() >= max_tokens) break;
    out.push_back(e.token);
  }
  return out;
}

nlohmann::ordered_json to_json(const BuzzwordList& list) {
  nlohmann::ordered_json j;
  j["step"] = list.step;
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : list.entries) {
    nlohmann::ordered_json je;
    je["token"] = e.token;
    je["id"] = e.token_id;
    je["stage"] = stage_name(e.stage);
    je["score"] = e.score;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  return j;
}

BuzzwordList buzzwords_from_json(const nlohmann::json& j) {
  BuzzwordList out;
  try {
    out.step = j.at("step").get<int>();
    for (const auto& je : j.at("entries")) {
      BuzzEntry e;
      e.token = je.at("token").get<std::string>();
      e.token_id = je.value("id", 0);
      e.stage = parse_stage(je.at("stage").get<std::string>());
      e.score = je.at("score").get<double>();
      out.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed buzzword file: ") + e.what());
  }
  return out;
}

}  // namespace headlab
