#include "headlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "headlab/buzzword.hpp"
#include "headlab/checkpoint.hpp"
#include "headlab/config.hpp"
#include "headlab/corpus.hpp"
#include "headlab/error.hpp"
#include "headlab/generate.hpp"
#include "headlab/io.hpp"
#include "headlab/observation.hpp"
#include "headlab/rouge.hpp"
#include "headlab/similarity.hpp"
#include "headlab/synth.hpp"
#include "headlab/training.hpp"
#include "headlab/vocab.hpp"

namespace headlab {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr std::int64_t kSecondsPerDay = 86400;

std::string fmt_double(double x) {
  if (std::isnan(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Doubles go into JSON as null when not finite.
ojson json_number(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

void write_json(const fs::path& path, const ojson& j) { write_file_atomic(path, j.dump(2) + "\n"); }

struct CsvRow {
  std::string label;
  double mean;
  std::size_t count;
  double stderr_of_mean;
};

void write_summary_csv(const fs::path& path, const std::vector<CsvRow>& rows) {
  std::string s = "label,mean,count,stderr\n";
  for (const auto& r : rows) {
    // An empty group has no mean.
    const bool empty = r.count == 0;
    s += r.label + "," + (empty ? "" : fmt_double(r.mean)) + "," + std::to_string(r.count) + "," +
         (empty ? "" : fmt_double(r.stderr_of_mean)) + "\n";
  }
  write_file_atomic(path, s);
}

void write_metrics_csv(const fs::path& path, const RunResult& r) {
  std::string s = "step,loss,lr,val_metric\n";
  for (const auto& row : r.log) {
    s += std::to_string(row.step) + "," + fmt_double(row.loss) + "," + fmt_double(row.lr) + "," +
         fmt_double(row.val_metric) + "\n";
  }
  write_file_atomic(path, s);
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

Corpus load_corpus(const fs::path& path, std::int64_t min_likes, bool require_prior) {
  Corpus c = ingest(path);
  if (min_likes > 0 || require_prior) c = filter_posts(c, min_likes, require_prior);
  return c;
}

std::string psi_label(const PsiGroup& g, bool last) {
  std::ostringstream s;
  s.precision(1);
  s << std::fixed << "[" << g.lo << "," << g.hi << (last ? "]" : ")");
  return s.str();
}

ojson rouge_json(const RougeScore& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
}

std::vector<std::pair<std::string, std::string>> read_id_headlines(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.emplace_back(j.at("id").get<std::string>(), j.at("headline").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, path.string() + ": " + e.what());
    }
  }
  return out;
}

Corpus merge_corpora(const Corpus& a, const Corpus& b) {
  std::vector<Post> posts(a.posts().begin(), a.posts().end());
  posts.insert(posts.end(), b.posts().begin(), b.posts().end());
  return Corpus(std::move(posts));
}

ojson limits_json(const DataConfig& d) {
  return {{"article_max", d.article_max}, {"style_max", d.style_max}, {"trend_max", d.trend_max},
          {"headline_max", d.headline_max}};
}

// ---------------------------------------------------------------- subcommands

struct IngestArgs {
  std::string input, out, boundary;
  std::int64_t min_likes = 0;
  bool require_prior = false;
  std::uint64_t seed = 0;
  double val_fraction = 0.5;
  double test_fraction = 0.5;
};

void cmd_ingest(const IngestArgs& a, std::ostream& out) {
  if (a.min_likes < 0) throw Error("--min-likes must be >= 0");
  const Corpus raw = ingest(a.input);
  const Corpus filtered = filter_posts(raw, a.min_likes, a.require_prior);
  SplitSpec spec;
  spec.boundary = parse_iso_date(a.boundary);
  spec.validation_fraction = a.val_fraction;
  spec.test_fraction = a.test_fraction;
  spec.seed = a.seed;
  const CorpusSplit parts = split(filtered, spec);
  const fs::path dir(a.out);
  write_file_atomic(dir / "train.jsonl", to_jsonl(parts.train));
  write_file_atomic(dir / "val.jsonl", to_jsonl(parts.validation));
  write_file_atomic(dir / "test.jsonl", to_jsonl(parts.test));

  std::map<std::size_t, std::size_t> histogram;
  for (const auto& [user, idx] : filtered.by_user()) ++histogram[idx.size()];
  ojson hist = ojson::object();
  for (const auto& [n, users] : histogram) hist[std::to_string(n)] = users;
  ojson stats;
  stats["format_version"] = kReportFormatVersion;
  stats["counts"] = {{"input", raw.size()},       {"filtered", filtered.size()},
                     {"train", parts.train.size()}, {"validation", parts.validation.size()},
                     {"test", parts.test.size()}};
  stats["users"] = filtered.by_user().size();
  stats["posts_per_user"] = hist;
  write_json(dir / "stats.json", stats);
  out << "ingested " << raw.size() << " posts, kept " << filtered.size() << " (train " << parts.train.size()
      << ", val " << parts.validation.size() << ", test " << parts.test.size() << ")\n";
}

struct ObserveArgs {
  std::string corpus, out, metric = "jaccard", window_end;
  std::uint64_t seed = 3407;
  std::int64_t min_likes = 0;
  bool require_prior = false;
  unsigned threads = 1;
  // trends
  int window_days = 10;
  std::size_t n_observed = 50000;
  int seasons = 5;
  int season_days = 90;
  std::size_t per_season = 500;
  // style
  std::size_t pairs = 1000000;
  std::size_t per_user = 20;
};

void cmd_observe_trends(const ObserveArgs& a, std::ostream& out) {
  const Corpus corpus = load_corpus(a.corpus, a.min_likes, a.require_prior);
  if (corpus.empty()) throw Error("observe: corpus is empty");
  const SimilarityMetric metric = SimilarityMetric::parse(a.metric);
  SeasonSpec spec;
  if (a.window_end.empty()) {
    std::int64_t last = 0;
    for (const auto& p : corpus.posts()) last = std::max(last, p.timestamp);
    spec.window_end = last + 1;
  } else {
    spec.window_end = parse_iso_date(a.window_end);
  }
  if (a.window_days < 1) throw Error("--window-days must be >= 1");
  spec.window_start = spec.window_end - a.window_days * kSecondsPerDay;
  spec.n_observed = a.n_observed;
  spec.seasons = a.seasons;
  spec.season_length_days = a.season_days;
  spec.per_season_sample = a.per_season;
  spec.seed = a.seed;
  const TrendReport r = trend_likes_study(corpus, spec, metric, resolve_threads(a.threads));

  std::vector<CsvRow> sim_rows;
  std::vector<CsvRow> like_rows;
  ojson seasons = ojson::array();
  for (std::size_t k = 0; k < r.similarity.size(); ++k) {
    const auto& s = r.similarity[k];
    const auto& l = r.likes[k];
    const std::string label = "season_" + std::to_string(s.season);
    sim_rows.push_back({label, s.mean, s.pairs, s.stderr_of_mean});
    like_rows.push_back({label, l.mean_likes, l.count, l.stderr_of_mean});
    seasons.push_back({{"season", s.season},
                       {"start", s.start},
                       {"end", s.end},
                       {"mean_similarity", s.mean},
                       {"pairs", s.pairs},
                       {"group_size", l.count},
                       {"group_mean_likes", json_number(l.mean_likes)}});
  }
  const fs::path dir(a.out);
  write_summary_csv(dir / "trend_similarity.csv", sim_rows);
  write_summary_csv(dir / "trend_likes.csv", like_rows);
  ojson summary;
  summary["format_version"] = kReportFormatVersion;
  summary["metric"] = metric.name();
  summary["seed"] = a.seed;
  summary["window"] = {{"start", spec.window_start}, {"end", spec.window_end}};
  summary["observed"] = r.observed;
  summary["seasons"] = seasons;
  write_json(dir / "trends.json", summary);
  out << "trend study over " << r.observed << " observed headlines, " << r.similarity.size() << " seasons\n";
}

void cmd_observe_style(const ObserveArgs& a, std::ostream& out) {
  const Corpus corpus = load_corpus(a.corpus, a.min_likes, a.require_prior);
  const SimilarityMetric metric = SimilarityMetric::parse(a.metric);
  const StyleReport pairs = style_pair_study(corpus, a.pairs, metric, a.seed, resolve_threads(a.threads));
  const StyleReport groups = psi_popularity_study(corpus, a.per_user, metric);
  const fs::path dir(a.out);
  write_summary_csv(dir / "style_pairs.csv", {{"same_user", pairs.same_user_mean_sim, pairs.pair_count, pairs.same_user_stderr},
                                              {"diff_user", pairs.diff_user_mean_sim, pairs.pair_count, pairs.diff_user_stderr}});
  std::vector<CsvRow> rows;
  ojson jgroups = ojson::array();
  for (std::size_t i = 0; i < groups.psi_groups.size(); ++i) {
    const auto& g = groups.psi_groups[i];
    const std::string label = psi_label(g, i + 1 == groups.psi_groups.size());
    rows.push_back({label, g.mean_pi, g.users, g.stderr_of_mean});
    jgroups.push_back({{"label", label}, {"users", g.users}, {"mean_pi", json_number(g.mean_pi)}, {"stderr", g.stderr_of_mean}});
  }
  write_summary_csv(dir / "psi_groups.csv", rows);
  ojson summary;
  summary["format_version"] = kReportFormatVersion;
  summary["metric"] = metric.name();
  summary["seed"] = a.seed;
  summary["pairs"] = {{"count", pairs.pair_count},
                      {"same_user_mean", pairs.same_user_mean_sim},
                      {"diff_user_mean", pairs.diff_user_mean_sim},
                      {"same_user_stderr", pairs.same_user_stderr},
                      {"diff_user_stderr", pairs.diff_user_stderr}};
  summary["headlines_per_user"] = a.per_user;
  summary["eligible_users"] = groups.users.size();
  summary["overall_pi"] = groups.overall_pi;
  summary["psi_groups"] = jgroups;
  write_json(dir / "style.json", summary);
  out << "style study: same-user " << fmt_double(pairs.same_user_mean_sim) << ", diff-user "
      << fmt_double(pairs.diff_user_mean_sim) << ", " << groups.users.size() << " users grouped\n";
}

struct BuzzArgs {
  std::string corpus, vocab_corpus, out;
  int step = 0;
  std::int64_t tf_min = 10;
  double tf_max = 0.01;
  BuzzwordQuotas quotas;
};

void cmd_buzzwords(const BuzzArgs& a, std::ostream& out) {
  const Corpus corpus = ingest(a.corpus);
  const Vocabulary vocab = a.vocab_corpus.empty() ? build_vocab(corpus, a.tf_min, a.tf_max)
                                                  : build_vocab(ingest(a.vocab_corpus), a.tf_min, a.tf_max);
  const FrequencyTable table = count_frequencies(corpus, vocab);
  const BuzzwordList list = generate_buzzwords(table, vocab, a.step, a.quotas);
  write_json(a.out, to_json(list));
  out << "step " << a.step << ": " << list.entries.size() << " buzzwords\n";
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> sets;
};

Settings load_settings(const TrainArgs& a) {
  Settings s = Settings::from_ini_file(a.config);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("--set expects key=value, got '" + kv + "'");
    s.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return s;
}

struct Prepared {
  RunConfig rc;
  Vocabulary vocab;
  std::vector<Example> train;
  std::vector<Example> validation;
  std::optional<Checkpoint> init;
};

Prepared prepare(const TrainArgs& a) {
  Prepared p;
  const Settings settings = load_settings(a);
  p.rc = run_config_from(settings, fs::path(a.config).parent_path());
  const Corpus train = ingest(p.rc.train);
  const Corpus validation = p.rc.validation.empty() ? Corpus{} : ingest(p.rc.validation);
  const Corpus history = p.rc.history.empty() ? merge_corpora(train, validation) : ingest(p.rc.history);
  if (!p.rc.init_checkpoint.empty()) {
    p.init = load_checkpoint(p.rc.init_checkpoint);
    p.vocab = p.init->vocab;
  } else {
    p.vocab = build_generation_vocab(train, p.rc.data);
  }
  TrendIndex trends(history, build_vocab(train, p.rc.data.buzz_tf_min, p.rc.data.buzz_tf_max), p.rc.data.quotas);
  p.train = make_examples(train, history, p.vocab, trends, p.rc.data);
  p.validation = make_examples(validation, history, p.vocab, trends, p.rc.data);
  if (p.train.empty()) throw Error("no usable training examples in " + p.rc.train.string());
  return p;
}

Model make_model(Prepared& p) {
  if (p.init) return instantiate(*p.init);
  ModelConfig mc = p.rc.model;
  mc.vocab_size = p.vocab.size();
  return Model(mc);
}

void finish_run(const char* stem, Model& model, const Prepared& p, const RunResult& r, std::ostream& out) {
  restore(model, r.best);
  const fs::path dir = p.rc.output_dir;
  save_checkpoint(dir / (std::string(stem) + ".ckpt"), model, p.vocab, {{"limits", limits_json(p.rc.data)}});
  write_metrics_csv(dir / (std::string(stem) + "_metrics.csv"), r);
  ojson summary;
  summary["format_version"] = kReportFormatVersion;
  summary["steps"] = r.steps;
  summary["best_step"] = r.best_step;
  summary["best_metric"] = json_number(r.best_metric);
  summary["final_loss"] = r.log.empty() ? ojson(nullptr) : json_number(r.log.back().loss);
  summary["train_examples"] = p.train.size();
  summary["validation_examples"] = p.validation.size();
  summary["vocab_size"] = p.vocab.size();
  write_json(dir / (std::string(stem) + ".json"), summary);
  out << stem << ": " << r.steps << " steps, best step " << r.best_step << ", final loss "
      << (r.log.empty() ? std::string("n/a") : fmt_double(r.log.back().loss)) << "\n";
}

void cmd_pretrain(const TrainArgs& a, std::ostream& out) {
  Prepared p = prepare(a);
  Model model = make_model(p);
  const RunResult r = run_pretraining(model, p.train, p.validation, p.rc.train_cfg, p.rc.corruption);
  finish_run("pretrain", model, p, r, out);
}

void cmd_train(const TrainArgs& a, std::ostream& out) {
  Prepared p = prepare(a);
  Model model = make_model(p);
  const RunResult r = run_training(model, p.train, p.validation, p.rc.train_cfg, p.vocab, p.rc.generation);
  finish_run("model", model, p, r, out);
}

struct GenerateArgs {
  std::string checkpoint, corpus, buzzwords, post, out;
  GenerationConfig gen;
  std::size_t top_k = 1;
};

void cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const Model model = instantiate(ck);
  const Corpus corpus = ingest(a.corpus);
  BuzzwordList buzz;
  try {
    buzz = buzzwords_from_json(nlohmann::json::parse(read_file(a.buzzwords)));
  } catch (const nlohmann::json::exception& e) {
    throw Error("buzzwords file " + a.buzzwords + ": " + e.what());
  }
  InputLimits limits;
  if (ck.meta.contains("limits")) {
    const auto& l = ck.meta["limits"];
    limits.article_max = l.value("article_max", limits.article_max);
    limits.style_max = l.value("style_max", limits.style_max);
    limits.trend_max = l.value("trend_max", limits.trend_max);
  }
  if (a.top_k < 1) throw Error("--top-k must be >= 1");
  const auto cands = generate_for_post(model, ck.vocab, corpus, buzz, a.post, a.gen, limits, a.top_k);
  ojson j;
  j["post"] = a.post;
  j["candidates"] = ojson::array();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& c = cands[i];
    ojson toks = ojson::array();
    for (int id : strip_eos(c.hypothesis, a.gen.eos_id)) toks.push_back(ck.vocab.token(id));
    j["candidates"].push_back({{"rank", i + 1},
                               {"headline", c.text},
                               {"score", json_number(c.hypothesis.score)},
                               {"log_prob", json_number(c.hypothesis.raw)},
                               {"tokens", toks},
                               {"ended_with_eos", c.hypothesis.ends_with_eos(a.gen.eos_id)}});
  }
  const std::string text = j.dump(2) + "\n";
  if (!a.out.empty()) write_file_atomic(a.out, text);
  out << text;
}

struct EvaluateArgs {
  std::string candidates, references, out;
};

void cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto cands = read_id_headlines(a.candidates);
  std::map<std::string, std::string> refs;
  for (auto& [id, h] : read_id_headlines(a.references)) {
    if (!refs.emplace(id, h).second) throw Error("duplicate reference id '" + id + "'");
  }
  std::vector<std::pair<TokenSeq, TokenSeq>> pairs;
  for (const auto& [id, h] : cands) {
    const auto it = refs.find(id);
    if (it == refs.end()) throw Error("candidate id '" + id + "' has no reference");
    pairs.emplace_back(tokenize(h), tokenize(it->second));
  }
  const CorpusRouge r = corpus_rouge(pairs);
  ojson j;
  j["format_version"] = kReportFormatVersion;
  j["pairs"] = r.pairs;
  j["rouge1"] = rouge_json(r.rouge1);
  j["rouge2"] = rouge_json(r.rouge2);
  j["rougeL"] = rouge_json(r.rougeL);
  write_json(a.out, j);
  out << "ROUGE-1/2/L F1 " << fmt_double(r.rouge1.f1) << " " << fmt_double(r.rouge2.f1) << " "
      << fmt_double(r.rougeL.f1) << " over " << r.pairs << " pairs\n";
}

struct SynthArgs {
  std::string out, start;
  SynthConfig cfg;
};

void cmd_synth(SynthArgs a, std::ostream& out) {
  if (!a.start.empty()) a.cfg.start = parse_iso_date(a.start);
  const SynthResult r = synth_corpus(a.cfg);
  const fs::path dir(a.out);
  write_file_atomic(dir / "corpus.jsonl", to_jsonl(r.corpus));
  write_json(dir / "truth.json", to_json(r.truth));
  out << "wrote " << r.corpus.size() << " posts by " << r.corpus.by_user().size() << " users\n";
}

struct SimArgs {
  std::string metric = "jaccard", a, b;
};

void cmd_sim(const SimArgs& s, std::ostream& out) {
  const SimilarityMetric m = SimilarityMetric::parse(s.metric);
  out << fmt_double(m(tokenize(s.a), tokenize(s.b))) << "\n";
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"headlab: headline corpus analytics and a miniature personalised headline generator", "headlab"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print build and format versions");

  IngestArgs ingest_args;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate, filter and split a JSONL corpus");
  ingest_cmd->add_option("--input", ingest_args.input, "Corpus JSONL")->required();
  ingest_cmd->add_option("--out", ingest_args.out, "Output directory")->required();
  ingest_cmd->add_option("--boundary", ingest_args.boundary, "ISO date; earlier posts go to train")->required();
  ingest_cmd->add_option("--min-likes", ingest_args.min_likes, "Drop posts with fewer likes");
  ingest_cmd->add_flag("--require-prior-post", ingest_args.require_prior, "Drop posts whose user has no earlier post");
  ingest_cmd->add_option("--seed", ingest_args.seed, "Seed for the validation/test partition");
  ingest_cmd->add_option("--val-fraction", ingest_args.val_fraction, "Share of post-boundary posts for validation");
  ingest_cmd->add_option("--test-fraction", ingest_args.test_fraction, "Share of post-boundary posts for test");

  ObserveArgs obs;
  auto* observe_cmd = app.add_subcommand("observe", "Trend and style observation studies");
  observe_cmd->require_subcommand(1);
  auto add_common = [&obs](CLI::App* c) {
    c->add_option("--corpus", obs.corpus, "Corpus JSONL")->required();
    c->add_option("--out", obs.out, "Output directory")->required();
    c->add_option("--metric", obs.metric, "jaccard | lcs | cosine | ngram | ngram:<n>");
    c->add_option("--seed", obs.seed, "Sampling seed");
    c->add_option("--min-likes", obs.min_likes, "Filter posts before the study");
    c->add_flag("--require-prior-post", obs.require_prior, "Filter posts whose user has no earlier post");
    c->add_option("--threads", obs.threads, "Worker threads (0: all cores)");
  };
  auto* trends_cmd = observe_cmd->add_subcommand("trends", "Season similarity and likes by most similar season");
  add_common(trends_cmd);
  trends_cmd->add_option("--window-end", obs.window_end, "ISO date ending the observation window (default: after the last post)");
  trends_cmd->add_option("--window-days", obs.window_days, "Observation window length in days");
  trends_cmd->add_option("--n-observed", obs.n_observed, "Headlines sampled from the observation window");
  trends_cmd->add_option("--seasons", obs.seasons, "Number of seasons");
  trends_cmd->add_option("--season-days", obs.season_days, "Season length in days");
  trends_cmd->add_option("--per-season", obs.per_season, "Headlines sampled per season");
  auto* style_cmd = observe_cmd->add_subcommand("style", "Same- vs different-user similarity and PSI groups");
  add_common(style_cmd);
  style_cmd->add_option("--pairs", obs.pairs, "Pairs sampled of each kind");
  style_cmd->add_option("--per-user", obs.per_user, "Latest headlines per user for PSI");

  BuzzArgs buzz;
  auto* buzz_cmd = app.add_subcommand("buzzwords", "Buzzword list for one time step");
  buzz_cmd->add_option("--corpus", buzz.corpus, "Corpus JSONL")->required();
  buzz_cmd->add_option("--step", buzz.step, "Time step, in months after the corpus' first month")->required();
  buzz_cmd->add_option("--out", buzz.out, "Output JSON")->required();
  buzz_cmd->add_option("--vocab-corpus", buzz.vocab_corpus, "Corpus the vocabulary is built from (default: --corpus)");
  buzz_cmd->add_option("--tf-min", buzz.tf_min, "Minimum token count");
  buzz_cmd->add_option("--tf-max", buzz.tf_max, "Maximum relative token frequency");
  buzz_cmd->add_option("--ratio1", buzz.quotas.ratio1, "Stage-1 quota");
  buzz_cmd->add_option("--ratio3", buzz.quotas.ratio3, "Stage-2 quota");
  buzz_cmd->add_option("--ratio6", buzz.quotas.ratio6, "Stage-3 quota");
  buzz_cmd->add_option("--cap", buzz.quotas.cap, "List size cap");

  TrainArgs pre_args;
  auto* pretrain_cmd = app.add_subcommand("pretrain", "Pretrain the style and trend extractors");
  pretrain_cmd->add_option("--config", pre_args.config, "INI config")->required();
  pretrain_cmd->add_option("--set", pre_args.sets, "Override a config key (section.key=value)");
  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train the generator");
  train_cmd->add_option("--config", train_args.config, "INI config")->required();
  train_cmd->add_option("--set", train_args.sets, "Override a config key (section.key=value)");

  GenerateArgs gen;
  auto* generate_cmd = app.add_subcommand("generate", "Generate headline candidates for one post");
  generate_cmd->add_option("--checkpoint", gen.checkpoint, "Model checkpoint")->required();
  generate_cmd->add_option("--corpus", gen.corpus, "Corpus holding the post and its user's history")->required();
  generate_cmd->add_option("--buzzwords", gen.buzzwords, "Buzzword JSON for the post's time step")->required();
  generate_cmd->add_option("--post", gen.post, "Post id")->required();
  generate_cmd->add_option("--beam", gen.gen.beam_size, "Beam size");
  generate_cmd->add_option("--max-len", gen.gen.max_length, "Maximum generated tokens, eos excluded");
  generate_cmd->add_option("--alpha", gen.gen.length_alpha, "Length penalty exponent");
  generate_cmd->add_option("--beta", gen.gen.coverage_beta, "Coverage penalty weight");
  generate_cmd->add_option("--top-k", gen.top_k, "Candidates to print");
  generate_cmd->add_option("--out", gen.out, "Also write the JSON here");

  EvaluateArgs eval;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "ROUGE-1/2/L of candidates against references");
  evaluate_cmd->add_option("--candidates", eval.candidates, "JSONL with id and headline")->required();
  evaluate_cmd->add_option("--references", eval.references, "JSONL with id and headline")->required();
  evaluate_cmd->add_option("--out", eval.out, "Output JSON")->required();

  SynthArgs syn;
  auto* synth_cmd = app.add_subcommand("synth", "Write the seeded synthetic corpus");
  synth_cmd->add_option("--seed", syn.cfg.seed, "Generator seed");
  synth_cmd->add_option("--out", syn.out, "Output directory")->required();
  synth_cmd->add_option("--users", syn.cfg.n_users, "Number of users");
  synth_cmd->add_option("--posts", syn.cfg.n_posts, "Number of posts");
  synth_cmd->add_option("--months", syn.cfg.months, "Months covered");
  synth_cmd->add_option("--start", syn.start, "ISO start date");
  synth_cmd->add_option("--style-rate", syn.cfg.style_rate, "Probability a headline carries its user's signature token");
  synth_cmd->add_option("--ramp-rate", syn.cfg.ramp_rate, "Peak probability of the quarter's ramping token");

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim", "Similarity of two texts");
  sim_cmd->add_option("--metric", sim.metric, "jaccard | lcs | cosine | ngram | ngram:<n>");
  sim_cmd->add_option("--a", sim.a, "First text")->required();
  sim_cmd->add_option("--b", sim.b, "Second text")->required();

  if (args.empty()) {
    err << app.help();
    return 2;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[usage]: " << one_line(e.what()) << "\n";
    return 2;
  }

  if (show_version) {
    out << "headlab " << kVersion << "\ncheckpoint-format " << kCheckpointVersion << "\nreport-format "
        << kReportFormatVersion << "\n";
    return 0;
  }

  try {
    if (ingest_cmd->parsed()) {
      cmd_ingest(ingest_args, out);
    } else if (trends_cmd->parsed()) {
      cmd_observe_trends(obs, out);
    } else if (style_cmd->parsed()) {
      cmd_observe_style(obs, out);
    } else if (buzz_cmd->parsed()) {
      cmd_buzzwords(buzz, out);
    } else if (pretrain_cmd->parsed()) {
      cmd_pretrain(pre_args, out);
    } else if (train_cmd->parsed()) {
      cmd_train(train_args, out);
    } else if (generate_cmd->parsed()) {
      cmd_generate(gen, out);
    } else if (evaluate_cmd->parsed()) {
      cmd_evaluate(eval, out);
    } else if (synth_cmd->parsed()) {
      cmd_synth(syn, out);
    } else if (sim_cmd->parsed()) {
      cmd_sim(sim, out);
    } else {
      err << app.help();
      return 2;
    }
  } catch (const InputError& e) {
    err << "error[input]: " << one_line(e.what()) << "\n";
    return 1;
  } catch (const ConfigError& e) {
    err << "error[config]: " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error[runtime]: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace headlab
