/*
 * Copyright 2026 The sampler-smith Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Command-line front end. `run_cli` parses one subcommand, validates every
// knob, runs it and writes its outputs under `--out`. Each output file starts
// with a comment header (version, command, seed, resolved options).
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error. Errors go
// to the error stream as `ERR:<code>:<message>`.

#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sampler_smith/acceptance.hpp"
#include "sampler_smith/compiled.hpp"
#include "sampler_smith/corpus.hpp"
#include "sampler_smith/grammar.hpp"
#include "sampler_smith/lg/pipeline.hpp"
#include "sampler_smith/parallel.hpp"
#include "sampler_smith/score.hpp"
#include "sampler_smith/synthesis.hpp"
#include "sampler_smith/syntax.hpp"
#include "sampler_smith/typecheck.hpp"
#include "sampler_smith/version.hpp"

namespace sampler_smith::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr const char* kSeedEnv = "SAMPLER_SMITH_SEED";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest text that reads back to the same double.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& columns) { add(columns); }
  void add(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + csv_cell(cells[i]);
    text_ += "\n";
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

// ---------------------------------------------------------------------------
// Option values shared by the subcommands. Only the options registered on the
// chosen subcommand are read.

struct Options {
  std::optional<uint64_t> seed;
  int jobs = 1;
  std::string out = ".";
  std::string config;

  // Grammar weights.
  std::string weights;
  std::string holdout;
  std::string corpus_dir;
  double alpha = 1.0;
  int max_depth = 10;

  // Scoring.
  std::string target;
  std::string program;
  int draws = 100;
  int recursion_cap = 10;
  long fuel = 10000;

  int count = 10;
  int bins = 20;

  long iterations = 1000;
  int chains = 1;
  std::string init;

  GpConfig gp;

  bool toy = false;
  double epsilon = 0.1;
  long max_draws = 10000;

  // Linear-Gaussian flows.
  std::string train = "step";
  std::string test = "all";
  std::string kind = "square";
  double offset = 0.0;
  double noise = 0.1;
  std::string episodes;
  std::string episode;
  int particles = 100;
  int train_particles = 100;
  int test_particles = 10;
  int repeats = 5;
  std::string proposal = "prior";
  std::string network;
  double mix = 0.7;
  lg::TrainConfig training;

  std::string only;
};

// ---------------------------------------------------------------------------
// Run context and output files.

class Run {
 public:
  Run(std::string command, nlohmann::json config, std::optional<uint64_t> seed, std::filesystem::path out_dir,
      std::ostream& out)
      : command_(std::move(command)), config_(std::move(config)), seed_(seed), dir_(std::move(out_dir)), out_(out) {}

  const std::string& command() const { return command_; }
  uint64_t seed() const { return *seed_; }
  std::ostream& out() const { return out_; }

  std::string header(const std::string& prefix) const {
    std::string h = prefix + " sampler-smith " + kVersion + "\n";
    h += prefix + " command: " + command_ + "\n";
    h += prefix + " seed: " + (seed_ ? std::to_string(*seed_) : std::string("none")) + "\n";
    h += prefix + " config: " + config_.dump() + "\n";
    return h;
  }

  nlohmann::json meta() const {
    return {{"version", kVersion},
            {"command", command_},
            {"seed", seed_ ? nlohmann::json(*seed_) : nlohmann::json(nullptr)},
            {"config", config_}};
  }

  void write(const std::string& name, const std::string& prefix, const std::string& body) const {
    write_raw(name, header(prefix) + body);
  }
  void write_csv(const std::string& name, const Csv& csv) const { write(name, "#", csv.text()); }
  void write_json(const std::string& name, nlohmann::json body) const {
    nlohmann::json j = {{"meta", meta()}};
    j.update(body);
    write_raw(name, j.dump(2) + "\n");
  }

 private:
  void write_raw(const std::string& name, const std::string& text) const {
    std::filesystem::create_directories(dir_);
    const auto path = dir_ / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
    out_ << "wrote " << path.string() << "\n";
  }

  std::string command_;
  nlohmann::json config_;
  std::optional<uint64_t> seed_;
  std::filesystem::path dir_;
  std::ostream& out_;
};

// ---------------------------------------------------------------------------
// Input resolution. Anything wrong with an input is a configuration error.

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!(item = sampler_smith::detail::trim(item)).empty()) out.push_back(item);
  return out;
}

inline std::string read_input(const std::string& path, const std::string& what) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError(what + " file not found: " + path);
  return read_text_file(path);
}

// Inline text when it starts like the expected syntax, else a file path.
inline std::string text_or_file(const std::string& s, char opener, const std::string& what) {
  const auto first = s.find_first_not_of(" \t\n");
  if (first != std::string::npos && s[first] == opener) return s;
  return read_input(s, what);
}

inline nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

inline std::vector<CorpusEntry> corpus_for(const Options& o) {
  if (o.corpus_dir.empty()) return load_corpus();
  if (!std::filesystem::is_directory(o.corpus_dir)) throw ConfigError("corpus directory not found: " + o.corpus_dir);
  return load_corpus_dir(o.corpus_dir);
}

inline RuleWeights weights_for(const Options& o) {
  if (!o.weights.empty()) {
    const auto j = parse_json(read_input(o.weights, "weights"), "weights " + o.weights);
    try {
      RuleWeights w = rule_weights_from_json(j);
      validate(w);
      return w;
    } catch (const std::exception& e) {
      throw ConfigError("weights " + o.weights + ": " + e.what());
    }
  }
  if (!(o.alpha > 0.0)) throw ConfigError("--alpha must be > 0");
  if (o.max_depth < 0) throw ConfigError("--max-depth must be >= 0");
  const auto corpus = corpus_for(o);
  try {
    return estimate_weights(corpus, o.alpha, split_list(o.holdout), o.max_depth);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline TargetSpec target_for(const Options& o) {
  if (o.target.empty()) throw ConfigError("--target is required");
  nlohmann::json j = parse_json(text_or_file(o.target, '{', "target"), "target");
  try {
    if (j.value("kind", "") == "empirical" && j.contains("csv")) {
      const auto col = load_csv_column(j.at("csv").get<std::string>(), j.value("column", "x"));
      j["data"] = col.values;
    }
    return target_from_json(j);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("target: ") + e.what());
  }
}

inline Program program_for(const std::string& spec, const std::string& what) {
  const std::string text = text_or_file(spec, '(', what);
  try {
    Program p = parse_program(text);
    type_check(p);
    return p;
  } catch (const std::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

inline ScoreConfig score_config_for(const Options& o) {
  ScoreConfig c;
  c.n = o.draws;
  c.eval.recursion_cap = o.recursion_cap;
  c.eval.fuel = o.fuel;
  c.jobs = o.jobs;
  validate(c);
  return c;
}

inline std::vector<lg::WaveKind> kinds_for(const std::string& s, const std::string& flag) {
  std::vector<lg::WaveKind> out;
  for (const auto& k : split_list(s)) {
    if (k == "none") continue;
    if (k == "all") {
      out.push_back(lg::WaveKind::kSquare);
      out.push_back(lg::WaveKind::kSin);
    } else if (k == "step" || k == "square") {
      out.push_back(lg::WaveKind::kSquare);
    } else if (k == "smooth" || k == "sin") {
      out.push_back(lg::WaveKind::kSin);
    } else {
      throw ConfigError(flag + ": unknown function set '" + k + "' (step, smooth, all, none)");
    }
  }
  std::vector<lg::WaveKind> unique;
  for (auto k : out)
    if (std::find(unique.begin(), unique.end(), k) == unique.end()) unique.push_back(k);
  return unique;
}

inline lg::TrainConfig train_config_for(const Options& o) {
  lg::validate(o.training);
  return o.training;
}

// Column lookup in a CSV written by `lg episodes`.
inline lg::Episode read_episode(const std::string& path, const std::string& label) {
  std::istringstream in(read_input(path, "episodes"));
  std::string line;
  std::vector<std::string> header;
  lg::Episode ep;
  ep.label = label;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = sampler_smith::detail::split_csv_line(line);
    if (header.empty()) {
      header = cells;
      continue;
    }
    auto cell = [&](const std::string& name) -> std::string {
      for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i)
        if (header[i] == name) return cells[i];
      throw ConfigError(path + ": missing column " + name);
    };
    if (cell("episode") != label) continue;
    ep.t.push_back(std::stod(cell("t")));
    ep.y.push_back(std::stod(cell("y")));
    ep.truth.push_back(std::stod(cell("x_true")));
  }
  if (ep.y.empty()) throw ConfigError(path + ": no episode labelled '" + label + "'");
  return ep;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands.

inline void cmd_weights_estimate(const Options& o, const Run& run) {
  const RuleWeights w = detail::weights_for(o);
  nlohmann::json j = to_json(w);
  j["holdout"] = detail::split_list(o.holdout);
  j["alpha"] = o.alpha;
  run.write_json("weights.json", j);
}

inline void cmd_generate(const Options& o, const Run& run) {
  if (o.count < 0) throw ConfigError("--count must be >= 0");
  if (o.draws < 1) throw ConfigError("--draws must be >= 1");
  if (o.bins < 1) throw ConfigError("--bins must be >= 1");
  const RuleWeights w = detail::weights_for(o);
  const EvalConfig eval{o.recursion_cap, o.fuel};
  if (eval.recursion_cap < 1 || eval.fuel < 1) throw ConfigError("recursion cap and fuel must be >= 1");

  struct Item {
    GeneratedProgram g;
    SampleSet s;
  };
  std::vector<Item> items(static_cast<std::size_t>(o.count));
  parallel_for(items.size(), o.jobs, [&](std::size_t i) {
    Rng rng(derive_seed(run.seed(), {i}));
    items[i].g = generate_program({}, TypeTag::kReal, w, rng);
    items[i].s = draw_samples(items[i].g.program, {}, o.draws, eval, rng);
  });

  std::string programs;
  Csv hist({"program", "bin", "lo", "hi", "count"});
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& [g, s] = items[i];
    programs += "; program " + std::to_string(i) + " log_prior " + num(g.log_prob) + " non_finite " +
                std::to_string(s.non_finite) + "/" + std::to_string(o.draws) + "\n" + print_program(g.program) + "\n";
    std::vector<double> xs;
    for (double v : s.values)
      if (std::isfinite(v)) xs.push_back(v);
    if (xs.empty()) continue;
    const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
    const double lo = *lo_it, hi = *hi_it;
    const int bins = hi > lo ? o.bins : 1;
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (double v : xs) {
      auto b = hi > lo ? static_cast<std::size_t>((v - lo) / width) : 0;
      ++counts[std::min(b, counts.size() - 1)];
    }
    for (int b = 0; b < bins; ++b) {
      const double a = lo + width * b, z = b + 1 == bins ? hi : lo + width * (b + 1);
      hist.add({std::to_string(i), std::to_string(b), num(a), num(z), std::to_string(counts[b])});
    }
  }
  run.write("programs.psmp", ";", programs);
  run.write_csv("histogram.csv", hist);
}

inline void cmd_score(const Options& o, const Run& run) {
  const TargetSpec t = detail::target_for(o);
  const ScoreConfig cfg = detail::score_config_for(o);
  const Program p = detail::program_for(o.program, "program");
  if (p.formals.size() != target_formals(t).size())
    throw ConfigError("program takes " + std::to_string(p.formals.size()) + " arguments, target supplies " +
                      std::to_string(target_formals(t).size()));
  const double s = score_program_seeded(p, t, cfg, run.seed());
  Csv csv({"program", "log_score", "normalizer", "penalty"});
  csv.add({print_program(p), num(s), num(score_normalizer(t)), num(penalty(s, t))});
  run.out() << "log_score " << num(s) << "\n";
  run.write_csv("score.csv", csv);
}

inline void write_best(const Run& run, const Program& p, const RuleWeights& w, double log_score,
                       const TargetSpec& t, nlohmann::json extra) {
  run.write("best.psmp", ";", print_program(p) + "\n");
  extra["program"] = print_program(p);
  extra["log_prior"] = log_prior(p, w);
  extra["log_score"] = log_score;
  extra["penalty"] = penalty(log_score, t);
  run.write_json("best.json", extra);
}

inline void cmd_synth_mh(const Options& o, const Run& run) {
  const TargetSpec t = detail::target_for(o);
  ScoreConfig cfg = detail::score_config_for(o);
  const RuleWeights w = detail::weights_for(o);
  if (o.iterations < 1) throw ConfigError("--iterations must be >= 1");
  if (o.chains < 1) throw ConfigError("--chains must be >= 1");
  std::optional<Program> init;
  if (!o.init.empty()) init = detail::program_for(o.init, "init");
  // Chains run concurrently; a single chain uses the threads for scoring.
  if (o.chains > 1) cfg.jobs = 1;

  std::vector<ChainTrace> traces(static_cast<std::size_t>(o.chains));
  parallel_for(traces.size(), o.chains > 1 ? o.jobs : 1, [&](std::size_t c) {
    Rng rng(derive_seed(run.seed(), {c}));
    traces[c] = run_mh(init, t, w, cfg, o.iterations, rng);
  });

  Csv csv({"chain", "iter", "logprior", "logscore", "accepted", "site", "program"});
  std::size_t best_chain = 0;
  for (std::size_t c = 0; c < traces.size(); ++c) {
    for (const auto& r : traces[c].records)
      csv.add({std::to_string(c), std::to_string(r.iteration), num(r.log_prior), num(r.log_score),
               r.accepted ? "1" : "0", std::to_string(r.site), r.program});
    const auto& a = traces[c].best_record();
    const auto& b = traces[best_chain].best_record();
    if (a.log_prior + a.log_score > b.log_prior + b.log_score) best_chain = c;
  }
  run.write_csv("trace.csv", csv);
  const auto& best = traces[best_chain].best_record();
  write_best(run, traces[best_chain].best_program, w, best.log_score, t,
             {{"chain", best_chain}, {"iteration", best.iteration}});
}

inline void cmd_synth_gp(const Options& o, const Run& run) {
  const TargetSpec t = detail::target_for(o);
  const ScoreConfig cfg = detail::score_config_for(o);
  const RuleWeights w = detail::weights_for(o);
  GpConfig gp = o.gp;
  gp.max_depth = o.max_depth;
  validate(gp);
  Rng rng(run.seed());
  const GpResult r = run_gp(t, w, gp, cfg, rng);
  Csv csv({"generation", "best_fitness", "mean_fitness", "invalid", "best_logprior", "best_logscore", "best_penalty",
           "min_penalty", "best_program"});
  for (const auto& g : r.generations)
    csv.add({std::to_string(g.generation), num(g.best_fitness), num(g.mean_fitness), std::to_string(g.invalid),
             num(g.best_log_prior), num(g.best_log_score), num(g.best_penalty), num(g.min_penalty), g.best_program});
  run.write_csv("gp.csv", csv);
  write_best(run, r.best.program, w, r.best.log_score, t, {{"generation", r.generations.back().generation}});
}

inline void cmd_abc_reject(const Options& o, const Run& run) {
  const TargetSpec t = detail::target_for(o);
  MomentVector target;
  if (const auto* m = std::get_if<MomentTarget>(&t)) {
    target = m->target;
  } else if (const auto* e = std::get_if<EmpiricalTarget>(&t)) {
    const auto mv = sample_moments(e->data);
    if (!mv) throw ConfigError("empirical target has degenerate moments");
    target = *mv;
  } else {
    throw ConfigError("abc reject needs a moments or empirical target");
  }
  if (!(o.epsilon >= 0.0)) throw ConfigError("--epsilon must be >= 0");
  if (o.max_draws < 1) throw ConfigError("--max-draws must be >= 1");
  const ScoreConfig cfg = detail::score_config_for(o);
  const RuleWeights w = o.toy ? toy_constant_grammar() : detail::weights_for(o);
  Rng rng(run.seed());
  const AbcResult r = rejection_abc(target, w, o.epsilon, o.max_draws, cfg, rng);

  std::map<std::string, long> counts;
  for (const auto& p : r.accepted) ++counts[print_program(p)];
  std::vector<std::pair<std::string, long>> rows(counts.begin(), counts.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Csv csv({"program", "count", "frequency"});
  for (const auto& [prog, n] : rows)
    csv.add({prog, std::to_string(n), num(static_cast<double>(n) / static_cast<double>(r.accepted.size()))});
  run.write_csv("abc.csv", csv);
  Csv summary({"draws", "accepted", "acceptance_rate"});
  summary.add({std::to_string(r.draws), std::to_string(r.accepted.size()),
               num(static_cast<double>(r.accepted.size()) / static_cast<double>(r.draws))});
  run.write_csv("abc_summary.csv", summary);
}

inline void cmd_lg_episodes(const Options& o, const Run& run) {
  if (!(o.noise > 0.0)) throw ConfigError("--noise must be > 0");
  std::vector<std::pair<std::string, lg::EpisodeSpec>> specs;
  for (auto k : detail::kinds_for(o.train, "--train"))
    for (const auto& s : lg::training_functions(k)) specs.push_back({"train", s});
  for (auto k : detail::kinds_for(o.test, "--test"))
    for (const auto& s : lg::test_functions(k)) specs.push_back({"test", s});
  Csv csv({"set", "episode", "kind", "offset", "step", "t", "y", "x_true"});
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& [set, spec] = specs[i];
    Rng rng(derive_seed(run.seed(), {i}));
    const lg::Episode ep = lg::gen_episode(spec.kind, spec.offset, o.noise, rng);
    for (std::size_t s = 0; s < ep.y.size(); ++s)
      csv.add({set, ep.label, lg::wave_name(spec.kind), num(spec.offset), std::to_string(s), num(ep.t[s]),
               num(ep.y[s]), num(ep.truth[s])});
  }
  run.write_csv("episodes.csv", csv);
}

inline void cmd_lg_smc(const Options& o, const Run& run) {
  if (o.particles < 1) throw ConfigError("--particles must be >= 1");
  if (!(o.mix >= 0.0 && o.mix <= 1.0)) throw ConfigError("--mix must lie in [0, 1]");
  if (!(o.noise > 0.0)) throw ConfigError("--noise must be > 0");
  lg::Proposal prop = lg::Proposal::prior();
  if (o.proposal == "data-driven") {
    if (o.network.empty()) throw ConfigError("--proposal data-driven needs --network");
    const auto j = detail::parse_json(detail::read_input(o.network, "network"), "network " + o.network);
    try {
      prop = lg::Proposal::data_driven(lg::mlp_from_json(j), o.mix);
    } catch (const std::exception& e) {
      throw ConfigError("network " + o.network + ": " + e.what());
    }
  } else if (o.proposal != "prior") {
    throw ConfigError("--proposal must be prior or data-driven");
  }
  Rng rng(run.seed());
  lg::Episode ep;
  if (!o.episodes.empty()) {
    if (o.episode.empty()) throw ConfigError("--episodes needs --episode LABEL");
    ep = detail::read_episode(o.episodes, o.episode);
  } else {
    const auto kinds = detail::kinds_for(o.kind, "--kind");
    if (kinds.size() != 1) throw ConfigError("--kind must name one function (square or sin)");
    ep = lg::gen_episode(kinds[0], o.offset, o.noise, rng);
  }
  const lg::LgModel m;
  const lg::ParticleResult r = lg::smc_run(m, ep.y, o.particles, prop, rng, o.jobs);
  const lg::KalmanResult k = lg::kalman_filter_smoother(m, ep.y);
  const auto means = r.filtering_means();
  Csv csv({"step", "t", "y", "x_true", "filter_mean", "ess", "kalman_mean"});
  for (std::size_t s = 0; s < ep.y.size(); ++s)
    csv.add({std::to_string(s), num(ep.t[s]), num(ep.y[s]), num(ep.truth[s]), num(means[s]), num(r.ess[s]),
             num(k.filter_mean[s])});
  run.write_csv("smc.csv", csv);
  Csv summary({"episode", "proposal", "particles", "mae", "kalman_mae"});
  summary.add({ep.label, o.proposal, std::to_string(o.particles), num(lg::evaluate_error(r, ep.truth)),
               num(lg::mean_absolute_error(k.filter_mean, ep.truth))});
  run.write_csv("summary.csv", summary);
}

inline lg::PipelineConfig pipeline_config_for(const Options& o) {
  lg::PipelineConfig c;
  c.train_kinds = detail::kinds_for(o.train, "--train");
  c.test_kinds = detail::kinds_for(o.test, "--test");
  c.train_particles = o.train_particles;
  c.test_particles = o.test_particles;
  c.repeats = o.repeats;
  c.mix = o.mix;
  c.noise_sd = o.noise;
  c.train = detail::train_config_for(o);
  c.jobs = o.jobs;
  lg::validate(c);
  return c;
}

inline Csv train_metrics_csv(const std::vector<lg::MetricRow>& rows) {
  Csv csv({"repeat", "episode", "kind", "proposal", "mae"});
  for (const auto& r : rows)
    if (r.phase == "train")
      csv.add({std::to_string(r.repeat), r.episode, lg::wave_name(r.kind), r.proposal, num(r.mae)});
  return csv;
}

inline void cmd_lg_train(const Options& o, const Run& run) {
  Options adjusted = o;
  adjusted.train_particles = o.particles;
  const lg::PipelineConfig c = pipeline_config_for(adjusted);
  if (c.train_kinds.empty()) throw ConfigError("--train selects no episodes");
  Rng rng(derive_seed(run.seed(), {0}));
  const lg::TrainedNetwork net = lg::train_incrementally(c, 0, rng);
  Csv loss({"episode_index", "episode", "epoch", "loss"});
  for (std::size_t e = 0; e < net.epoch_loss.size(); ++e)
    for (std::size_t k = 0; k < net.epoch_loss[e].size(); ++k)
      loss.add({std::to_string(e), net.rows[e].episode, std::to_string(k), num(net.epoch_loss[e][k])});
  run.write_csv("loss.csv", loss);
  run.write_csv("train_metrics.csv", train_metrics_csv(net.rows));
  run.write_json("network.json", lg::to_json(net.params));
}

inline void cmd_lg_pipeline(const Options& o, const Run& run) {
  const lg::PipelineConfig c = pipeline_config_for(o);
  Rng rng(run.seed());
  const lg::PipelineResult r = lg::run_pipeline(c, rng);
  Csv metrics({"repeat", "episode", "kind", "proposal", "mae"});
  for (const auto& row : r.rows)
    if (row.phase == "test")
      metrics.add({std::to_string(row.repeat), row.episode, lg::wave_name(row.kind), row.proposal, num(row.mae)});
  run.write_csv("metrics.csv", metrics);
  run.write_csv("train_metrics.csv", train_metrics_csv(r.rows));
  Csv summary({"kind", "proposal", "mean_mae", "sd_mae", "repeats"});
  for (auto k : c.test_kinds)
    for (const char* arm : {lg::kPriorArm, lg::kDataDrivenArm}) {
      const lg::ArmSummary s = lg::summarize_arm(r, arm, k, c.repeats);
      if (s.count == 0) continue;
      summary.add({lg::wave_name(k), arm, num(s.mean), num(s.sd), std::to_string(s.count)});
    }
  run.write_csv("summary.csv", summary);
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

inline bool cmd_selftest(const Options& o, const Run& run) {
  std::vector<int> ids;
  for (const auto& s : detail::split_list(o.only)) {
    int id = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), id);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || id < 1 || id > acceptance::kNumCriteria)
      throw ConfigError("--only: no criterion '" + s + "'");
    ids.push_back(id);
  }
  if (ids.empty())
    for (int i = 1; i <= acceptance::kNumCriteria; ++i) ids.push_back(i);
  const acceptance::CliRunner runner = [](const std::vector<std::string>& a, std::ostream& so, std::ostream& se) {
    return run_cli(a, so, se);
  };
  Csv csv({"criterion", "name", "passed", "detail"});
  bool all = true;
  for (int id : ids) {
    const acceptance::Outcome res = acceptance::run_criterion(id, runner, o.jobs);
    run.out() << acceptance::format_outcome(res) << "\n" << std::flush;
    csv.add({std::to_string(res.id), res.name, res.passed ? "1" : "0", res.detail});
    all = all && res.passed;
  }
  run.write_csv("selftest.csv", csv);
  return all;
}

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

// Turns a JSON config object into flags. Strings pass through, other scalars
// are written as JSON, arrays become comma lists and `true` is a bare flag.
inline std::vector<std::string> config_args(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
  std::vector<std::string> out;
  auto scalar = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (const auto& [key, v] : j.items()) {
    if (v.is_boolean()) {
      if (v.get<bool>()) out.push_back("--" + key);
      continue;
    }
    std::string value;
    if (v.is_array()) {
      for (const auto& e : v) value += (value.empty() ? "" : ",") + scalar(e);
    } else {
      value = scalar(v);
    }
    out.push_back("--" + key);
    out.push_back(value);
  }
  return out;
}

// Replaces `--config FILE` with its flags, placed before the first flag so
// that flags given on the command line take precedence.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (path.empty()) return args;
  const auto extra = config_args(parse_json(read_input(path, "config"), "config " + path), path);
  std::size_t at = 0;
  while (at < args.size() && (args[at].empty() || args[at][0] != '-')) ++at;
  args.insert(args.begin() + static_cast<long>(at), extra.begin(), extra.end());
  return args;
}

// Resolved options of the chosen subcommand, defaults included.
inline nlohmann::json resolved_config(const CLI::App* sub) {
  nlohmann::json j = nlohmann::json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config" || name == "out") continue;
    if (opt->get_type_size() == 0) {
      j[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      j[name] = opt->results().back();
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  auto fail = [&](int code, const std::string& msg) {
    err << "ERR:" << code << ":" << msg << "\n";
    return code;
  };
  Options o;
  CLI::App app{"Sampler program synthesis and linear-Gaussian SMC", "sampler_smith"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::map<const CLI::App*, std::pair<std::string, bool>> leaves;  // name, needs a seed
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& desc, const std::string& full,
                  bool stochastic) {
    CLI::App* s = parent->add_subcommand(name, desc);
    s->add_option("--seed", o.seed, "master seed")->envname(kSeedEnv);
    s->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    s->add_option("--out", o.out, "output directory");
    s->add_option("--config", o.config, "JSON file of option values; command-line flags win");
    leaves[s] = {full, stochastic};
    return s;
  };
  auto weight_opts = [&](CLI::App* s) {
    s->add_option("--weights", o.weights, "rule weights JSON; default: estimated from the corpus");
    s->add_option("--holdout", o.holdout, "comma list of corpus entries to leave out");
    s->add_option("--corpus-dir", o.corpus_dir, "directory of .psmp files replacing the bundled corpus");
    s->add_option("--alpha", o.alpha, "Dirichlet smoothing");
    s->add_option("--max-depth", o.max_depth, "generation depth limit");
  };
  auto score_opts = [&](CLI::App* s) {
    s->add_option("--draws", o.draws, "samples per evaluation");
    s->add_option("--recursion-cap", o.recursion_cap, "recur depth limit");
    s->add_option("--fuel", o.fuel, "evaluation steps per run");
  };

  CLI::App* weights = app.add_subcommand("weights", "grammar weights");
  weights->require_subcommand(1);
  weight_opts(leaf(weights, "estimate", "estimate rule weights from the corpus", "weights estimate", false));

  CLI::App* gen = leaf(&app, "generate", "sample programs from the grammar and histogram their draws", "generate", true);
  weight_opts(gen);
  gen->add_option("--count", o.count, "number of programs");
  gen->add_option("--draws", o.draws, "samples per program");
  gen->add_option("--bins", o.bins, "histogram bins");
  gen->add_option("--recursion-cap", o.recursion_cap, "recur depth limit");
  gen->add_option("--fuel", o.fuel, "evaluation steps per run");

  CLI::App* score = leaf(&app, "score", "log-score of one program against a target", "score", true);
  score->add_option("--program", o.program, "program text or .psmp file")->required();
  score->add_option("--target", o.target, "target JSON text or file")->required();
  score_opts(score);

  CLI::App* synth = app.add_subcommand("synth", "program synthesis");
  synth->require_subcommand(1);
  CLI::App* mh = leaf(synth, "mh", "Metropolis-Hastings over programs", "synth mh", true);
  mh->add_option("--target", o.target, "target JSON text or file")->required();
  weight_opts(mh);
  score_opts(mh);
  mh->add_option("--iterations", o.iterations, "steps per chain");
  mh->add_option("--chains", o.chains, "independent chains");
  mh->add_option("--init", o.init, "initial program text or file");
  CLI::App* gp = leaf(synth, "gp", "genetic programming baseline", "synth gp", true);
  gp->add_option("--target", o.target, "target JSON text or file")->required();
  weight_opts(gp);
  score_opts(gp);
  gp->add_option("--population", o.gp.population);
  gp->add_option("--generations", o.gp.generations);
  gp->add_option("--tournament", o.gp.tournament);
  gp->add_option("--crossover", o.gp.crossover, "crossover probability");
  gp->add_option("--mutation", o.gp.mutation, "mutation probability");
  gp->add_option("--elitism", o.gp.elitism);

  CLI::App* abc = app.add_subcommand("abc", "approximate Bayesian computation");
  abc->require_subcommand(1);
  CLI::App* reject = leaf(abc, "reject", "rejection ABC over programs", "abc reject", true);
  reject->add_option("--target", o.target, "moments or empirical target")->required();
  weight_opts(reject);
  score_opts(reject);
  reject->add_flag("--toy", o.toy, "use the grammar of the two constants 0.0 and 1.0");
  reject->add_option("--epsilon", o.epsilon, "moment distance threshold");
  reject->add_option("--max-draws", o.max_draws, "programs to draw");

  CLI::App* lgc = app.add_subcommand("lg", "linear-Gaussian state-space flows");
  lgc->require_subcommand(1);
  auto noise_opt = [&](CLI::App* s) { s->add_option("--noise", o.noise, "observation noise sd of episodes"); };
  auto train_opts = [&](CLI::App* s) {
    s->add_option("--epochs", o.training.epochs);
    s->add_option("--lr", o.training.lr, "learning rate");
    s->add_option("--batch", o.training.batch);
    s->add_option("--clip", o.training.clip_norm, "gradient norm clip; 0 disables");
  };
  CLI::App* eps = leaf(lgc, "episodes", "write training and test episodes", "lg episodes", true);
  eps->add_option("--train", o.train, "training functions: step, smooth, all, none");
  eps->add_option("--test", o.test, "test functions: step, smooth, all, none");
  noise_opt(eps);
  CLI::App* smc = leaf(lgc, "smc", "filter one episode", "lg smc", true);
  smc->add_option("--kind", o.kind, "square or sin");
  smc->add_option("--offset", o.offset);
  smc->add_option("--episodes", o.episodes, "CSV from lg episodes");
  smc->add_option("--episode", o.episode, "episode label in that file");
  smc->add_option("--particles", o.particles);
  smc->add_option("--proposal", o.proposal, "prior or data-driven");
  smc->add_option("--network", o.network, "network JSON from lg train");
  smc->add_option("--mix", o.mix, "probability of drawing from the network");
  noise_opt(smc);
  CLI::App* train = leaf(lgc, "train", "train the proposal network", "lg train", true);
  train->add_option("--train", o.train, "training functions: step, smooth, all");
  train->add_option("--particles", o.particles, "particles per training episode");
  noise_opt(train);
  train_opts(train);
  CLI::App* pipe = leaf(lgc, "pipeline", "train, then compare proposals on test episodes", "lg pipeline", true);
  pipe->add_option("--train", o.train, "training functions: step, smooth, all, none");
  pipe->add_option("--test", o.test, "test functions: step, smooth, all, none");
  pipe->add_option("--train-particles", o.train_particles);
  pipe->add_option("--test-particles", o.test_particles);
  pipe->add_option("--repeats", o.repeats);
  pipe->add_option("--mix", o.mix, "probability of drawing from the network");
  noise_opt(pipe);
  train_opts(pipe);

  CLI::App* self = leaf(&app, "selftest", "run the acceptance suite", "selftest", false);
  self->add_option("--only", o.only, "comma list of criterion numbers");

  std::vector<std::string> args;
  try {
    args = detail::expand_config(raw_args);
  } catch (const ConfigError& e) {
    return fail(kExitConfig, e.what());
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    return fail(kExitConfig, e.what());
  }

  const CLI::App* chosen = nullptr;
  for (const auto& [s, info] : leaves)
    if (s->parsed()) chosen = s;
  if (!chosen) return fail(kExitConfig, "no subcommand");
  const auto& [name, stochastic] = leaves.at(chosen);
  if (stochastic && !o.seed) return fail(kExitConfig, name + " needs --seed or " + kSeedEnv);

  try {
    const Run run(name, detail::resolved_config(chosen), o.seed, o.out, out);
    if (name == "weights estimate") cmd_weights_estimate(o, run);
    else if (name == "generate") cmd_generate(o, run);
    else if (name == "score") cmd_score(o, run);
    else if (name == "synth mh") cmd_synth_mh(o, run);
    else if (name == "synth gp") cmd_synth_gp(o, run);
    else if (name == "abc reject") cmd_abc_reject(o, run);
    else if (name == "lg episodes") cmd_lg_episodes(o, run);
    else if (name == "lg smc") cmd_lg_smc(o, run);
    else if (name == "lg train") cmd_lg_train(o, run);
    else if (name == "lg pipeline") cmd_lg_pipeline(o, run);
    else if (name == "selftest" && !cmd_selftest(o, run)) return fail(kExitRuntime, "acceptance criteria failed");
  } catch (const ConfigError& e) {
    return fail(kExitConfig, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kExitConfig, e.what());
  } catch (const std::domain_error& e) {
    return fail(kExitConfig, e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, e.what());
  }
  return kExitOk;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace sampler_smith::cli
