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


// The bundled sampler corpus and helpers for reading data from disk.
//
// Each entry pairs a hand-written sampler with the family it draws from. The
// family's parameters are the program's arguments followed by any fixed
// parameters (std-normal is Normal with mean 0 and sd 1 fixed; beta-a-1 is
// Beta with the second shape fixed to 1). The same texts ship as `.psmp`
// files under corpus/.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sampler_smith/expr.hpp"
#include "sampler_smith/families.hpp"
#include "sampler_smith/grammar.hpp"
#include "sampler_smith/syntax.hpp"

namespace sampler_smith {

struct CorpusEntry {
  std::string name;
  std::string text;
  Program program;
  Family family = Family::kNormal;
  std::vector<double> fixed_params;

  // Family parameters for the given program arguments.
  std::vector<double> family_params(const std::vector<double>& args) const {
    std::vector<double> p = args;
    p.insert(p.end(), fixed_params.begin(), fixed_params.end());
    return p;
  }
};

namespace detail {

struct BundledSource {
  std::string_view name;
  Family family;
  std::vector<double> fixed;
  std::string_view text;
};

inline const std::vector<BundledSource>& bundled_sources() {
  static const std::vector<BundledSource> sources = {
      {"bernoulli", Family::kBernoulli, {}, R"psmp(; Bernoulli(p): one uniform draw against the threshold p.
(fn [p]
  (if (< (safe-uc 0.0 1.0) p)
    1.0
    0.0))
)psmp"},
      {"geometric", Family::kGeometric, {}, R"psmp(; Geometric(p) on {1, 2, ...}: count trials until the first success.
; Truncated by the evaluator's recursion cap.
(fn [p]
  (let [inner-loop (fn [voidarg val]
                     (if (< (safe-uc 0.0 1.0) p)
                       val
                       (recur 0.0 (inc val))))]
    (inner-loop 0.0 1.0)))
)psmp"},
      {"std-normal", Family::kNormal, {0.0, 1.0}, R"psmp(; Standard normal by the polar (Marsaglia) rejection method.
(fn []
  (let [x (safe-uc -1.0 1.0)
        y (safe-uc -1.0 1.0)
        s (+ (* x x) (* y y))]
    (if (< s 1.0)
      (* x (safe-sqrt (* -2.0 (safe-div (safe-log s) s))))
      (recur))))
)psmp"},
      {"normal", Family::kNormal, {}, R"psmp(; Normal(mean, std) by the polar rejection method.
(fn [mean std]
  (let [x (safe-uc -1.0 1.0)
        y (safe-uc -1.0 1.0)
        s (+ (* x x) (* y y))]
    (if (< s 1.0)
      (+ mean (* std (* x (safe-sqrt (* -2.0 (safe-div (safe-log s) s))))))
      (recur mean std))))
)psmp"},
      {"poisson", Family::kPoisson, {}, R"psmp(; Poisson(rate) by multiplying uniforms until the product drops below e^-rate.
(fn [rate]
  (let [L (exp (* -1.0 rate))
        inner-loop (fn [k p]
                     (if (< p L)
                       (dec k)
                       (let [u (safe-uc 0.0 1.0)]
                         (recur (inc k) (* p u)))))]
    (inner-loop 1.0 (safe-uc 0.0 1.0))))
)psmp"},
      {"gamma", Family::kGamma, {}, R"psmp(; Gamma(alpha, 1) for alpha < 1 (Ahrens-Dieter GS rejection).
(fn [alpha]
  (if (< (safe-uc 0.0 1.0) (safe-div (exp 1.0) (+ (exp 1.0) alpha)))
    (let [epsilon (exp (* (safe-div 1.0 alpha) (safe-log (safe-uc 0.0 1.0))))]
      (if (< (exp (* -1.0 epsilon)) (safe-uc 0.0 1.0))
        (recur alpha)
        epsilon))
    (let [epsilon (- 1.0 (safe-log (safe-uc 0.0 1.0)))]
      (if (< (exp (* (dec alpha) (safe-log epsilon))) (safe-uc 0.0 1.0))
        (recur alpha)
        epsilon))))
)psmp"},
      {"beta-a-b", Family::kBeta, {}, R"psmp(; Beta(alpha, beta) as X / (X + Y) with X ~ Gamma(alpha), Y ~ Gamma(beta).
(fn [alpha beta]
  (let [X (let [get-gamma-1
                (fn [void1 void2]
                  (if (< (safe-uc 0.0 1.0) (safe-div (exp 1.0) (+ (exp 1.0) alpha)))
                    (let [epsilon (exp (* (safe-div 1.0 alpha) (safe-log (safe-uc 0.0 1.0))))]
                      (if (< (exp (* -1.0 epsilon)) (safe-uc 0.0 1.0))
                        (recur 0.0 0.0)
                        epsilon))
                    (let [epsilon (- 1.0 (safe-log (safe-uc 0.0 1.0)))]
                      (if (< (exp (* (dec alpha) (safe-log epsilon))) (safe-uc 0.0 1.0))
                        (recur 0.0 0.0)
                        epsilon))))]
            (get-gamma-1 0.0 0.0))
        Y (let [get-gamma-2
                (fn [void1 void2]
                  (if (< (safe-uc 0.0 1.0) (safe-div (exp 1.0) (+ (exp 1.0) beta)))
                    (let [epsilon (exp (* (safe-div 1.0 beta) (safe-log (safe-uc 0.0 1.0))))]
                      (if (< (exp (* -1.0 epsilon)) (safe-uc 0.0 1.0))
                        (recur 0.0 0.0)
                        epsilon))
                    (let [epsilon (- 1.0 (safe-log (safe-uc 0.0 1.0)))]
                      (if (< (exp (* (dec beta) (safe-log epsilon))) (safe-uc 0.0 1.0))
                        (recur 0.0 0.0)
                        epsilon))))]
            (get-gamma-2 0.0 0.0))]
    (safe-div X (+ X Y))))
)psmp"},
      {"beta-a-1", Family::kBeta, {1.0}, R"psmp(; Beta(alpha, 1) by inversion: U^(1/alpha).
(fn [alpha]
  (exp (safe-div (safe-log (safe-uc 0.0 1.0)) alpha)))
)psmp"},
  };
  return sources;
}

}  // namespace detail

// The eight bundled samplers, in a fixed order.
inline std::vector<CorpusEntry> load_corpus() {
  std::vector<CorpusEntry> out;
  for (const auto& s : detail::bundled_sources())
    out.push_back({std::string(s.name), std::string(s.text), parse_program(s.text), s.family, s.fixed});
  return out;
}

inline const CorpusEntry& find_entry(const std::vector<CorpusEntry>& corpus, std::string_view name) {
  for (const auto& e : corpus)
    if (e.name == name) return e;
  throw std::invalid_argument("unknown corpus entry '" + std::string(name) + "'");
}

// Copy of `corpus` without the named entries.
inline std::vector<CorpusEntry> holdout(const std::vector<CorpusEntry>& corpus, const std::vector<std::string>& names) {
  for (const auto& n : names) find_entry(corpus, n);
  std::vector<CorpusEntry> out;
  for (const auto& e : corpus)
    if (std::find(names.begin(), names.end(), e.name) == names.end()) out.push_back(e);
  return out;
}

inline std::vector<Program> programs_of(const std::vector<CorpusEntry>& corpus) {
  std::vector<Program> out;
  for (const auto& e : corpus) out.push_back(e.program);
  return out;
}

// Weights estimated from the corpus minus the excluded entries.
inline RuleWeights estimate_weights(const std::vector<CorpusEntry>& corpus, double alpha,
                                    const std::vector<std::string>& exclude, int max_depth = 10) {
  return estimate_weights(programs_of(holdout(corpus, exclude)), alpha, max_depth);
}

// Entries whose family matches one of the entries named. Learning a family
// holds out every sampler of that family.
inline std::vector<std::string> same_family_names(const std::vector<CorpusEntry>& corpus, std::string_view name) {
  const Family f = find_entry(corpus, name).family;
  std::vector<std::string> out;
  for (const auto& e : corpus)
    if (e.family == f) out.push_back(e.name);
  return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Reads every `.psmp` file in `dir`, sorted by name. Entries named like a
// bundled sampler take its family; others default to Normal with no fixed
// parameters.
inline std::vector<CorpusEntry> load_corpus_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& f : std::filesystem::directory_iterator(dir))
    if (f.is_regular_file() && f.path().extension() == ".psmp") files.push_back(f.path());
  std::sort(files.begin(), files.end());
  std::vector<CorpusEntry> out;
  for (const auto& path : files) {
    CorpusEntry e;
    e.name = path.stem().string();
    e.text = read_text_file(path);
    try {
      e.program = parse_program(e.text);
    } catch (const ParseError& err) {
      throw std::runtime_error(path.string() + ":" + err.what());
    }
    for (const auto& s : detail::bundled_sources())
      if (s.name == e.name) {
        e.family = s.family;
        e.fixed_params = s.fixed;
      }
    out.push_back(std::move(e));
  }
  return out;
}

struct CsvColumn {
  std::vector<double> values;
  std::size_t skipped = 0;  // missing or non-numeric cells
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace detail

// Reads one numeric column of a comma-separated file with a header row.
// Empty cells, "?" and anything that does not parse as a finite real are
// skipped and counted.
inline CsvColumn load_csv_column(const std::filesystem::path& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  const auto header = detail::split_csv_line(line);
  std::size_t idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (detail::trim(header[i]) == column) idx = i;
  if (idx == header.size()) throw std::runtime_error(path.string() + ": no column '" + column + "'");
  CsvColumn out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    const std::string cell = idx < cells.size() ? detail::trim(cells[idx]) : "";
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
      ++out.skipped;
      continue;
    }
    out.values.push_back(v);
  }
  if (out.values.empty()) throw std::runtime_error(path.string() + ": column '" + column + "' has no numeric values");
  return out;
}

}  // namespace sampler_smith
