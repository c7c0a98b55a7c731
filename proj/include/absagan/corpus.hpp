/* Copyright 2026 The absagan Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Review-corpus ingestion: SemEval-style XML parsing, target-span splitting,
// and contextual embedding stores (loaded from file or synthesized).

#ifndef ABSAGAN_CORPUS_HPP_
#define ABSAGAN_CORPUS_HPP_

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "absagan/numerics.hpp"

namespace absagan {

enum class Polarity : int { kNegative = 0, kNeutral = 1, kPositive = 2 };

Polarity parse_polarity(const std::string& s);
const char* to_string(Polarity p);

struct Token {
  std::string text;        // lowercased
  std::size_t begin, end;  // byte offsets into the original sentence
};

/// Lowercases and splits on whitespace; punctuation characters become
/// their own single-character tokens.
std::vector<Token> tokenize_with_offsets(const std::string& text);
std::vector<std::string> tokenize(const std::string& text);

/// One sentence with an explicit opinion target.
struct ReviewInstance {
  std::string sentence_id;
  std::vector<std::string> tokens;
  int target_begin = 0;  // token indices, end exclusive
  int target_end = 0;
  std::string aspect_category;
  Polarity polarity = Polarity::kNeutral;
};

/// The instance split around its target, rows are token embeddings.
/// An empty left/right context is a single zero row so the recurrent
/// encoders always see at least one step.
struct EmbeddedInstance {
  Matrix left, target, right;
  Polarity polarity = Polarity::kNeutral;
  std::string aspect_category;
};

/// (sentence_id, token_index) -> contextual vector of a fixed dimension.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return map_.size(); }
  bool contains(const std::string& id, int index) const;
  const Vector& at(const std::string& id, int index) const;
  void insert(const std::string& id, int index, Vector v);

  template <class F>
  void for_each(F&& f) const {  // sorted by (id, index)
    for (const auto& [key, vec] : map_) f(key.first, key.second, vec);
  }

 private:
  int dim_;
  std::map<std::pair<std::string, int>, Vector> map_;
};

/// Parses annotated review XML (sentence/text plus Opinions/Opinion with
/// target, category, polarity, from, to). Opinions with target "NULL" are
/// implicit sentiment and are dropped.
std::vector<ReviewInstance> parse_semeval(std::istream& xml);
std::vector<ReviewInstance> parse_semeval_file(const std::string& path);
std::vector<ReviewInstance> parse_semeval_text(const std::string& xml);

/// Line format: sentence_id TAB category TAB polarity TAB begin TAB end TAB
/// space-joined tokens. Bypasses the tokenizer for externally prepared data.
std::vector<ReviewInstance> load_pretokenized(const std::string& path);

/// Relative class frequencies in {Negative, Neutral, Positive} order.
std::array<Scalar, 3> label_distribution(const std::vector<ReviewInstance>& instances);

EmbeddedInstance embed(const ReviewInstance& instance, const EmbeddingStore& store);

/// The deterministic per-key stream behind synth_embeddings; also reused by
/// the synthetic benchmark for its class-conditional draws.
Rng embedding_key_rng(std::uint64_t seed, const std::string& sentence_id,
                      int token_index, const std::string& token);

/// Deterministic stand-in for precomputed contextual embeddings: every
/// (sentence, position) gets its own U(-1,1)^d vector, so repeated tokens
/// still embed differently by position.
EmbeddingStore synth_embeddings(const std::vector<ReviewInstance>& instances,
                                int d, std::uint64_t seed);

/// File format: header "d=<int>", then one line per key:
/// sentence_id TAB token_index TAB d space-separated decimals.
EmbeddingStore load_embeddings(const std::string& path);
EmbeddingStore load_embeddings(std::istream& in);
void save_embeddings(std::ostream& out, const EmbeddingStore& store);
void save_embeddings(const std::string& path, const EmbeddingStore& store);

/// Index partition behind train_test_split; exposed so parallel containers
/// can be split consistently. Train side gets ceil(ratio*n) indices; both
/// sides are returned in ascending order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, Scalar ratio, std::uint64_t seed);

/// Uniform partition without replacement, deterministic under seed.
template <class T>
std::pair<std::vector<T>, std::vector<T>> train_test_split(
    const std::vector<T>& items, Scalar ratio, std::uint64_t seed) {
  auto [train_idx, test_idx] = split_indices(items.size(), ratio, seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  out.first.reserve(train_idx.size());
  out.second.reserve(test_idx.size());
  for (std::size_t i : train_idx) out.first.push_back(items[i]);
  for (std::size_t i : test_idx) out.second.push_back(items[i]);
  return out;
}

}  // namespace absagan

#endif  // ABSAGAN_CORPUS_HPP_
