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

#include "absagan/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace absagan {

namespace pt = boost::property_tree;

Polarity parse_polarity(const std::string& s) {
  std::string lower;
  lower.reserve(s.size());
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "negative") return Polarity::kNegative;
  if (lower == "neutral") return Polarity::kNeutral;
  if (lower == "positive") return Polarity::kPositive;
  throw DataError("unknown polarity '" + s + "'");
}

const char* to_string(Polarity p) {
  switch (p) {
    case Polarity::kNegative: return "Negative";
    case Polarity::kNeutral: return "Neutral";
    case Polarity::kPositive: return "Positive";
  }
  return "?";
}

namespace {

bool is_word_char(unsigned char c) {
  // Bytes >= 0x80 keep multi-byte UTF-8 sequences inside one token.
  return std::isalnum(c) || c >= 0x80;
}

}  // namespace

std::vector<Token> tokenize_with_offsets(const std::string& text) {
  std::vector<Token> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (is_word_char(c)) {
      std::size_t j = i;
      std::string tok;
      while (j < n && is_word_char(static_cast<unsigned char>(text[j]))) {
        tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[j]))));
        ++j;
      }
      out.push_back(Token{std::move(tok), i, j});
      i = j;
    } else {
      out.push_back(Token{std::string(1, text[i]), i, i + 1});
      ++i;
    }
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  for (Token& t : tokenize_with_offsets(text)) out.push_back(std::move(t.text));
  return out;
}

namespace {

// Maps the annotated character span onto token indices: the span covers the
// first through last intersecting tokens. No intersecting token is a data
// bug in the annotations and is surfaced, not skipped.
std::pair<int, int> align_span(const std::vector<Token>& tokens,
                               std::size_t from, std::size_t to,
                               const std::string& sentence_id) {
  int begin = -1, end = -1;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t].begin < to && tokens[t].end > from) {
      if (begin < 0) begin = static_cast<int>(t);
      end = static_cast<int>(t) + 1;
    }
  }
  if (begin < 0) {
    throw DataError("sentence " + sentence_id + ": target offsets [" +
                    std::to_string(from) + "," + std::to_string(to) +
                    ") match no token");
  }
  return {begin, end};
}

void collect_sentences(const pt::ptree& node,
                       std::vector<ReviewInstance>& out) {
  for (const auto& [name, child] : node) {
    if (name == "sentence") {
      const std::string id = child.get<std::string>("<xmlattr>.id", "");
      const std::string text = child.get<std::string>("text", "");
      const std::vector<Token> tokens = tokenize_with_offsets(text);
      for (const auto& [cname, cnode] : child) {
        if (cname != "Opinions") continue;
        for (const auto& [oname, onode] : cnode) {
          if (oname != "Opinion") continue;
          const std::string target =
              onode.get<std::string>("<xmlattr>.target", "NULL");
          if (target.empty() || target == "NULL") continue;  // implicit
          ReviewInstance inst;
          inst.sentence_id = id;
          inst.aspect_category =
              onode.get<std::string>("<xmlattr>.category", "");
          inst.polarity =
              parse_polarity(onode.get<std::string>("<xmlattr>.polarity", ""));
          const auto from = onode.get<std::size_t>("<xmlattr>.from");
          const auto to = onode.get<std::size_t>("<xmlattr>.to");
          if (to <= from) {
            throw DataError("sentence " + id + ": empty target span");
          }
          std::tie(inst.target_begin, inst.target_end) =
              align_span(tokens, from, to, id);
          inst.tokens.reserve(tokens.size());
          for (const Token& t : tokens) inst.tokens.push_back(t.text);
          out.push_back(std::move(inst));
        }
      }
    } else {
      collect_sentences(child, out);
    }
  }
}

}  // namespace

std::vector<ReviewInstance> parse_semeval(std::istream& xml) {
  pt::ptree tree;
  try {
    pt::read_xml(xml, tree);
  } catch (const pt::xml_parser_error& e) {
    throw DataError(std::string("malformed XML: ") + e.what());
  }
  std::vector<ReviewInstance> out;
  collect_sentences(tree, out);
  return out;
}

std::vector<ReviewInstance> parse_semeval_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path);
  return parse_semeval(in);
}

std::vector<ReviewInstance> parse_semeval_text(const std::string& xml) {
  std::istringstream in(xml);
  return parse_semeval(in);
}

std::vector<ReviewInstance> load_pretokenized(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pretokenized file " + path);
  std::vector<ReviewInstance> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 6) {
      throw DataError("pretokenized line " + std::to_string(lineno) +
                      ": expected 6 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    ReviewInstance inst;
    inst.sentence_id = fields[0];
    inst.aspect_category = fields[1];
    inst.polarity = parse_polarity(fields[2]);
    inst.target_begin = std::stoi(fields[3]);
    inst.target_end = std::stoi(fields[4]);
    std::istringstream toks(fields[5]);
    std::string tok;
    while (toks >> tok) inst.tokens.push_back(tok);
    if (!(0 <= inst.target_begin && inst.target_begin < inst.target_end &&
          inst.target_end <= static_cast<int>(inst.tokens.size()))) {
      throw DataError("pretokenized line " + std::to_string(lineno) +
                      ": target span out of range");
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::array<Scalar, 3> label_distribution(
    const std::vector<ReviewInstance>& instances) {
  if (instances.empty()) throw DataError("label_distribution on empty corpus");
  std::array<Scalar, 3> freq{0, 0, 0};
  for (const ReviewInstance& inst : instances) {
    freq[static_cast<int>(inst.polarity)] += 1.0;
  }
  for (Scalar& f : freq) f /= static_cast<Scalar>(instances.size());
  return freq;
}

EmbeddingStore::EmbeddingStore(int dim) : dim_(dim) {
  if (dim < 1) throw InvalidArgument("embedding dimension must be >= 1");
}

bool EmbeddingStore::contains(const std::string& id, int index) const {
  return map_.find({id, index}) != map_.end();
}

const Vector& EmbeddingStore::at(const std::string& id, int index) const {
  auto it = map_.find({id, index});
  if (it == map_.end()) {
    throw DataError("missing embedding for (" + id + ", " +
                    std::to_string(index) + ")");
  }
  return it->second;
}

void EmbeddingStore::insert(const std::string& id, int index, Vector v) {
  if (v.rows() != dim_) {
    throw DataError("embedding for (" + id + ", " + std::to_string(index) +
                    ") has length " + std::to_string(v.rows()) +
                    ", store dimension is " + std::to_string(dim_));
  }
  auto [it, inserted] = map_.emplace(std::make_pair(id, index), std::move(v));
  if (!inserted) {
    throw DataError("duplicate embedding key (" + id + ", " +
                    std::to_string(index) + ")");
  }
}

EmbeddedInstance embed(const ReviewInstance& inst, const EmbeddingStore& store) {
  const int n = static_cast<int>(inst.tokens.size());
  const int d = store.dim();
  if (!(0 <= inst.target_begin && inst.target_begin < inst.target_end &&
        inst.target_end <= n)) {
    throw DataError("instance " + inst.sentence_id + ": bad target span");
  }
  auto rows = [&](int begin, int end) {
    if (begin == end) return Matrix(Matrix::Zero(1, d));  // edge placeholder
    Matrix m(end - begin, d);
    for (int t = begin; t < end; ++t) {
      m.row(t - begin) = store.at(inst.sentence_id, t).transpose();
    }
    return m;
  };
  EmbeddedInstance out;
  out.left = rows(0, inst.target_begin);
  out.target = rows(inst.target_begin, inst.target_end);
  out.right = rows(inst.target_end, n);
  out.polarity = inst.polarity;
  out.aspect_category = inst.aspect_category;
  return out;
}

Rng embedding_key_rng(std::uint64_t seed, const std::string& sentence_id,
                      int token_index, const std::string& token) {
  std::uint64_t h = seed;
  h = hash_str(h, sentence_id);
  h = hash_mix(h, static_cast<std::uint64_t>(token_index));
  h = hash_str(h, token);
  return Rng(h);
}

EmbeddingStore synth_embeddings(const std::vector<ReviewInstance>& instances,
                                int d, std::uint64_t seed) {
  EmbeddingStore store(d);
  for (const ReviewInstance& inst : instances) {
    for (int t = 0; t < static_cast<int>(inst.tokens.size()); ++t) {
      if (store.contains(inst.sentence_id, t)) continue;  // shared sentence
      Rng rng = embedding_key_rng(seed, inst.sentence_id, t, inst.tokens[t]);
      Vector v(d);
      for (int j = 0; j < d; ++j) v(j) = rng.uniform(-1.0, 1.0);
      store.insert(inst.sentence_id, t, std::move(v));
    }
  }
  return store;
}

EmbeddingStore load_embeddings(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("d=", 0) != 0) {
    throw DataError("embedding file must start with a 'd=<int>' header");
  }
  int d = 0;
  try {
    d = std::stoi(header.substr(2));
  } catch (const std::exception&) {
    throw DataError("bad embedding dimension header '" + header + "'");
  }
  EmbeddingStore store(d);
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 = tab1 == std::string::npos
                                 ? std::string::npos
                                 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw DataError("embedding line " + std::to_string(lineno) +
                      ": expected id TAB index TAB values");
    }
    const std::string id = line.substr(0, tab1);
    int index = 0;
    try {
      index = std::stoi(line.substr(tab1 + 1, tab2 - tab1 - 1));
    } catch (const std::exception&) {
      throw DataError("embedding line " + std::to_string(lineno) +
                      ": bad token index");
    }
    std::istringstream values(line.substr(tab2 + 1));
    std::vector<Scalar> vals;
    Scalar x;
    while (values >> x) vals.push_back(x);
    if (static_cast<int>(vals.size()) != d) {
      throw DataError("embedding line " + std::to_string(lineno) + ": got " +
                      std::to_string(vals.size()) + " values, expected " +
                      std::to_string(d));
    }
    Vector v(d);
    for (int j = 0; j < d; ++j) v(j) = vals[j];
    store.insert(id, index, std::move(v));
  }
  return store;
}

EmbeddingStore load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path);
  return load_embeddings(in);
}

void save_embeddings(std::ostream& out, const EmbeddingStore& store) {
  out << "d=" << store.dim() << "\n";
  out << std::setprecision(17);
  store.for_each([&](const std::string& id, int index, const Vector& v) {
    out << id << '\t' << index << '\t';
    for (Index j = 0; j < v.rows(); ++j) {
      if (j) out << ' ';
      out << v(j);
    }
    out << "\n";
  });
}

void save_embeddings(const std::string& path, const EmbeddingStore& store) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embedding file " + path);
  save_embeddings(out, store);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, Scalar ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw InvalidArgument("split ratio must be in (0,1)");
  }
  if (n < 2) throw InvalidArgument("cannot split fewer than 2 items");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto train_n = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<Scalar>(n)));
  std::vector<std::size_t> train(order.begin(), order.begin() + train_n);
  std::vector<std::size_t> test(order.begin() + train_n, order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

}  // namespace absagan
