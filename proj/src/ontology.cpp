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

#include "absagan/ontology.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace absagan {

const char* to_string(VerdictOutcome o) {
  switch (o) {
    case VerdictOutcome::kPositive: return "Positive";
    case VerdictOutcome::kNegative: return "Negative";
    case VerdictOutcome::kInconclusive: return "Inconclusive";
  }
  return "?";
}

const char* to_string(VerdictReason r) {
  switch (r) {
    case VerdictReason::kNoHit: return "NoHit";
    case VerdictReason::kConflict: return "Conflict";
    case VerdictReason::kDecided: return "Decided";
  }
  return "?";
}

namespace {

std::string lower(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

LexSentiment parse_sentiment(const std::string& s, int lineno) {
  if (s == "Positive") return LexSentiment::kPositive;
  if (s == "Negative") return LexSentiment::kNegative;
  throw DataError("lexicon line " + std::to_string(lineno) +
                  ": unknown sentiment '" + s + "'");
}

}  // namespace

std::vector<LexiconEntry> parse_lexicon(std::istream& in) {
  std::vector<LexiconEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 4) {
      throw DataError("lexicon line " + std::to_string(lineno) +
                      ": expected 4 tab-separated fields");
    }
    LexiconEntry entry;
    entry.lemma = lower(fields[0]);
    if (entry.lemma.empty()) {
      throw DataError("lexicon line " + std::to_string(lineno) + ": empty lemma");
    }
    const std::string& kind = fields[1];
    const std::string& spec = fields[2];
    const std::string& aspect_list = fields[3];

    if (kind == "Type1") {
      entry.kind = LexKind::kGeneric;
      entry.sentiment = parse_sentiment(spec, lineno);
      if (aspect_list != "-") {
        throw DataError("lexicon line " + std::to_string(lineno) +
                        ": Type1 entries apply to all aspects; aspect list must be '-'");
      }
    } else if (kind == "Type2") {
      entry.kind = LexKind::kAspectBound;
      entry.sentiment = parse_sentiment(spec, lineno);
      if (aspect_list == "-" || aspect_list.empty()) {
        throw DataError("lexicon line " + std::to_string(lineno) +
                        ": Type2 entries need a non-empty aspect list");
      }
      for (const std::string& a : split(aspect_list, ',')) {
        if (!a.empty()) entry.aspects.insert(a);
      }
      if (entry.aspects.empty()) {
        throw DataError("lexicon line " + std::to_string(lineno) +
                        ": Type2 entries need a non-empty aspect list");
      }
    } else if (kind == "Type3") {
      entry.kind = LexKind::kContextDependent;
      if (aspect_list != "-") {
        throw DataError("lexicon line " + std::to_string(lineno) +
                        ": Type3 aspects come from the pair list; aspect list must be '-'");
      }
      for (const std::string& pair : split(spec, ';')) {
        if (pair.empty()) continue;
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos) {
          throw DataError("lexicon line " + std::to_string(lineno) +
                          ": Type3 spec needs aspect=sentiment pairs");
        }
        const std::string aspect = pair.substr(0, eq);
        entry.by_aspect[aspect] = parse_sentiment(pair.substr(eq + 1), lineno);
        entry.aspects.insert(aspect);
      }
      if (entry.by_aspect.empty()) {
        throw DataError("lexicon line " + std::to_string(lineno) +
                        ": Type3 entries need at least one aspect=sentiment pair");
      }
    } else {
      throw DataError("lexicon line " + std::to_string(lineno) +
                      ": unknown kind '" + kind + "'");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<LexiconEntry> load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon file " + path);
  return parse_lexicon(in);
}

OntologyVerdict ontology_classify(const ReviewInstance& instance,
                                  const std::vector<LexiconEntry>& lexicon) {
  OntologyVerdict verdict;
  bool saw_positive = false, saw_negative = false;
  for (std::size_t e = 0; e < lexicon.size(); ++e) {
    const LexiconEntry& entry = lexicon[e];
    const bool token_match =
        std::find(instance.tokens.begin(), instance.tokens.end(),
                  entry.lemma) != instance.tokens.end();
    if (!token_match) continue;

    LexSentiment sentiment;
    switch (entry.kind) {
      case LexKind::kGeneric:
        sentiment = entry.sentiment;
        break;
      case LexKind::kAspectBound:
        if (!entry.aspects.count(instance.aspect_category)) continue;
        sentiment = entry.sentiment;
        break;
      case LexKind::kContextDependent: {
        auto it = entry.by_aspect.find(instance.aspect_category);
        if (it == entry.by_aspect.end()) continue;
        sentiment = it->second;
        break;
      }
      default:
        continue;
    }
    verdict.hits.push_back(e);
    saw_positive |= sentiment == LexSentiment::kPositive;
    saw_negative |= sentiment == LexSentiment::kNegative;
  }

  if (saw_positive && saw_negative) {
    verdict.outcome = VerdictOutcome::kInconclusive;
    verdict.reason = VerdictReason::kConflict;
  } else if (saw_positive) {
    verdict.outcome = VerdictOutcome::kPositive;
    verdict.reason = VerdictReason::kDecided;
  } else if (saw_negative) {
    verdict.outcome = VerdictOutcome::kNegative;
    verdict.reason = VerdictReason::kDecided;
  } else {
    verdict.outcome = VerdictOutcome::kInconclusive;
    verdict.reason = VerdictReason::kNoHit;
  }
  return verdict;
}

}  // namespace absagan
