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

// Rule-based first stage of the hybrid classifier: a sentiment lexicon with
// aspect scoping. It decides Positive/Negative or abstains; Neutral is left
// entirely to the neural back-up.

#ifndef ABSAGAN_ONTOLOGY_HPP_
#define ABSAGAN_ONTOLOGY_HPP_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "absagan/corpus.hpp"

namespace absagan {

enum class LexKind {
  kGeneric,           // Type1: same sentiment for every aspect
  kAspectBound,       // Type2: fixed sentiment, listed aspects only
  kContextDependent,  // Type3: sentiment depends on the aspect
};

enum class LexSentiment { kPositive, kNegative };

struct LexiconEntry {
  std::string lemma;  // lowercased, matched by token equality
  LexKind kind = LexKind::kGeneric;
  LexSentiment sentiment = LexSentiment::kPositive;    // Type1/Type2
  std::map<std::string, LexSentiment> by_aspect;       // Type3
  std::set<std::string> aspects;                       // empty means all
};

enum class VerdictOutcome { kPositive, kNegative, kInconclusive };
enum class VerdictReason { kNoHit, kConflict, kDecided };

struct OntologyVerdict {
  VerdictOutcome outcome = VerdictOutcome::kInconclusive;
  VerdictReason reason = VerdictReason::kNoHit;
  std::vector<std::size_t> hits;  // indices of fired lexicon entries
};

const char* to_string(VerdictOutcome o);
const char* to_string(VerdictReason r);

/// Lexicon line format, tab-separated:
///   lemma TAB Type1|Type2|Type3 TAB sentiment-spec TAB aspect-list
/// sentiment-spec is Positive/Negative for Type1/Type2 and semicolon-joined
/// aspect=sentiment pairs for Type3 (aspect-list must then be "-", the
/// aspects are the pair keys). aspect-list is comma-separated, "-" for empty.
/// Lines starting with '#' are comments.
std::vector<LexiconEntry> load_lexicon(const std::string& path);
std::vector<LexiconEntry> parse_lexicon(std::istream& in);

/// Collects every entry whose lemma matches a sentence token and whose
/// aspect scope covers the instance's category. Unanimous hits decide the
/// polarity; disagreement or silence abstains.
OntologyVerdict ontology_classify(const ReviewInstance& instance,
                                  const std::vector<LexiconEntry>& lexicon);

}  // namespace absagan

#endif  // ABSAGAN_ONTOLOGY_HPP_
