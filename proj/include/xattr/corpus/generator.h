/*
 * Copyright 2026 The xattr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Synthetic multiway-parallel NLI corpora with gold word alignments and gold
// rationales.
//
// Labels follow a set-based rule over content words:
//   contradiction  premise and hypothesis contain an antonym pair
//   entailment     otherwise, if hypothesis words are a subset of premise words
//   neutral        otherwise
// The base vocabulary is split into pools so the label is also visible from
// the hypothesis bag alone: antonym "B" words only ever occur in
// contradiction hypotheses and "novel" words only in neutral hypotheses.
// That keeps the task learnable by a mean-pooling classifier.

#ifndef XATTR_CORPUS_GENERATOR_H_
#define XATTR_CORPUS_GENERATOR_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xattr/core/types.h"

namespace xattr::corpus {

struct SyntheticLexicon {
  std::vector<std::string> fillers;
  std::vector<std::string> novel;
  // (premise-side word, hypothesis-side word).
  std::vector<std::pair<std::string, std::string>> antonyms;
  // translations[l] maps every base word to 1 or 2 words of language l.
  // Language 0 is the base language and maps each word to itself.
  std::vector<std::map<std::string, std::vector<std::string>>> translations;

  std::size_t num_languages() const { return translations.size(); }
  std::vector<std::string> base_words() const;
  // Target token -> base word, for language l.
  std::map<std::string, std::string> reverse(std::size_t language) const;
  // Throws std::logic_error when some base word lacks a mapping or two base
  // words share a target sequence.
  void validate() const;
};

struct CorpusOptions {
  std::uint64_t seed = 7;
  std::size_t n_instances = 1000;
  std::size_t languages = 3;
  double split_fraction = 0.8;
  std::size_t filler_words = 40;
  std::size_t antonym_pairs = 10;
  std::size_t novel_words = 20;
  double two_word_probability = 0.2;
};

struct SyntheticCorpus {
  SyntheticLexicon lexicon;
  std::vector<std::string> languages;  // "syn0", "syn1", ...
  // entries[l][i]: instance i in language l; ids are shared across languages.
  std::vector<std::vector<DatasetEntry>> entries;
  // alignments[l][i]: base-language instance i -> language l (l >= 1).
  // alignments[0] holds identity alignments.
  std::vector<std::vector<AlignmentSet>> alignments;
  std::size_t train_count = 0;
};

std::string language_code(std::size_t index);

SyntheticLexicon make_lexicon(std::uint64_t seed, std::size_t languages,
                              const CorpusOptions& options = {});

// Throws std::invalid_argument for languages < 2, n_instances < 1 or
// split_fraction outside (0, 1).
SyntheticCorpus generate(const CorpusOptions& options);

using AntonymPairs = std::vector<std::pair<std::string, std::string>>;

Label label_rule(const std::vector<std::string>& premise,
                 const std::vector<std::string>& hypothesis,
                 const AntonymPairs& antonyms);

// Words participating in the label decision, premise then hypothesis:
// shared words (entailment), antonym words (contradiction) or
// hypothesis-only words (neutral).
std::vector<bool> gold_highlight(const std::vector<std::string>& premise,
                                 const std::vector<std::string>& hypothesis,
                                 Label label, const AntonymPairs& antonyms);

// Translates a base-language instance into language l. Returns the
// translated pair (same id and label) and the base -> target alignment.
std::pair<TokenizedPair, AlignmentSet> translate(
    const SyntheticLexicon& lexicon, std::size_t language,
    const std::string& language_code, const TokenizedPair& base);

// Maps a language-l instance back to base words (one per base word).
TokenizedPair back_translate(const SyntheticLexicon& lexicon,
                             std::size_t language, const TokenizedPair& pair);

// --- on-disk layout ---------------------------------------------------------
//   <dir>/<lang>.train.jsonl, <dir>/<lang>.test.jsonl
//   <dir>/align.<lang>.txt      (base language -> lang)
//   <dir>/lexicon.json, <dir>/corpus.json

struct CorpusData {
  std::vector<std::string> languages;  // first is the source language
  std::map<std::string, std::vector<DatasetEntry>> train;
  std::map<std::string, std::vector<DatasetEntry>> test;
  // alignments[lang][instance id]
  std::map<std::string, std::map<std::string, AlignmentSet>> alignments;

  const std::string& source_language() const { return languages.front(); }
};

void write_corpus(const SyntheticCorpus& corpus,
                  const std::filesystem::path& dir);
CorpusData load_corpus(const std::filesystem::path& dir);

}  // namespace xattr::corpus

#endif  // XATTR_CORPUS_GENERATOR_H_
