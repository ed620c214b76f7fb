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

#include "xattr/corpus/generator.h"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "xattr/core/io.h"
#include "xattr/core/util.h"

namespace xattr::corpus {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

// Fresh pronounceable word not yet in `used`.
std::string fresh_word(Rng& rng, std::set<std::string>& used) {
  for (;;) {
    const std::size_t syllables = 2 + rng.below(2);
    std::string word;
    for (std::size_t s = 0; s < syllables; ++s) {
      word += kConsonants[rng.below(kConsonants.size())];
      word += kVowels[rng.below(kVowels.size())];
    }
    if (used.insert(word).second) return word;
  }
}

std::vector<std::string> sample_distinct(Rng& rng,
                                         const std::vector<std::string>& pool,
                                         std::size_t count) {
  std::vector<std::string> copy = pool;
  rng.shuffle(copy);
  copy.resize(std::min(count, copy.size()));
  return copy;
}

bool contains(const std::vector<std::string>& words, const std::string& w) {
  return std::find(words.begin(), words.end(), w) != words.end();
}

// Keeps the premise order of a random subset of size `count`.
std::vector<std::string> ordered_subset(Rng& rng,
                                        const std::vector<std::string>& words,
                                        std::size_t count) {
  std::vector<std::size_t> order = rng.permutation(words.size());
  order.resize(std::min(count, order.size()));
  std::sort(order.begin(), order.end());
  std::vector<std::string> out;
  for (std::size_t i : order) out.push_back(words[i]);
  return out;
}

void insert_at_random(Rng& rng, std::vector<std::string>& words,
                      const std::string& word) {
  const std::size_t position = rng.below(words.size() + 1);
  words.insert(words.begin() + static_cast<std::ptrdiff_t>(position), word);
}

TokenizedPair make_base_instance(Rng& rng, const SyntheticLexicon& lexicon,
                                 std::size_t index) {
  std::vector<std::string> premise_pool = lexicon.fillers;
  for (const auto& [a, b] : lexicon.antonyms) premise_pool.push_back(a);

  TokenizedPair pair;
  char id[32];
  std::snprintf(id, sizeof(id), "s%06zu", index);
  pair.id = id;
  pair.label = static_cast<Label>(rng.below(kNumClasses));
  pair.premise = sample_distinct(rng, premise_pool, 4 + rng.below(4));

  switch (pair.label) {
    case Label::kEntailment:
      pair.hypothesis = ordered_subset(rng, pair.premise, 1 + rng.below(3));
      break;
    case Label::kContradiction: {
      std::vector<std::size_t> with_antonym;
      for (std::size_t a = 0; a < lexicon.antonyms.size(); ++a) {
        if (contains(pair.premise, lexicon.antonyms[a].first)) {
          with_antonym.push_back(a);
        }
      }
      std::size_t chosen;
      if (with_antonym.empty()) {
        chosen = rng.below(lexicon.antonyms.size());
        pair.premise[rng.below(pair.premise.size())] =
            lexicon.antonyms[chosen].first;
      } else {
        chosen = with_antonym[rng.below(with_antonym.size())];
      }
      std::vector<std::string> others;
      for (const std::string& w : pair.premise) {
        if (w != lexicon.antonyms[chosen].first) others.push_back(w);
      }
      pair.hypothesis = ordered_subset(rng, others, rng.below(3));
      insert_at_random(rng, pair.hypothesis, lexicon.antonyms[chosen].second);
      break;
    }
    case Label::kNeutral: {
      pair.hypothesis = ordered_subset(rng, pair.premise, rng.below(3));
      const std::size_t novel_count = 1 + (rng.bernoulli(0.25) ? 1 : 0);
      for (const std::string& w :
           sample_distinct(rng, lexicon.novel, novel_count)) {
        insert_at_random(rng, pair.hypothesis, w);
      }
      break;
    }
  }
  return pair;
}

}  // namespace

std::string language_code(std::size_t index) {
  return "syn" + std::to_string(index);
}

std::vector<std::string> SyntheticLexicon::base_words() const {
  std::vector<std::string> words = fillers;
  for (const auto& [a, b] : antonyms) {
    words.push_back(a);
    words.push_back(b);
  }
  words.insert(words.end(), novel.begin(), novel.end());
  return words;
}

std::map<std::string, std::string> SyntheticLexicon::reverse(
    std::size_t language) const {
  std::map<std::string, std::string> out;
  for (const auto& [base, targets] : translations.at(language)) {
    for (const std::string& t : targets) out[t] = base;
  }
  return out;
}

void SyntheticLexicon::validate() const {
  const std::vector<std::string> words = base_words();
  for (std::size_t l = 0; l < translations.size(); ++l) {
    std::set<std::vector<std::string>> seen;
    for (const std::string& w : words) {
      auto it = translations[l].find(w);
      if (it == translations[l].end() || it->second.empty() ||
          it->second.size() > 2) {
        throw std::logic_error("base word '" + w + "' lacks a mapping");
      }
      if (!seen.insert(it->second).second) {
        throw std::logic_error("lexicon mapping is not injective");
      }
    }
  }
}

SyntheticLexicon make_lexicon(std::uint64_t seed, std::size_t languages,
                              const CorpusOptions& options) {
  Rng rng(seed ^ 0x6c6578696b6f6eULL);
  std::set<std::string> used;
  SyntheticLexicon lexicon;
  for (std::size_t i = 0; i < options.filler_words; ++i) {
    lexicon.fillers.push_back(fresh_word(rng, used));
  }
  for (std::size_t i = 0; i < options.antonym_pairs; ++i) {
    std::string a = fresh_word(rng, used);
    lexicon.antonyms.emplace_back(std::move(a), fresh_word(rng, used));
  }
  for (std::size_t i = 0; i < options.novel_words; ++i) {
    lexicon.novel.push_back(fresh_word(rng, used));
  }

  const std::vector<std::string> words = lexicon.base_words();
  lexicon.translations.resize(languages);
  for (const std::string& w : words) lexicon.translations[0][w] = {w};
  // Target words are unique across all languages, so the shared model
  // vocabulary never conflates two meanings.
  for (std::size_t l = 1; l < languages; ++l) {
    for (const std::string& w : words) {
      std::vector<std::string> targets{fresh_word(rng, used)};
      if (rng.bernoulli(options.two_word_probability)) {
        targets.push_back(fresh_word(rng, used));
      }
      lexicon.translations[l][w] = std::move(targets);
    }
  }
  lexicon.validate();
  return lexicon;
}

Label label_rule(const std::vector<std::string>& premise,
                 const std::vector<std::string>& hypothesis,
                 const AntonymPairs& antonyms) {
  for (const auto& [a, b] : antonyms) {
    if ((contains(premise, a) && contains(hypothesis, b)) ||
        (contains(premise, b) && contains(hypothesis, a))) {
      return Label::kContradiction;
    }
  }
  for (const std::string& w : hypothesis) {
    if (!contains(premise, w)) return Label::kNeutral;
  }
  return Label::kEntailment;
}

std::vector<bool> gold_highlight(const std::vector<std::string>& premise,
                                 const std::vector<std::string>& hypothesis,
                                 Label label, const AntonymPairs& antonyms) {
  std::vector<bool> mask;
  mask.reserve(premise.size() + hypothesis.size());
  auto antonym_word = [&](const std::string& w,
                          const std::vector<std::string>& other) {
    for (const auto& [a, b] : antonyms) {
      if ((w == a && contains(other, b)) || (w == b && contains(other, a))) {
        return true;
      }
    }
    return false;
  };
  for (const std::string& w : premise) {
    switch (label) {
      case Label::kEntailment:
        mask.push_back(contains(hypothesis, w));
        break;
      case Label::kContradiction:
        mask.push_back(antonym_word(w, hypothesis));
        break;
      case Label::kNeutral:
        mask.push_back(false);
        break;
    }
  }
  for (const std::string& w : hypothesis) {
    switch (label) {
      case Label::kEntailment:
        mask.push_back(contains(premise, w));
        break;
      case Label::kContradiction:
        mask.push_back(antonym_word(w, premise));
        break;
      case Label::kNeutral:
        mask.push_back(!contains(premise, w));
        break;
    }
  }
  return mask;
}

std::pair<TokenizedPair, AlignmentSet> translate(
    const SyntheticLexicon& lexicon, std::size_t language,
    const std::string& language_code, const TokenizedPair& base) {
  const auto& mapping = lexicon.translations.at(language);
  TokenizedPair out;
  out.id = base.id;
  out.language = language_code;
  out.label = base.label;
  AlignmentSet alignment;
  alignment.instance_id = base.id;
  alignment.source_language = base.language;
  alignment.target_language = language_code;

  std::size_t target_position = 0;
  auto emit = [&](const std::vector<std::string>& words,
                  std::vector<std::string>& into, std::size_t source_offset) {
    for (std::size_t k = 0; k < words.size(); ++k) {
      auto it = mapping.find(words[k]);
      if (it == mapping.end()) {
        throw std::invalid_argument("no translation for '" + words[k] + "'");
      }
      for (const std::string& t : it->second) {
        into.push_back(t);
        alignment.pairs.insert({source_offset + k, target_position++});
      }
    }
  };
  emit(base.premise, out.premise, 0);
  emit(base.hypothesis, out.hypothesis, base.premise.size());
  return {std::move(out), std::move(alignment)};
}

TokenizedPair back_translate(const SyntheticLexicon& lexicon,
                             std::size_t language, const TokenizedPair& pair) {
  const auto reverse = lexicon.reverse(language);
  auto back = [&](const std::vector<std::string>& words) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < words.size();) {
      auto it = reverse.find(words[i]);
      if (it == reverse.end()) {
        throw std::invalid_argument("unknown token '" + words[i] + "'");
      }
      out.push_back(it->second);
      i += lexicon.translations[language].at(it->second).size();
    }
    return out;
  };
  TokenizedPair out = pair;
  out.premise = back(pair.premise);
  out.hypothesis = back(pair.hypothesis);
  return out;
}

SyntheticCorpus generate(const CorpusOptions& options) {
  if (options.languages < 2) {
    throw std::invalid_argument("at least two languages are required");
  }
  if (options.n_instances < 1) {
    throw std::invalid_argument("at least one instance is required");
  }
  if (!(options.split_fraction > 0.0 && options.split_fraction < 1.0)) {
    throw std::invalid_argument("split_fraction must lie in (0, 1)");
  }

  SyntheticCorpus corpus;
  corpus.lexicon = make_lexicon(options.seed, options.languages, options);
  for (std::size_t l = 0; l < options.languages; ++l) {
    corpus.languages.push_back(language_code(l));
  }
  corpus.entries.resize(options.languages);
  corpus.alignments.resize(options.languages);
  corpus.train_count = static_cast<std::size_t>(
      options.split_fraction * double(options.n_instances));

  Rng rng(options.seed);
  for (std::size_t i = 0; i < options.n_instances; ++i) {
    TokenizedPair base = make_base_instance(rng, corpus.lexicon, i);
    base.language = corpus.languages[0];
    if (label_rule(base.premise, base.hypothesis, corpus.lexicon.antonyms) !=
        base.label) {
      throw std::logic_error("generated instance violates the label rule");
    }

    for (std::size_t l = 0; l < options.languages; ++l) {
      auto [pair, alignment] =
          translate(corpus.lexicon, l, corpus.languages[l], base);
      // The target highlight is recomputed from the back-translated words
      // and spread over every token of each marked base word.
      const TokenizedPair back = back_translate(corpus.lexicon, l, pair);
      const std::vector<bool> base_mask = gold_highlight(
          back.premise, back.hypothesis, back.label, corpus.lexicon.antonyms);
      HighlightMask mask{pair.id, pair.language,
                         std::vector<bool>(pair.num_words(), false)};
      for (const AlignmentLink& link : alignment.pairs) {
        mask.mask[link.target] = base_mask[link.source];
      }
      corpus.entries[l].push_back({std::move(pair), std::move(mask)});
      corpus.alignments[l].push_back(std::move(alignment));
    }
  }
  return corpus;
}

void write_corpus(const SyntheticCorpus& corpus,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t l = 0; l < corpus.languages.size(); ++l) {
    const auto& entries = corpus.entries[l];
    const auto split =
        entries.begin() + static_cast<std::ptrdiff_t>(corpus.train_count);
    const std::string& lang = corpus.languages[l];
    write_dataset({entries.begin(), split}, dir / (lang + ".train.jsonl"));
    write_dataset({split, entries.end()}, dir / (lang + ".test.jsonl"));
    if (l > 0) {
      write_alignments(corpus.alignments[l], dir / ("align." + lang + ".txt"));
    }
  }

  Json lexicon;
  lexicon["fillers"] = corpus.lexicon.fillers;
  lexicon["novel"] = corpus.lexicon.novel;
  lexicon["antonyms"] = corpus.lexicon.antonyms;
  lexicon["translations"] = corpus.lexicon.translations;
  write_file_atomic(dir / "lexicon.json", lexicon.dump() + "\n");

  Json meta;
  meta["languages"] = corpus.languages;
  meta["source_language"] = corpus.languages.front();
  meta["instances"] = corpus.entries.front().size();
  meta["train_count"] = corpus.train_count;
  write_file_atomic(dir / "corpus.json", meta.dump(2) + "\n");
}

CorpusData load_corpus(const std::filesystem::path& dir) {
  CorpusData data;
  Json meta;
  try {
    meta = Json::parse(read_file(dir / "corpus.json"));
    data.languages = meta.at("languages").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed corpus.json: ") + e.what());
  }
  if (data.languages.empty()) throw DataError("corpus has no languages");
  const std::string& source = data.languages.front();
  for (const std::string& lang : data.languages) {
    data.train[lang] = parse_dataset(dir / (lang + ".train.jsonl"));
    data.test[lang] = parse_dataset(dir / (lang + ".test.jsonl"));
    if (lang == source) continue;
    const auto path = dir / ("align." + lang + ".txt");
    if (!std::filesystem::exists(path)) continue;
    for (AlignmentSet& set : parse_alignments(path, source, lang)) {
      const std::string id = set.instance_id;
      data.alignments[lang].emplace(id, std::move(set));
    }
  }
  return data;
}

}  // namespace xattr::corpus
