#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fieldlog/core/types.h"

namespace fieldlog::classify {

// A lexicon entry: the case-folded source text and its tokens.
struct Term {
  std::string text;
  std::vector<std::string> tokens;

  static Term make(std::string_view text);
};

// Rule-classifier configuration. File format (UTF-8, line-oriented, `#`
// comments, blank lines ignored):
//
//   [subjects]            Subject<TAB>keyword   (also the section before any header)
//   [priority]            one Subject per line, a permutation of all six
//   [action]              action verbs/phrases          -> type letter B
//   [consideration]       consideration markers         -> type letter C
//   [qualitative]         qualitative descriptors       -> type digit 2
//   [quantity]            unit words counted like numbers -> type digit 1
//   [pest]                pest terms
//   [kind]                SensorKind<TAB>term  (correlation keyword hits)
//   [stopwords]           tokens excluded from keyword statistics
struct Lexicon {
  std::vector<std::pair<Subject, Term>> subject_keywords;
  std::array<Subject, 6> priority = kAllSubjects;
  std::vector<Term> action_verbs;
  std::vector<Term> consideration_markers;
  std::vector<Term> qualitative_descriptors;
  std::vector<Term> quantity_words;
  std::vector<Term> pest_terms;
  std::map<SensorKind, std::vector<Term>> kind_terms;
  std::vector<std::string> stopwords;

  // Throws Error{Validation} whose field path is "<origin>:<line>".
  static Lexicon parse(std::string_view content, std::string_view origin = "lexicon");
  static Lexicon load(const std::filesystem::path& path);
  // The shipped default (data/lexicon/default.lex, compiled in).
  static const Lexicon& builtin();
};

std::string_view builtin_lexicon_text();

}  // namespace fieldlog::classify
