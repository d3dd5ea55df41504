#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fieldlog/classify/lexicon.h"
#include "fieldlog/core/json.h"
#include "fieldlog/core/store.h"
#include "fieldlog/core/types.h"

namespace fieldlog::classify {

// Most keyword hits wins; ties follow the lexicon priority; no hits -> Others.
Subject classify_subject(std::string_view transcript, const Lexicon& lexicon);

// Letter: C if a consideration marker is present, else B if an action verb is,
// else A. Digit: 1 if a quantitative token is present, else 2 if a qualitative
// descriptor is, else 0. C0 becomes C2.
TypeCode classify_type_code(std::string_view transcript, const Lexicon& lexicon);

// Rule labels for one unit. Importance has no rule and stays Unclassified.
ClassificationUnit classify(std::string_view transcript, const Lexicon& lexicon);

// Case-folded pest terms from the lexicon that occur in the transcript.
std::set<std::string> detect_pest_keywords(std::string_view transcript, const Lexicon& lexicon);

struct LabelPatch {
  std::optional<Subject> subject;
  std::optional<Importance> importance;
  std::optional<TypeCode> type_code;

  bool empty() const { return !subject && !importance && !type_code; }
  ClassificationUnit apply_to(ClassificationUnit unit) const;
};

struct Annotation {
  std::size_t unit_index = 0;
  LabelPatch labels;
  // When non-empty (k >= 2), the unit is replaced by k units, each being the
  // original unit with `labels` and then split[i] applied.
  std::vector<LabelPatch> split;
};

// {"subject"?, "importance"?, "type_code"?}
LabelPatch decode_label_patch(const Json& j, std::string_view path);
// {"unit_index"?: 0, "subject"?, "importance"?, "type_code"?, "split"?: [patch, ...]}
Annotation decode_annotation(const Json& j);

// Manual labelling; resulting units carry source=Manual. Transcript untouched.
Message annotate(Store& store, std::string_view message_id, const Annotation& annotation);
Message annotate(WriteSession& session, std::string_view message_id, const Annotation& annotation);

// Re-runs the rule classifier over Rule-sourced units; Manual units are never
// changed.
Message reclassify(Store& store, std::string_view message_id, const Lexicon& lexicon);

}  // namespace fieldlog::classify
