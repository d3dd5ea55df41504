#include "fieldlog/classify/classify.h"

#include <algorithm>
#include <array>

#include "fieldlog/core/error.h"
#include "fieldlog/core/text.h"

namespace fieldlog::classify {
namespace {

bool any_term(std::span<const std::string> tokens, const std::vector<Term>& terms) {
  return std::any_of(terms.begin(), terms.end(),
                     [&](const Term& t) { return text::count_term(tokens, t.tokens) > 0; });
}

// A digit run that starts a word or number ("23", "23.5", "10cm", "300ppm")
// is quantitative. Runs glued to a preceding letter ("CO2", "House1") and
// identifiers written as "#4" are names, not quantities.
bool has_numeral(std::string_view transcript) {
  for (std::size_t i = 0; i < transcript.size(); ++i) {
    const char c = transcript[i];
    if (c < '0' || c > '9') continue;
    std::size_t start = i;
    while (start > 0 && transcript[start - 1] >= '0' && transcript[start - 1] <= '9') --start;
    const char before = start > 0 ? transcript[start - 1] : ' ';
    const bool named = before == '#' || (before >= 'a' && before <= 'z') || (before >= 'A' && before <= 'Z');
    if (named) {
      while (i + 1 < transcript.size() && transcript[i + 1] >= '0' && transcript[i + 1] <= '9') ++i;
      continue;
    }
    return true;
  }
  return false;
}

}  // namespace

Subject classify_subject(std::string_view transcript, const Lexicon& lexicon) {
  const auto tokens = text::tokenize(transcript);
  std::array<std::size_t, kAllSubjects.size()> hits{};
  for (const auto& [subject, term] : lexicon.subject_keywords) {
    hits[static_cast<std::size_t>(subject)] += text::count_term(tokens, term.tokens);
  }
  Subject best = Subject::Others;
  std::size_t best_hits = 0;
  for (const Subject s : lexicon.priority) {
    const auto h = hits[static_cast<std::size_t>(s)];
    if (h > best_hits) {
      best = s;
      best_hits = h;
    }
  }
  return best;
}

TypeCode classify_type_code(std::string_view transcript, const Lexicon& lexicon) {
  const auto tokens = text::tokenize(transcript);
  char letter = 'A';
  if (any_term(tokens, lexicon.consideration_markers)) letter = 'C';
  else if (any_term(tokens, lexicon.action_verbs)) letter = 'B';

  int digit = 0;
  if (has_numeral(transcript) || any_term(tokens, lexicon.quantity_words)) digit = 1;
  else if (any_term(tokens, lexicon.qualitative_descriptors)) digit = 2;

  switch (letter) {
    case 'A': return digit == 0 ? TypeCode::A0 : digit == 1 ? TypeCode::A1 : TypeCode::A2;
    case 'B': return digit == 0 ? TypeCode::B0 : digit == 1 ? TypeCode::B1 : TypeCode::B2;
    default: return digit == 1 ? TypeCode::C1 : TypeCode::C2;  // no C0 row exists
  }
}

ClassificationUnit classify(std::string_view transcript, const Lexicon& lexicon) {
  return ClassificationUnit{classify_subject(transcript, lexicon), Importance::Unclassified,
                            classify_type_code(transcript, lexicon), LabelSource::Rule};
}

std::set<std::string> detect_pest_keywords(std::string_view transcript, const Lexicon& lexicon) {
  const auto tokens = text::tokenize(transcript);
  std::set<std::string> found;
  for (const auto& term : lexicon.pest_terms) {
    if (text::count_term(tokens, term.tokens) > 0) found.insert(term.text);
  }
  return found;
}

ClassificationUnit LabelPatch::apply_to(ClassificationUnit unit) const {
  if (subject) unit.subject = *subject;
  if (importance) unit.importance = *importance;
  if (type_code) unit.type_code = *type_code;
  unit.source = LabelSource::Manual;
  return unit;
}

LabelPatch decode_label_patch(const Json& j, std::string_view path) {
  if (!j.is_object()) fail_validation("expected an object", std::string(path));
  LabelPatch p;
  if (const auto* v = json_field::optional(j, "subject")) {
    p.subject = json_field::as_subject(*v, json_field::join(path, "subject"));
  }
  if (const auto* v = json_field::optional(j, "importance")) {
    p.importance = json_field::as_importance(*v, json_field::join(path, "importance"));
  }
  if (const auto* v = json_field::optional(j, "type_code")) {
    p.type_code = json_field::as_type_code(*v, json_field::join(path, "type_code"));
  }
  return p;
}

Annotation decode_annotation(const Json& j) {
  Annotation a;
  a.labels = decode_label_patch(j, "");
  if (const auto* v = json_field::optional(j, "unit_index")) {
    const auto idx = json_field::as_integer(*v, "unit_index");
    if (idx < 0) fail_validation("unit_index must be >= 0", "unit_index");
    a.unit_index = static_cast<std::size_t>(idx);
  }
  if (const auto* v = json_field::optional(j, "split")) {
    if (!v->is_array()) fail_validation("expected an array", "split");
    for (std::size_t i = 0; i < v->size(); ++i) {
      a.split.push_back(decode_label_patch((*v)[i], "split[" + std::to_string(i) + "]"));
    }
  }
  return a;
}

Message annotate(WriteSession& session, std::string_view message_id, const Annotation& a) {
  auto message = session.get_message(message_id);
  if (!message) fail_not_found("message '" + std::string(message_id) + "' not found");
  auto& units = message->classification_units;
  if (a.unit_index >= units.size()) {
    fail_validation("unit_index " + std::to_string(a.unit_index) + " out of range (message has " +
                        std::to_string(units.size()) + " units)",
                    "unit_index");
  }
  if (a.split.size() == 1) fail_validation("a split needs at least 2 units", "split");
  if (a.split.empty() && a.labels.empty()) fail_validation("no labels supplied", "labels");

  const auto base = a.labels.apply_to(units[a.unit_index]);
  if (a.split.empty()) {
    units[a.unit_index] = base;
  } else {
    std::vector<ClassificationUnit> parts;
    for (const auto& patch : a.split) parts.push_back(patch.apply_to(base));
    units.erase(units.begin() + static_cast<std::ptrdiff_t>(a.unit_index));
    units.insert(units.begin() + static_cast<std::ptrdiff_t>(a.unit_index), parts.begin(),
                 parts.end());
  }
  session.update_units(message_id, units);
  return *message;
}

Message annotate(Store& store, std::string_view message_id, const Annotation& annotation) {
  return store.write([&](WriteSession& s) { return annotate(s, message_id, annotation); });
}

Message reclassify(Store& store, std::string_view message_id, const Lexicon& lexicon) {
  return store.write([&](WriteSession& s) {
    auto message = s.get_message(message_id);
    if (!message) fail_not_found("message '" + std::string(message_id) + "' not found");
    const auto rule = classify(message->transcript, lexicon);
    for (auto& unit : message->classification_units) {
      if (unit.source == LabelSource::Manual) continue;
      unit.subject = rule.subject;
      unit.type_code = rule.type_code;
    }
    s.update_units(message_id, message->classification_units);
    return *message;
  });
}

}  // namespace fieldlog::classify
