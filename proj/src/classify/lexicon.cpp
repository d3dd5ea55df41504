#include "fieldlog/classify/lexicon.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fieldlog/core/error.h"
#include "fieldlog/core/text.h"

namespace fieldlog::classify {
namespace {

constexpr std::string_view kBuiltin =
#include "builtin_lexicon.inc"
    ;

enum class Section { Subjects, Priority, Action, Consideration, Qualitative, Quantity, Pest, Kind, Stopwords };

std::optional<Section> section_named(std::string_view name) {
  if (name == "subjects") return Section::Subjects;
  if (name == "priority") return Section::Priority;
  if (name == "action") return Section::Action;
  if (name == "consideration") return Section::Consideration;
  if (name == "qualitative") return Section::Qualitative;
  if (name == "quantity") return Section::Quantity;
  if (name == "pest") return Section::Pest;
  if (name == "kind") return Section::Kind;
  if (name == "stopwords") return Section::Stopwords;
  return std::nullopt;
}

}  // namespace

Term Term::make(std::string_view raw) {
  Term t;
  t.text = text::case_fold(text::trim(raw));
  t.tokens = text::tokenize(t.text);
  return t;
}

Lexicon Lexicon::parse(std::string_view content, std::string_view origin) {
  Lexicon lex;
  Section section = Section::Subjects;
  std::vector<Subject> priority;
  std::map<std::string, Subject> keyword_owner;
  std::size_t line_no = 0;

  const auto where = [&] { return std::string(origin) + ":" + std::to_string(line_no); };
  const auto split_tab = [&](std::string_view line) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) fail_validation("expected <name><TAB><term>", where());
    return std::pair{text::trim(line.substr(0, tab)), text::trim(line.substr(tab + 1))};
  };
  const auto term_of = [&](std::string_view raw) {
    auto term = Term::make(raw);
    if (term.tokens.empty()) fail_validation("term has no word characters", where());
    return term;
  };

  std::istringstream in{std::string(content)};
  std::string raw_line;
  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string_view line = raw_line;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::is_blank(line) || text::trim(line).front() == '#') continue;
    const auto trimmed = text::trim(line);
    if (trimmed.front() == '[') {
      if (trimmed.back() != ']') fail_validation("malformed section header", where());
      const auto s = section_named(trimmed.substr(1, trimmed.size() - 2));
      if (!s) fail_validation("unknown section " + std::string(trimmed), where());
      section = *s;
      continue;
    }
    switch (section) {
      case Section::Subjects: {
        const auto [name, keyword] = split_tab(line);
        const auto subject = parse_subject(name);
        if (!subject) fail_validation("unknown subject '" + std::string(name) + "'", where());
        auto term = term_of(keyword);
        const auto [it, inserted] = keyword_owner.emplace(term.text, *subject);
        if (!inserted) {
          if (it->second != *subject) {
            fail_validation("keyword '" + term.text + "' already maps to " +
                                std::string(to_string(it->second)),
                            where());
          }
          break;
        }
        lex.subject_keywords.emplace_back(*subject, std::move(term));
        break;
      }
      case Section::Priority: {
        const auto subject = parse_subject(trimmed);
        if (!subject) fail_validation("unknown subject '" + std::string(trimmed) + "'", where());
        priority.push_back(*subject);
        break;
      }
      case Section::Action: lex.action_verbs.push_back(term_of(trimmed)); break;
      case Section::Consideration: lex.consideration_markers.push_back(term_of(trimmed)); break;
      case Section::Qualitative: lex.qualitative_descriptors.push_back(term_of(trimmed)); break;
      case Section::Quantity: lex.quantity_words.push_back(term_of(trimmed)); break;
      case Section::Pest: lex.pest_terms.push_back(term_of(trimmed)); break;
      case Section::Kind: {
        const auto [name, term] = split_tab(line);
        const auto kind = parse_sensor_kind(name);
        if (!kind) fail_validation("unknown sensor kind '" + std::string(name) + "'", where());
        lex.kind_terms[*kind].push_back(term_of(term));
        break;
      }
      case Section::Stopwords: lex.stopwords.push_back(text::case_fold(trimmed)); break;
    }
  }

  if (!priority.empty()) {
    std::set<Subject> seen(priority.begin(), priority.end());
    if (priority.size() != kAllSubjects.size() || seen.size() != kAllSubjects.size()) {
      fail_validation("priority must list each of the six subjects exactly once",
                      std::string(origin) + ":priority");
    }
    std::copy(priority.begin(), priority.end(), lex.priority.begin());
  }
  std::sort(lex.stopwords.begin(), lex.stopwords.end());
  lex.stopwords.erase(std::unique(lex.stopwords.begin(), lex.stopwords.end()), lex.stopwords.end());
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_validation("cannot read lexicon file " + path.string(), "lexicon");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.filename().string());
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex = parse(kBuiltin, "default.lex");
  return lex;
}

std::string_view builtin_lexicon_text() { return kBuiltin; }

}  // namespace fieldlog::classify
