#pragma once

#include <map>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "cor/direction.hpp"

namespace cor {

/// A template compiled to an anchored, case-insensitive regex. `slots[i]` names capture
/// group i + 1.
struct TemplatePattern {
  std::string source;
  std::regex re;
  std::vector<std::string> slots;
};

struct LexiconPatterns {
  std::vector<std::pair<std::string, Relation>> phrases;
  std::vector<TemplatePattern> anchors;
  std::map<Relation, std::vector<TemplatePattern>> cues;
  std::map<Relation, std::vector<TemplatePattern>> hedged;
  std::regex from_to;
};

std::string regex_escape(std::string_view s);

/// {cue_clauses} is greedy, {marker} matches one of `markers`, every other slot is lazy.
TemplatePattern compile_template(const std::string& tmpl, const std::vector<std::string>& markers);

}  // namespace cor
