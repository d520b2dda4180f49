#include "cor/resolver.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace cor {

namespace {

std::string strip_mention(std::string_view s) {
  s = text::trim(s);
  auto strip = [&](std::string_view q) {
    while (s.size() >= q.size() && s.substr(0, q.size()) == q) s.remove_prefix(q.size());
    while (s.size() >= q.size() && s.substr(s.size() - q.size()) == q) s.remove_suffix(q.size());
  };
  for (std::string_view q : {"\"", "'", "“", "”", "「", "」", ".", ",", "。", "，"}) strip(q);
  return std::string(text::trim(s));
}

}  // namespace

MentionResolver::MentionResolver(const GridEnvironment& env, const std::vector<Lexicon>& lexicons)
    : env_(&env) {
  std::map<std::string, std::set<std::string>> owners;
  auto add = [&](const std::string& form, const std::string& id) {
    auto lowered = text::ascii_lower(text::trim(form));
    if (!lowered.empty()) owners[lowered].insert(id);
  };
  for (const auto& lex : lexicons) {
    for (const auto& a : lex.articles) articles_.push_back(text::ascii_lower(a));
  }
  for (const auto& lm : env.landmarks()) {
    std::vector<std::string> base{lm.id, text::replace_all(lm.id, "_", " ")};
    for (const auto& [lang, name] : lm.display_names) base.push_back(name);
    for (const auto& form : base) {
      add(form, lm.id);
      for (const auto& lex : lexicons) {
        for (const auto& [key, subs] : lex.synonym_table) {
          const auto hits = text::find_all_ci(form, key);
          if (hits.empty()) continue;
          for (const auto& sub : subs) {
            std::string variant = form;
            for (auto it = hits.rbegin(); it != hits.rend(); ++it) variant.replace(it->begin, it->size(), sub);
            add(variant, lm.id);
          }
        }
      }
    }
  }
  for (const auto& [form, ids] : owners) {
    if (ids.size() == 1) forms_.emplace_back(form, *ids.begin());
  }
  std::stable_sort(forms_.begin(), forms_.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
}

std::optional<std::string> MentionResolver::resolve(std::string_view mention) const {
  std::string m = text::ascii_lower(strip_mention(mention));
  auto lookup = [&](std::string_view key) -> std::optional<std::string> {
    for (const auto& [form, id] : forms_) {
      if (form == key) return id;
    }
    return std::nullopt;
  };
  if (auto hit = lookup(m)) return hit;
  for (const auto& a : articles_) {
    if (m.size() > a.size() && m.compare(0, a.size(), a) == 0) {
      if (auto hit = lookup(text::trim(std::string_view(m).substr(a.size())))) return hit;
    }
  }
  return std::nullopt;
}

std::vector<MentionResolver::Match> MentionResolver::find_all(std::string_view hay) const {
  std::vector<Match> out;
  const std::string lower = text::ascii_lower(hay);
  std::size_t pos = 0;
  while (pos < hay.size()) {
    const Match* best = nullptr;
    Match cand;
    for (const auto& [form, id] : forms_) {
      if (text::match_at(hay, lower, pos, form)) {
        cand = {{pos, pos + form.size()}, id};
        best = &cand;
        break;
      }
    }
    if (best) {
      out.push_back(*best);
      pos = best->span.end;
    } else {
      ++pos;
    }
  }
  return out;
}

std::vector<std::string> MentionResolver::forms_of(std::string_view id) const {
  std::vector<std::string> out;
  for (const auto& [form, owner] : forms_) {
    if (owner == id) out.push_back(form);
  }
  return out;
}

}  // namespace cor
