#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cor/grid_env.hpp"
#include "cor/lexicon.hpp"
#include "cor/text.hpp"

namespace cor {

/// Maps landmark surface forms back to ids. Known forms are every display name, the id,
/// the id with underscores read as spaces, and synonym_table variants of those. A form
/// shared by two landmarks is dropped rather than guessed.
class MentionResolver {
 public:
  struct Match {
    text::Span span;
    std::string landmark_id;
  };

  MentionResolver(const GridEnvironment& env, const std::vector<Lexicon>& lexicons);

  /// Whole-string lookup, case-insensitive, ignoring surrounding space, quotes and a
  /// leading article.
  std::optional<std::string> resolve(std::string_view mention) const;

  /// Leftmost-longest non-overlapping occurrences in `text`.
  std::vector<Match> find_all(std::string_view text) const;

  /// Surface forms known for `id`, lowered.
  std::vector<std::string> forms_of(std::string_view id) const;

  const GridEnvironment& environment() const { return *env_; }

 private:
  const GridEnvironment* env_;
  std::vector<std::string> articles_;
  /// (lowered form, id), longest form first.
  std::vector<std::pair<std::string, std::string>> forms_;
};

}  // namespace cor
