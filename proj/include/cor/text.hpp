#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// UTF-8 helpers. Text is opaque Unicode; matching is byte-wise with ASCII case folding,
// which leaves multi-byte sequences untouched and keeps byte offsets stable.
namespace cor::text {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool overlaps(const Span& o) const { return begin < o.end && o.begin < end; }
  bool operator==(const Span&) const = default;
};

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view s);
std::string to_utf8(char32_t c);

/// Number of code points.
std::size_t length(std::string_view utf8);

std::string ascii_lower(std::string_view s);
bool is_ascii_alnum(char c);
bool is_space(char c);

std::string_view trim(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
bool ends_with_ci(std::string_view s, std::string_view suffix);
bool equals_ci(std::string_view a, std::string_view b);

/// True when `needle` occurs at `pos` of `hay` ignoring ASCII case, and the match does not
/// split an ASCII word: an edge of the needle that is alphanumeric must not touch another
/// alphanumeric character in `hay`. `hay_lower` is ascii_lower(hay); `needle_lower` is lowered.
bool match_at(std::string_view hay, std::string_view hay_lower, std::size_t pos,
              std::string_view needle_lower);

/// All non-overlapping left-to-right matches of `needle` (see match_at).
std::vector<Span> find_all_ci(std::string_view hay, std::string_view needle);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

/// Substitutes `{name}` placeholders. Unknown placeholders are left verbatim.
std::string fill(std::string_view tmpl,
                 const std::vector<std::pair<std::string_view, std::string>>& slots);

/// Splits on `sep`, keeping empty fields.
std::vector<std::string> split(std::string_view s, char sep);

/// Uppercases the first character when it is an ASCII letter.
std::string capitalize(std::string_view s);

}  // namespace cor::text
