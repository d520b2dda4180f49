#include "cor/noise.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cor/error.hpp"

namespace cor::noise {

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Perfect: return "perfect";
    case Severity::Minor: return "minor";
    case Severity::Moderate: return "moderate";
    case Severity::Major: return "major";
    case Severity::Severe: return "severe";
  }
  return "perfect";
}

std::optional<Severity> parse_severity(std::string_view s) {
  for (auto v : kAllSeverities) {
    if (text::equals_ci(text::trim(s), to_string(v))) return v;
  }
  return std::nullopt;
}

void SeverityThresholds::validate() const {
  if (!(minor_max > 0 && minor_max < moderate_max && moderate_max < major_max && major_max < severe_max &&
        severe_max <= 1.0)) {
    throw UsageError("severity thresholds must satisfy 0 < minor < moderate < major < severe_max <= 1");
  }
}

void CorruptionConfig::validate() const {
  if (!(target_cer >= 0.0 && target_cer < 1.0)) throw UsageError("target_cer must lie in [0, 1)");
  if (edit_mix.substitute < 0 || edit_mix.insert < 0 || edit_mix.erase < 0 ||
      edit_mix.substitute + edit_mix.insert + edit_mix.erase <= 0) {
    throw UsageError("edit_mix weights must be non-negative and not all zero");
  }
  if (confusion_bias < 0 || confusion_bias > 1) throw UsageError("confusion_bias must lie in [0, 1]");
  if (landmark_corruption_rate < 0 || landmark_corruption_rate > 1) {
    throw UsageError("landmark_corruption_rate must lie in [0, 1]");
  }
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double cer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = text::to_u32(reference);
  if (ref.empty()) throw DataError("cer: empty reference");
  return static_cast<double>(edit_distance(ref, text::to_u32(hypothesis))) / static_cast<double>(ref.size());
}

std::vector<bool> edited_mask(std::string_view reference, std::string_view hypothesis) {
  const auto a = text::to_u32(reference);
  const auto b = text::to_u32(hypothesis);
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1), at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  std::vector<bool> mask(n, false);
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && a[i - 1] == b[j - 1] && at(i, j) == at(i - 1, j - 1)) {
      --i;
      --j;
    } else if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
      mask[i - 1] = true;
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      mask[i - 1] = true;
      --i;
    } else {
      if (i < n) mask[i] = true;
      --j;
    }
  }
  return mask;
}

bool span_edited(const std::vector<bool>& mask, std::string_view reference, text::Span bytes) {
  const std::size_t first = text::length(reference.substr(0, bytes.begin));
  const std::size_t last = first + text::length(reference.substr(bytes.begin, bytes.size()));
  for (std::size_t k = first; k < last && k < mask.size(); ++k) {
    if (mask[k]) return true;
  }
  return false;
}

Severity classify_cer(double c, const SeverityThresholds& t) {
  if (c <= 0.0) return Severity::Perfect;
  if (c <= t.minor_max) return Severity::Minor;
  if (c <= t.moderate_max) return Severity::Moderate;
  if (c <= t.major_max) return Severity::Major;
  return Severity::Severe;
}

Severity classify_severity(std::string_view reference, std::string_view hypothesis,
                           const SeverityThresholds& thresholds) {
  return classify_cer(cer(reference, hypothesis), thresholds);
}

namespace {

bool is_ascii_letter(char32_t c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

class Corrupter {
 public:
  Corrupter(std::string_view input, const CorruptionConfig& cfg, const Lexicon& lex)
      : input_(input), cfg_(cfg), lex_(lex), u_(text::to_u32(input)), rng_(cfg.seed, "noise") {
    cp_of_byte_.assign(input.size() + 1, 0);
    std::size_t cp = 0;
    for (std::size_t b = 0; b < input.size(); ++b) {
      const bool lead = (static_cast<unsigned char>(input[b]) & 0xC0) != 0x80;
      if (lead) ++cp;
      cp_of_byte_[b] = cp - 1;
    }
    cp_of_byte_[input.size()] = u_.size();
    pieces_.reserve(u_.size());
    for (char32_t c : u_) pieces_.emplace_back(1, c);
    protect_.assign(u_.size(), false);
    used_.assign(u_.size(), false);
    for (char32_t c : u_) {
      const bool space = c < 0x80 && text::is_space(static_cast<char>(c));
      if (!space && std::find(pool_.begin(), pool_.end(), c) == pool_.end()) {
        pool_.push_back(c);
      }
    }
    for (const auto& [key, subs] : lex.confusion_table) {
      auto k = text::to_u32(key);
      if (k.size() != 1 || subs.empty()) continue;
      for (const auto& s : subs) {
        auto v = text::to_u32(s);
        if (v.size() == 1) single_[k[0]].push_back(v[0]);
      }
    }
  }

  Corruption run(std::size_t budget) {
    Corruption out;
    if (budget == 0 || u_.empty()) {
      out.transcript = std::string(input_);
      return out;
    }
    if (cfg_.protect_relation_phrases) protect_phrases();
    std::size_t spent = mention_swaps(budget, out.confusions);
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < u_.size(); ++i) {
      if (!used_[i] && !protect_[i]) free.push_back(i);
    }
    std::size_t d = spent == 0 ? 0 : edit_distance(u_, hypothesis());
    for (int round = 0; d < budget && round < 64; ++round) {
      for (std::size_t k = d; k < budget; ++k) random_edit(free);
      d = edit_distance(u_, hypothesis());
    }
    const auto hyp = hypothesis();
    out.transcript = text::to_utf8(hyp);
    out.edits = edit_distance(u_, hyp);
    out.achieved_cer = static_cast<double>(out.edits) / static_cast<double>(u_.size());
    return out;
  }

 private:
  std::u32string hypothesis() const {
    std::u32string h;
    h.reserve(u_.size() + 8);
    for (const auto& p : pieces_) h += p;
    return h;
  }

  text::Span cp_span(text::Span bytes) const { return {cp_of_byte_[bytes.begin], cp_of_byte_[bytes.end]}; }

  void protect_phrases() {
    const std::string lower = text::ascii_lower(input_);
    const auto& inventory = lex_.phrase_inventory();
    for (std::size_t pos = 0; pos < input_.size();) {
      bool hit = false;
      for (const auto& [form, rel] : inventory) {
        if (text::match_at(input_, lower, pos, form)) {
          const auto s = cp_span({pos, pos + form.size()});
          for (std::size_t k = s.begin; k < s.end; ++k) protect_[k] = true;
          pos += form.size();
          hit = true;
          break;
        }
      }
      if (!hit) ++pos;
    }
  }

  std::size_t mention_swaps(std::size_t budget, std::vector<std::string>& applied) {
    struct Site {
      text::Span cps;
      const std::string* key;
      const std::vector<std::string>* subs;
    };
    std::vector<Site> sites;
    for (const auto& [key, subs] : lex_.confusion_table) {
      if (subs.empty() || text::length(key) < 2) continue;
      for (const auto& hit : text::find_all_ci(input_, key)) {
        const auto s = cp_span(hit);
        bool blocked = false;
        for (std::size_t k = s.begin; k < s.end; ++k) blocked = blocked || protect_[k];
        if (!blocked) sites.push_back({s, &key, &subs});
      }
    }
    std::sort(sites.begin(), sites.end(), [](const Site& a, const Site& b) {
      if (a.cps.begin != b.cps.begin) return a.cps.begin < b.cps.begin;
      return a.cps.size() > b.cps.size();
    });
    std::vector<Site> kept;
    for (const auto& s : sites) {
      if (kept.empty() || !kept.back().cps.overlaps(s.cps)) kept.push_back(s);
    }
    rng_.shuffle(kept.begin(), kept.end());
    std::size_t spent = 0;
    for (const auto& s : kept) {
      if (!rng_.chance(cfg_.landmark_corruption_rate) || !rng_.chance(cfg_.confusion_bias)) continue;
      const auto repl = text::to_u32((*s.subs)[rng_.index(s.subs->size())]);
      const auto orig = std::u32string_view(u_).substr(s.cps.begin, s.cps.size());
      const std::size_t cost = edit_distance(orig, repl);
      if (cost == 0 || spent + cost > budget) continue;
      pieces_[s.cps.begin] = repl;
      for (std::size_t k = s.cps.begin; k < s.cps.end; ++k) {
        if (k > s.cps.begin) pieces_[k].clear();
        used_[k] = true;
      }
      spent += cost;
      applied.push_back(*s.key);
    }
    return spent;
  }

  char32_t replacement_for(char32_t c) {
    if (auto it = single_.find(c); it != single_.end() && rng_.chance(cfg_.confusion_bias)) {
      return it->second[rng_.index(it->second.size())];
    }
    if (is_ascii_letter(c)) {
      const char32_t base = (c >= 'a' && c <= 'z') ? U'a' : U'A';
      char32_t r = c;
      while (r == c) r = base + static_cast<char32_t>(rng_.index(26));
      return r;
    }
    if (c >= '0' && c <= '9') {
      char32_t r = c;
      while (r == c) r = U'0' + static_cast<char32_t>(rng_.index(10));
      return r;
    }
    for (int attempt = 0; attempt < 8 && !pool_.empty(); ++attempt) {
      const char32_t r = pool_[rng_.index(pool_.size())];
      if (r != c) return r;
    }
    return c == U'x' ? U'y' : U'x';
  }

  char32_t inserted_char() {
    return pool_.empty() ? U'x' : pool_[rng_.index(pool_.size())];
  }

  void random_edit(std::vector<std::size_t>& free) {
    if (free.empty()) {
      pieces_.back().push_back(inserted_char());
      return;
    }
    const std::size_t slot = rng_.index(free.size());
    const std::size_t i = free[slot];
    free[slot] = free.back();
    free.pop_back();
    used_[i] = true;
    const auto& mix = cfg_.edit_mix;
    const double r = rng_.uniform() * (mix.substitute + mix.insert + mix.erase);
    if (r < mix.substitute) {
      pieces_[i] = std::u32string(1, replacement_for(u_[i]));
    } else if (r < mix.substitute + mix.insert) {
      pieces_[i].insert(pieces_[i].begin(), inserted_char());
    } else {
      pieces_[i].clear();
    }
  }

  std::string_view input_;
  const CorruptionConfig& cfg_;
  const Lexicon& lex_;
  std::u32string u_;
  Rng rng_;
  std::vector<std::size_t> cp_of_byte_;
  std::vector<std::u32string> pieces_;
  std::vector<bool> protect_;
  std::vector<bool> used_;
  std::vector<char32_t> pool_;
  std::map<char32_t, std::vector<char32_t>> single_;
};

}  // namespace

Corruption corrupt_to_edits(std::string_view input, std::size_t edits, const CorruptionConfig& config,
                            const Lexicon& lex) {
  config.validate();
  return Corrupter(input, config, lex).run(edits);
}

Corruption corrupt(std::string_view input, const CorruptionConfig& config, const Lexicon& lex) {
  config.validate();
  const auto n = static_cast<double>(text::length(input));
  const auto budget = static_cast<std::size_t>(std::llround(config.target_cer * n));
  return Corrupter(input, config, lex).run(budget);
}

SeverityMixture SeverityMixture::clean() { return {}; }

SeverityMixture SeverityMixture::main_test() { return {{101, 222, 258, 102, 13}}; }

SeverityMixture SeverityMixture::cross_domain() { return {{143, 207, 156, 32, 2}}; }

void SeverityMixture::validate() const {
  double sum = 0;
  for (double w : weights) {
    if (w < 0) throw UsageError("severity mixture weights must be non-negative");
    sum += w;
  }
  if (sum <= 0) throw UsageError("severity mixture weights must not all be zero");
}

std::array<std::size_t, 5> allocate_counts(const SeverityMixture& mixture, std::size_t n) {
  mixture.validate();
  const double sum = std::accumulate(mixture.weights.begin(), mixture.weights.end(), 0.0);
  std::array<std::size_t, 5> counts{};
  std::array<double, 5> rem{};
  std::size_t given = 0;
  for (std::size_t b = 0; b < 5; ++b) {
    const double quota = mixture.weights[b] * static_cast<double>(n) / sum;
    counts[b] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    rem[b] = quota - static_cast<double>(counts[b]);
    given += counts[b];
  }
  while (given < n) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < 5; ++b) {
      if (rem[b] > rem[best] + 1e-12) best = b;
    }
    ++counts[best];
    rem[best] = -1.0;
    ++given;
  }
  return counts;
}

std::vector<std::size_t> feasible_edits(Severity bucket, std::size_t length, const SeverityThresholds& t) {
  if (bucket == Severity::Perfect) return {0};
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k <= length; ++k) {
    const double c = static_cast<double>(k) / static_cast<double>(length);
    if (bucket == Severity::Severe && c > t.severe_max) break;
    if (classify_cer(c, t) == bucket) out.push_back(k);
  }
  return out;
}

std::vector<CalibratedTranscript> calibrate(const std::vector<CalibrationItem>& items, const SeverityMixture& mixture,
                                            const CorruptionConfig& base, const SeverityThresholds& thresholds,
                                            std::uint64_t seed, Policy policy) {
  thresholds.validate();
  base.validate();
  const std::size_t n = items.size();
  std::vector<CalibratedTranscript> out(n);
  if (n == 0) return out;
  const auto counts = allocate_counts(mixture, n);
  std::vector<std::size_t> lengths(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!items[i].lexicon) throw InvariantError("calibration item without a lexicon");
    lengths[i] = text::length(items[i].text);
  }

  Rng rng(seed, "calibrate");
  std::vector<std::optional<Severity>> bucket(n);
  for (auto b : {Severity::Minor, Severity::Moderate, Severity::Major, Severity::Severe, Severity::Perfect}) {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < n; ++i) {
      if (!bucket[i] && !feasible_edits(b, lengths[i], thresholds).empty()) open.push_back(i);
    }
    const std::size_t want = counts[static_cast<std::size_t>(b)];
    if (open.size() < want) {
      throw DataError("calibration: only " + std::to_string(open.size()) + " texts can realise the " +
                      std::string(to_string(b)) + " bucket, " + std::to_string(want) + " requested");
    }
    rng.shuffle(open.begin(), open.end());
    for (std::size_t k = 0; k < want; ++k) bucket[open[k]] = b;
  }

  std::vector<std::size_t> budget(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ks = feasible_edits(*bucket[i], lengths[i], thresholds);
    Rng pick(seed, "calibrate-edits", i);
    budget[i] = ks[pick.index(ks.size())];
  }

  for_each_index(n, policy, [&](std::size_t i) {
    CorruptionConfig cfg = base;
    cfg.seed = items[i].seed;
    auto c = corrupt_to_edits(items[i].text, budget[i], cfg, *items[i].lexicon);
    const auto got = classify_cer(c.achieved_cer, thresholds);
    if (got != *bucket[i]) {
      throw InvariantError("calibration: item " + std::to_string(i) + " landed in " + std::string(to_string(got)) +
                           " instead of " + std::string(to_string(*bucket[i])));
    }
    out[i] = {got, std::move(c)};
  });
  return out;
}

}  // namespace cor::noise
