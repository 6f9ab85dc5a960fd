// Copyright 2026 The kpegraph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kpe/porter_stemmer.hpp"

#include <array>
#include <utility>

namespace kpe {
namespace {

class Stemmer {
 public:
  explicit Stemmer(std::string_view w) : b_(w) {}

  std::string run() {
    if (b_.size() <= 1) return b_;
    step1a();
    step1b();
    step1c();
    step2();
    step3();
    step4();
    step5a();
    step5b();
    return b_;
  }

 private:
  struct Rule {
    std::string_view suffix;
    std::string_view replacement;
  };

  bool consonant(std::size_t i) const {
    switch (b_[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !consonant(i - 1);
      default:
        return true;
    }
  }

  // Number of VC sequences in b_[0, len).
  int measure(std::size_t len) const {
    int m = 0;
    std::size_t i = 0;
    while (i < len && consonant(i)) ++i;
    while (i < len) {
      while (i < len && !consonant(i)) ++i;
      if (i >= len) break;
      while (i < len && consonant(i)) ++i;
      ++m;
    }
    return m;
  }

  bool has_vowel(std::size_t len) const {
    for (std::size_t i = 0; i < len; ++i)
      if (!consonant(i)) return true;
    return false;
  }

  bool ends_double_consonant(std::size_t len) const {
    return len >= 2 && b_[len - 1] == b_[len - 2] && consonant(len - 1);
  }

  // *o: stem ends consonant-vowel-consonant, last consonant not w, x or y.
  bool ends_cvc(std::size_t len) const {
    if (len < 3) return false;
    if (!consonant(len - 1) || consonant(len - 2) || !consonant(len - 3)) return false;
    const char c = b_[len - 1];
    return c != 'w' && c != 'x' && c != 'y';
  }

  bool ends_with(std::string_view s) const {
    return b_.size() >= s.size() && std::string_view(b_).substr(b_.size() - s.size()) == s;
  }

  void replace_suffix(std::size_t suffix_len, std::string_view rep) {
    b_.resize(b_.size() - suffix_len);
    b_.append(rep);
  }

  // The first rule whose suffix matches decides the step; its condition on the
  // remaining stem either admits the replacement or ends the step unchanged.
  template <std::size_t N, typename Cond>
  void apply_first(const std::array<Rule, N>& rules, Cond cond) {
    for (const Rule& r : rules) {
      if (!ends_with(r.suffix)) continue;
      const std::size_t stem = b_.size() - r.suffix.size();
      if (cond(stem)) replace_suffix(r.suffix.size(), r.replacement);
      return;
    }
  }

  void step1a() {
    if (ends_with("sses")) replace_suffix(4, "ss");
    else if (ends_with("ies")) replace_suffix(3, "i");
    else if (ends_with("ss")) return;
    else if (ends_with("s")) replace_suffix(1, "");
  }

  void step1b() {
    if (ends_with("eed")) {
      if (measure(b_.size() - 3) > 0) replace_suffix(3, "ee");
      return;
    }
    std::size_t cut = 0;
    if (ends_with("ed") && has_vowel(b_.size() - 2)) cut = 2;
    else if (ends_with("ing") && has_vowel(b_.size() - 3)) cut = 3;
    if (cut == 0) return;
    b_.resize(b_.size() - cut);

    if (ends_with("at")) replace_suffix(2, "ate");
    else if (ends_with("bl")) replace_suffix(2, "ble");
    else if (ends_with("iz")) replace_suffix(2, "ize");
    else if (ends_double_consonant(b_.size())) {
      const char c = b_.back();
      if (c != 'l' && c != 's' && c != 'z') b_.pop_back();
    } else if (measure(b_.size()) == 1 && ends_cvc(b_.size())) {
      b_.push_back('e');
    }
  }

  void step1c() {
    if (ends_with("y") && has_vowel(b_.size() - 1)) b_.back() = 'i';
  }

  void step2() {
    static constexpr std::array<Rule, 20> rules{{
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},  {"anci", "ance"},
        {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},    {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"},
    }};
    // Rules sharing a tail are ordered so the longer suffix is tried first.
    static constexpr std::array<Rule, 20> ordered = [] {
      std::array<Rule, 20> r{};
      std::size_t n = 0;
      for (const Rule& x : rules) r[n++] = x;
      for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = i + 1; j < r.size(); ++j)
          if (r[j].suffix.size() > r[i].suffix.size() &&
              r[j].suffix.substr(r[j].suffix.size() - r[i].suffix.size()) == r[i].suffix)
            std::swap(r[i], r[j]);
      return r;
    }();
    apply_first(ordered, [this](std::size_t stem) { return measure(stem) > 0; });
  }

  void step3() {
    static constexpr std::array<Rule, 7> rules{{
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""},
    }};
    apply_first(rules, [this](std::size_t stem) { return measure(stem) > 0; });
  }

  void step4() {
    static constexpr std::array<Rule, 19> rules{{
        {"al", ""},   {"ance", ""}, {"ence", ""}, {"er", ""},  {"ic", ""},
        {"able", ""}, {"ible", ""}, {"ant", ""},  {"ement", ""}, {"ment", ""},
        {"ent", ""},  {"ion", ""},  {"ou", ""},   {"ism", ""}, {"ate", ""},
        {"iti", ""},  {"ous", ""},  {"ive", ""},  {"ize", ""},
    }};
    apply_first(rules, [this](std::size_t stem) {
      if (measure(stem) <= 1) return false;
      if (b_.compare(stem, std::string::npos, "ion") == 0)
        return stem > 0 && (b_[stem - 1] == 's' || b_[stem - 1] == 't');
      return true;
    });
  }

  void step5a() {
    if (!ends_with("e")) return;
    const std::size_t stem = b_.size() - 1;
    const int m = measure(stem);
    if (m > 1 || (m == 1 && !ends_cvc(stem))) b_.pop_back();
  }

  void step5b() {
    if (measure(b_.size()) > 1 && ends_double_consonant(b_.size()) && b_.back() == 'l')
      b_.pop_back();
  }

  std::string b_;
};

}  // namespace

std::string porter_stem(std::string_view word) { return Stemmer(word).run(); }

}  // namespace kpe
