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

#include "kpe/text.hpp"

#include <cstdint>

#include "kpe/porter_stemmer.hpp"

namespace kpe {
namespace {

bool ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
         (c >= 123 && c <= 126);
}

bool unicode_punct(char32_t cp) {
  if (cp < 0x80) return ascii_punct(static_cast<unsigned char>(cp));
  // Latin-1 punctuation.
  switch (cp) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
      return true;
    default:
      break;
  }
  return (cp >= 0x2010 && cp <= 0x2027) ||  // dashes, quotes, bullets, ellipsis
         (cp >= 0x2030 && cp <= 0x205E) ||  // per-mille, primes, brackets
         (cp >= 0x2E00 && cp <= 0x2E7F) ||  // supplemental punctuation
         (cp >= 0x3001 && cp <= 0x3003) || (cp >= 0x3008 && cp <= 0x3011) ||
         (cp >= 0xFF01 && cp <= 0xFF0F) || cp == 0xFF1A || cp == 0xFF1B || cp == 0xFF1F;
}

// Decodes one UTF-8 sequence at s[i]; invalid bytes decode as themselves.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto c0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) {
    return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  if (c0 < 0x80) {
    ++i;
    return c0;
  }
  if ((c0 & 0xE0) == 0xC0 && cont(1)) {
    char32_t cp = ((c0 & 0x1F) << 6) | (static_cast<unsigned char>(s[i + 1]) & 0x3F);
    i += 2;
    return cp;
  }
  if ((c0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    char32_t cp = ((c0 & 0x0F) << 12) | ((static_cast<unsigned char>(s[i + 1]) & 0x3F) << 6) |
                  (static_cast<unsigned char>(s[i + 2]) & 0x3F);
    i += 3;
    return cp;
  }
  if ((c0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    char32_t cp = ((c0 & 0x07) << 18) | ((static_cast<unsigned char>(s[i + 1]) & 0x3F) << 12) |
                  ((static_cast<unsigned char>(s[i + 2]) & 0x3F) << 6) |
                  (static_cast<unsigned char>(s[i + 3]) & 0x3F);
    i += 4;
    return cp;
  }
  ++i;
  return c0;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && ascii_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t end = i;
    while (end < text.size() && !ascii_space(static_cast<unsigned char>(text[end]))) ++end;
    if (end == i) break;

    std::size_t lo = i, hi = end;
    while (lo < hi && ascii_punct(static_cast<unsigned char>(text[lo]))) {
      tokens.emplace_back(1, text[lo]);
      ++lo;
    }
    std::vector<std::string> trailing;
    while (hi > lo && ascii_punct(static_cast<unsigned char>(text[hi - 1]))) {
      trailing.emplace_back(1, text[hi - 1]);
      --hi;
    }
    if (hi > lo) tokens.emplace_back(text.substr(lo, hi - lo));
    tokens.insert(tokens.end(), trailing.rbegin(), trailing.rend());
    i = end;
  }
  return tokens;
}

std::vector<std::string> normalized_words(std::string_view phrase) {
  std::string spaced;
  spaced.reserve(phrase.size());
  for (std::size_t i = 0; i < phrase.size();) {
    const std::size_t start = i;
    const char32_t cp = decode_utf8(phrase, i);
    if (unicode_punct(cp)) {
      spaced.push_back(' ');
    } else {
      spaced.append(phrase.substr(start, i - start));
    }
  }
  const std::string lowered = to_lower(spaced);
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && ascii_space(static_cast<unsigned char>(lowered[i]))) ++i;
    std::size_t end = i;
    while (end < lowered.size() && !ascii_space(static_cast<unsigned char>(lowered[end]))) ++end;
    if (end > i) words.push_back(porter_stem(std::string_view(lowered).substr(i, end - i)));
    i = end;
  }
  return words;
}

std::string normalize_phrase(std::string_view phrase) { return join(normalized_words(phrase)); }

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace kpe
