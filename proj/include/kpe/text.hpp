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

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kpe {

// ASCII case folding; bytes outside ASCII pass through untouched.
std::string to_lower(std::string_view s);

// Node key for the co-occurrence graph: the lowercased surface form.
inline std::string normalize_token_for_node(std::string_view token) { return to_lower(token); }

// Whitespace split, then each leading/trailing ASCII punctuation character is
// detached as a token of its own. Inner punctuation ("e.g", "state-of-the-art")
// stays inside the word.
std::vector<std::string> tokenize(std::string_view text);

// Evaluation-space words of a phrase: lowercase, punctuation (ASCII and the
// common Unicode punctuation blocks) replaced by a space, Porter-stemmed.
std::vector<std::string> normalized_words(std::string_view phrase);

// normalized_words joined with single spaces.
std::string normalize_phrase(std::string_view phrase);

std::string join(const std::vector<std::string>& parts, std::string_view sep = " ");

}  // namespace kpe
