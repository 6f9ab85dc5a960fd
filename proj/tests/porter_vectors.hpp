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

#include <string_view>
#include <utility>

namespace kpe::testdata {

// Worked examples printed with the original 1980 description of the
// algorithm, step by step.
inline constexpr std::pair<std::string_view, std::string_view> kPorterVectors[] = {
    {"caresses", "caress"},   {"ponies", "poni"},         {"ties", "ti"},
    {"caress", "caress"},     {"cats", "cat"},            {"feed", "feed"},
    {"agreed", "agre"},       {"plastered", "plaster"},   {"bled", "bled"},
    {"motoring", "motor"},    {"sing", "sing"},           {"conflated", "conflat"},
    {"troubled", "troubl"},   {"sized", "size"},          {"hopping", "hop"},
    {"tanned", "tan"},        {"falling", "fall"},        {"hissing", "hiss"},
    {"fizzed", "fizz"},       {"failing", "fail"},        {"filing", "file"},
    {"happy", "happi"},       {"sky", "sky"},             {"relational", "relat"},
    {"conditional", "condit"}, {"rational", "ration"},    {"valenci", "valenc"},
    {"hesitanci", "hesit"},   {"digitizer", "digit"},     {"conformabli", "conform"},
    {"radicalli", "radic"},   {"differentli", "differ"},  {"vileli", "vile"},
    {"analogousli", "analog"}, {"vietnamization", "vietnam"}, {"predication", "predic"},
    {"operator", "oper"},     {"feudalism", "feudal"},    {"decisiveness", "decis"},
    {"hopefulness", "hope"},  {"callousness", "callous"}, {"formaliti", "formal"},
    {"sensitiviti", "sensit"}, {"sensibiliti", "sensibl"}, {"triplicate", "triplic"},
    {"formative", "form"},    {"formalize", "formal"},    {"electriciti", "electr"},
    {"electrical", "electr"}, {"hopeful", "hope"},        {"goodness", "good"},
    {"revival", "reviv"},     {"allowance", "allow"},     {"inference", "infer"},
    {"airliner", "airlin"},   {"gyroscopic", "gyroscop"}, {"adjustable", "adjust"},
    {"defensible", "defens"}, {"irritant", "irrit"},      {"replacement", "replac"},
    {"adjustment", "adjust"}, {"dependent", "depend"},    {"adoption", "adopt"},
    {"homologou", "homolog"}, {"communism", "commun"},    {"activate", "activ"},
    {"angulariti", "angular"}, {"homologous", "homolog"}, {"effective", "effect"},
    {"bowdlerize", "bowdler"}, {"probate", "probat"},     {"rate", "rate"},
    {"cease", "ceas"},        {"controll", "control"},    {"roll", "roll"},
    {"generalizations", "gener"}, {"oscillators", "oscil"},
};

}  // namespace kpe::testdata
