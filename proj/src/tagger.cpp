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

#include "kpe/tagger.hpp"

namespace kpe {

std::vector<Span> chunk_sequence(std::size_t n, std::size_t limit) {
  if (limit == 0) throw Error("chunk limit must be >= 1");
  std::vector<Span> spans;
  for (std::size_t start = 0; start < n; start += limit) spans.push_back({start, std::min(n, start + limit)});
  return spans;
}

nlohmann::json to_json(const TaggerTrainLog& log) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : log.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"learning_rate", e.learning_rate},
                      {"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"valid_loss", e.valid_loss}});
  return {{"epochs", std::move(epochs)}, {"best_epoch", log.best_epoch}};
}

}  // namespace kpe
