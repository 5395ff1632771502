// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace nomad {

// Pull-style producer: returns std::nullopt once exhausted.
template <typename T>
using Source = std::function<std::optional<T>()>;

// Push-style consumer.
template <typename T>
using Sink = std::function<void(T)>;

template <typename T>
Source<T> from_vector(std::vector<T> items) {
  auto state = std::make_shared<std::pair<std::vector<T>, std::size_t>>(
      std::move(items), 0);
  return [state]() -> std::optional<T> {
    if (state->second >= state->first.size()) return std::nullopt;
    return std::move(state->first[state->second++]);
  };
}

template <typename T>
Sink<T> into_vector(std::vector<T>& out) {
  return [&out](T item) { out.push_back(std::move(item)); };
}

template <typename T>
std::vector<T> drain(const Source<T>& source) {
  std::vector<T> out;
  while (auto item = source()) out.push_back(std::move(*item));
  return out;
}

}  // namespace nomad
