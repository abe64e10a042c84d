#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "noisylabel/losses.hpp"

namespace noisylabel {

using ClipId = std::int64_t;

// One patch. Labels belong to clips, so every patch of a clip carries its clip's label.
struct Example {
  ExampleId example_id = 0;
  ClipId clip_id = 0;
  Vector features;
  int label = 0;

  friend bool operator==(const Example&, const Example&) = default;
};

using Dataset = std::vector<Example>;

inline std::size_t feature_dim(const Dataset& data) { return data.empty() ? 0 : data.front().features.size(); }

inline std::size_t count_clips(const Dataset& data) {
  std::set<ClipId> clips;
  for (const auto& ex : data) clips.insert(ex.clip_id);
  return clips.size();
}

// Clip -> indices of its patches, in dataset order.
inline std::map<ClipId, std::vector<std::size_t>> patches_by_clip(const Dataset& data) {
  std::map<ClipId, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < data.size(); ++i) out[data[i].clip_id].push_back(i);
  return out;
}

inline std::map<ExampleId, ClipId> clip_assignment(const Dataset& data) {
  std::map<ExampleId, ClipId> out;
  for (const auto& ex : data) out[ex.example_id] = ex.clip_id;
  return out;
}

}  // namespace noisylabel
