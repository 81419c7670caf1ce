#pragma once

#include <span>
#include <string>
#include <vector>

#include "ocsi/catalog.hpp"
#include "ocsi/embedstore.hpp"

namespace ocsi {

struct SerializedPair {
  std::string pair_id;  // "queryId|candidateId"
  std::string text;
};

struct BlockingConfig {
  std::size_t k = 100;
};

// Column indices per blocker row: routed in blocker rank order, residual the rest.
struct RoutedPairs {
  std::vector<std::vector<std::size_t>> routed;
  std::vector<std::vector<std::size_t>> residual;
};

struct HeavyScore {
  std::string pair_id;
  double confidence = 0.0;
};

inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kPairSeparator = " [SEP] ";

std::string make_pair_id(const ItemId& query, const ItemId& candidate);

// "[COL] <name> [VAL] <value>" for title, performer, video_title,
// channel_name, description, keywords. Song attributes become [MASK] when
// masked or absent.
std::string serialize_entry(const Item& item, bool mask_song_attrs);

// Query entry, separator, candidate entry with song attributes masked.
SerializedPair serialize_pair(const Item& query, const Item& candidate);

RoutedPairs route_topk(const SimilarityMatrix& blocker, const BlockingConfig& config);

// Serialized pairs for every routed cell, row-major in routing order.
std::vector<SerializedPair> serialize_routed(const SimilarityMatrix& blocker, const RoutedPairs& routing,
                                             const Catalog& catalog);

// Routed candidates (ordered by heavy confidence) strictly above residual
// candidates (ordered by blocker score). Stored scores: 2 + confidence for
// routed cells, blocker score clamped to [-1, 1] otherwise.
SimilarityMatrix merge_two_tier(const SimilarityMatrix& blocker, std::span<const HeavyScore> heavy,
                                const RoutedPairs& routing);

}  // namespace ocsi
