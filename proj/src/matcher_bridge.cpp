#include "ocsi/matcher_bridge.hpp"

#include <algorithm>
#include <unordered_map>

namespace ocsi {

namespace {

std::string flatten(std::string_view value) {
  std::string out(value);
  for (char& ch : out)
    if (ch == '\n' || ch == '\r') ch = ' ';
  return out;
}

void append_attr(std::string& out, std::string_view name, std::string_view value) {
  if (!out.empty()) out += ' ';
  out += "[COL] ";
  out += name;
  out += " [VAL] ";
  out += flatten(value);
}

std::string join_keywords(const std::vector<std::string>& keywords) {
  std::string out;
  for (const auto& k : keywords) {
    if (!out.empty()) out += ' ';
    out += k;
  }
  return out;
}

}  // namespace

std::string make_pair_id(const ItemId& query, const ItemId& candidate) { return query.str() + "|" + candidate.str(); }

std::string serialize_entry(const Item& item, bool mask_song_attrs) {
  std::string out;
  auto song_attr = [&](const std::optional<std::string>& v) -> std::string_view {
    if (mask_song_attrs || !v) return kMaskToken;
    return *v;
  };
  append_attr(out, "title", song_attr(item.song_title));
  append_attr(out, "performer", song_attr(item.performer));
  append_attr(out, "video_title", item.video_title);
  append_attr(out, "channel_name", item.channel_name);
  append_attr(out, "description", item.description);
  append_attr(out, "keywords", join_keywords(item.keywords));
  return out;
}

SerializedPair serialize_pair(const Item& query, const Item& candidate) {
  if (!query.song_title) throw InvalidInput("serialize_pair: query " + query.id.str() + " has no song_title");
  std::string text = serialize_entry(query, false);
  text += kPairSeparator;
  text += serialize_entry(candidate, true);
  return {make_pair_id(query.id, candidate.id), std::move(text)};
}

RoutedPairs route_topk(const SimilarityMatrix& blocker, const BlockingConfig& config) {
  if (blocker.kind() == SimilarityKind::tiered) throw InvalidInput("route_topk: blocker must not be tiered");
  RoutedPairs out;
  out.routed.resize(blocker.rows());
  out.residual.resize(blocker.rows());
  for (std::size_t r = 0; r < blocker.rows(); ++r) {
    auto order = rank_row(blocker, r);
    const std::size_t k = std::min(config.k, order.size());
    out.routed[r].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    out.residual[r].assign(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  }
  return out;
}

std::vector<SerializedPair> serialize_routed(const SimilarityMatrix& blocker, const RoutedPairs& routing,
                                             const Catalog& catalog) {
  std::vector<SerializedPair> out;
  for (std::size_t r = 0; r < routing.routed.size(); ++r) {
    if (routing.routed[r].empty()) continue;
    const Item* query = catalog.find(blocker.query_ids()[r]);
    if (!query) throw InvalidInput("query id '" + blocker.query_ids()[r].str() + "' not in catalog");
    for (std::size_t c : routing.routed[r]) {
      const Item* cand = catalog.find(blocker.candidate_ids()[c]);
      if (!cand) throw InvalidInput("candidate id '" + blocker.candidate_ids()[c].str() + "' not in catalog");
      out.push_back(serialize_pair(*query, *cand));
    }
  }
  return out;
}

SimilarityMatrix merge_two_tier(const SimilarityMatrix& blocker, std::span<const HeavyScore> heavy,
                                const RoutedPairs& routing) {
  if (routing.routed.size() != blocker.rows() || routing.residual.size() != blocker.rows())
    throw InvalidInput("merge_two_tier: routing does not match blocker rows");

  std::unordered_map<std::string, double> confidence;
  confidence.reserve(heavy.size());
  for (const auto& h : heavy)
    if (!confidence.emplace(h.pair_id, h.confidence).second)
      throw InvalidInput("merge_two_tier: duplicate heavy score for " + h.pair_id);

  const std::size_t cols = blocker.cols();
  std::vector<float> scores(blocker.rows() * cols);
  std::vector<std::uint8_t> tiers(scores.size(), static_cast<std::uint8_t>(Tier::blocker));
  std::size_t used = 0;
  for (std::size_t r = 0; r < blocker.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) scores[r * cols + c] = std::clamp(blocker.at(r, c), -1.0f, 1.0f);
    for (std::size_t c : routing.routed[r]) {
      const std::string id = make_pair_id(blocker.query_ids()[r], blocker.candidate_ids()[c]);
      auto it = confidence.find(id);
      if (it == confidence.end()) throw InvalidInput("merge_two_tier: missing heavy score for " + id);
      scores[r * cols + c] = static_cast<float>(2.0 + it->second);
      tiers[r * cols + c] = static_cast<std::uint8_t>(Tier::heavy);
      ++used;
    }
  }
  if (used != confidence.size()) throw InvalidInput("merge_two_tier: heavy scores for pairs that were not routed");
  return SimilarityMatrix(blocker.query_ids(), blocker.candidate_ids(), std::move(scores), SimilarityKind::tiered,
                          std::move(tiers));
}

}  // namespace ocsi
