#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ocsi/error.hpp"
#include "ocsi/ids.hpp"

namespace ocsi {

class CatalogError : public Error {
 public:
  using Error::Error;
};

// A video with optional song-side attributes. Items without a work id are
// distractors: never queries, never relevant.
struct Item {
  ItemId id;
  std::optional<WorkId> work_id;
  std::optional<std::string> song_title;
  std::optional<std::string> performer;
  std::string video_title;
  std::string channel_name;
  std::string description;
  std::vector<std::string> keywords;

  // Queries are items carrying both a work id and a song title.
  bool is_query() const noexcept { return work_id.has_value() && song_title.has_value(); }

  friend bool operator==(const Item&, const Item&) = default;
};

// Immutable, ordered set of items with unique ids.
class Catalog {
 public:
  Catalog() = default;
  // Throws CatalogError on duplicate ids or items violating the Item invariants.
  explicit Catalog(std::vector<Item> items);

  std::span<const Item> items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const Item& operator[](std::size_t i) const { return items_[i]; }

  const Item* find(const ItemId& id) const;
  std::optional<std::size_t> position(const ItemId& id) const;

  // Number of distinct work ids.
  std::size_t work_count() const;

 private:
  std::vector<Item> items_;
  std::unordered_map<ItemId, std::size_t> index_;
};

// Catalog line format: one flat JSON object per line.
Item parse_item_line(std::string_view line);
std::string format_item_line(const Item& item);

Catalog read_catalog(std::istream& in, std::string_view source = "<stream>");
Catalog load_catalog(const std::filesystem::path& path);
void save_catalog(const Catalog& catalog, const std::filesystem::path& path);

struct PairSample {
  ItemId query_id;
  ItemId candidate_id;
  int label = 0;

  friend bool operator==(const PairSample&, const PairSample&) = default;
};

struct PairSamplingConfig {
  std::size_t n_pos = 1000;
  std::size_t n_neg = 6000;
  std::uint64_t seed = 0;
};

// True iff both items carry the same work id.
bool same_work(const Item& a, const Item& b);

// Uniform sample without replacement over unordered item pairs. The smaller id
// of each pair becomes query_id; output is sorted by (query_id, candidate_id).
std::vector<PairSample> sample_training_pairs(const Catalog& catalog, const PairSamplingConfig& config);

void save_pairs(std::span<const PairSample> pairs, const std::filesystem::path& path);
std::vector<PairSample> load_pairs(const std::filesystem::path& path);

// Keeps one item per (work id, normalized song title): the smallest id.
Catalog make_unique_subset(const Catalog& catalog);

// Appends distractor items; every noise record must lack a work id.
Catalog inject_noise(const Catalog& catalog, const Catalog& noise);
Catalog inject_noise(const Catalog& catalog, const std::filesystem::path& noise_path);

}  // namespace ocsi
