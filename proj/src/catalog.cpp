#include "ocsi/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "ocsi/rng.hpp"
#include "ocsi/textsim.hpp"

namespace ocsi {

using nlohmann::json;

namespace {

const std::set<std::string, std::less<>> kKnownKeys{"id",           "work_id",     "song_title", "performer",
                                                    "video_title",  "channel_name", "description", "keywords"};

std::string require_string(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw CatalogError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw CatalogError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

void check_item(const Item& item) {
  if (item.id.empty()) throw CatalogError("item id must be non-empty");
  if (item.work_id && item.work_id->empty()) throw CatalogError("item " + item.id.str() + ": empty work_id");
  if (item.work_id && !item.song_title)
    throw CatalogError("item " + item.id.str() + ": work_id present but song_title absent");
  if (item.is_query() && item.video_title.empty())
    throw CatalogError("item " + item.id.str() + ": query items need a non-empty video_title");
}

}  // namespace

Catalog::Catalog(std::vector<Item> items) : items_(std::move(items)) {
  index_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    check_item(items_[i]);
    if (!index_.emplace(items_[i].id, i).second) throw CatalogError("duplicate id '" + items_[i].id.str() + "'");
  }
}

const Item* Catalog::find(const ItemId& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &items_[it->second];
}

std::optional<std::size_t> Catalog::position(const ItemId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Catalog::work_count() const {
  std::unordered_set<WorkId> works;
  for (const auto& item : items_)
    if (item.work_id) works.insert(*item.work_id);
  return works.size();
}

Item parse_item_line(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CatalogError(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw CatalogError("record must be a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!kKnownKeys.contains(key)) throw CatalogError("unknown key '" + key + "'");
  if (!obj.contains("id")) throw CatalogError("missing required field 'id'");
  if (!obj.contains("video_title")) throw CatalogError("missing required field 'video_title'");

  Item item;
  std::string id = require_string(obj, "id");
  if (id.empty()) throw CatalogError("empty id");
  item.id = ItemId(std::move(id));
  if (auto w = optional_string(obj, "work_id")) {
    if (w->empty()) throw CatalogError("empty work_id");
    item.work_id = WorkId(std::move(*w));
  }
  item.song_title = optional_string(obj, "song_title");
  item.performer = optional_string(obj, "performer");
  item.video_title = require_string(obj, "video_title");
  item.channel_name = optional_string(obj, "channel_name").value_or("");
  item.description = optional_string(obj, "description").value_or("");
  if (auto it = obj.find("keywords"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) throw CatalogError("field 'keywords' must be an array of strings");
    for (const auto& k : *it) {
      if (!k.is_string()) throw CatalogError("field 'keywords' must be an array of strings");
      item.keywords.push_back(k.get<std::string>());
    }
  }
  check_item(item);
  return item;
}

std::string format_item_line(const Item& item) {
  json obj = json::object();
  obj["id"] = item.id.str();
  if (item.work_id) obj["work_id"] = item.work_id->str();
  if (item.song_title) obj["song_title"] = *item.song_title;
  if (item.performer) obj["performer"] = *item.performer;
  obj["video_title"] = item.video_title;
  obj["channel_name"] = item.channel_name;
  obj["description"] = item.description;
  obj["keywords"] = item.keywords;
  return obj.dump();
}

Catalog read_catalog(std::istream& in, std::string_view source) {
  std::vector<Item> items;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Item item;
    try {
      item = parse_item_line(line);
    } catch (const Error& e) {
      throw CatalogError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
    auto [it, inserted] = first_line.emplace(item.id.str(), line_no);
    if (!inserted)
      throw CatalogError(std::string(source) + ":" + std::to_string(line_no) + ": duplicate id '" + item.id.str() +
                         "' (first seen on line " + std::to_string(it->second) + ")");
    items.push_back(std::move(item));
  }
  return Catalog(std::move(items));
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CatalogError("cannot open catalog " + path.string());
  return read_catalog(in, path.string());
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CatalogError("cannot create " + path.string());
  for (const auto& item : catalog.items()) out << format_item_line(item) << '\n';
  if (!out) throw CatalogError("write failed: " + path.string());
}

bool same_work(const Item& a, const Item& b) { return a.work_id && b.work_id && *a.work_id == *b.work_id; }

namespace {

using IndexPair = std::pair<std::size_t, std::size_t>;

PairSample to_sample(const Catalog& catalog, IndexPair p) {
  const Item& a = catalog[p.first];
  const Item& b = catalog[p.second];
  const bool a_first = a.id < b.id;
  return PairSample{a_first ? a.id : b.id, a_first ? b.id : a.id, same_work(a, b) ? 1 : 0};
}

}  // namespace

std::vector<PairSample> sample_training_pairs(const Catalog& catalog, const PairSamplingConfig& config) {
  const std::size_t n = catalog.size();
  if (config.n_pos == 0 && config.n_neg == 0) return {};
  if (n < 2) throw InvalidInput("sample_training_pairs: catalog needs at least 2 items");

  std::vector<IndexPair> positives;
  {
    std::map<WorkId, std::vector<std::size_t>> by_work;
    for (std::size_t i = 0; i < n; ++i)
      if (catalog[i].work_id) by_work[*catalog[i].work_id].push_back(i);
    for (const auto& [_, members] : by_work)
      for (std::size_t x = 0; x < members.size(); ++x)
        for (std::size_t y = x + 1; y < members.size(); ++y) positives.emplace_back(members[x], members[y]);
    std::sort(positives.begin(), positives.end());
  }
  const std::size_t total_pairs = n * (n - 1) / 2;
  const std::size_t total_neg = total_pairs - positives.size();
  if (config.n_pos > positives.size() || config.n_neg > total_neg)
    throw InvalidInput("sample_training_pairs: requested " + std::to_string(config.n_pos) + " positive / " +
                       std::to_string(config.n_neg) + " negative pairs, available " +
                       std::to_string(positives.size()) + " / " + std::to_string(total_neg));

  Rng rng(config.seed);
  rng.partial_shuffle(positives, config.n_pos);
  positives.resize(config.n_pos);

  std::vector<IndexPair> negatives;
  if (config.n_neg * 2 > total_neg) {
    negatives.reserve(total_neg);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (!same_work(catalog[i], catalog[j])) negatives.emplace_back(i, j);
    rng.partial_shuffle(negatives, config.n_neg);
    negatives.resize(config.n_neg);
  } else {
    // Rejection over ordered index draws; each unordered pair has equal mass.
    std::set<IndexPair> chosen;
    while (chosen.size() < config.n_neg) {
      std::size_t i = rng.below(n);
      std::size_t j = rng.below(n);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      if (same_work(catalog[i], catalog[j])) continue;
      if (chosen.insert({i, j}).second) negatives.emplace_back(i, j);
    }
  }

  std::vector<PairSample> out;
  out.reserve(config.n_pos + config.n_neg);
  for (auto p : positives) out.push_back(to_sample(catalog, p));
  for (auto p : negatives) out.push_back(to_sample(catalog, p));
  std::sort(out.begin(), out.end(), [](const PairSample& a, const PairSample& b) {
    return std::tie(a.query_id, a.candidate_id) < std::tie(b.query_id, b.candidate_id);
  });
  return out;
}

void save_pairs(std::span<const PairSample> pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot create " + path.string());
  out << "query_id\tcandidate_id\tlabel\n";
  for (const auto& p : pairs) out << p.query_id << '\t' << p.candidate_id << '\t' << p.label << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<PairSample> load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<PairSample> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("query_id", 0) == 0) continue;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string q, c, label;
    if (!std::getline(fields, q, '\t') || !std::getline(fields, c, '\t') || !std::getline(fields, label) ||
        (label != "0" && label != "1") || q.empty() || c.empty())
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": malformed pair line");
    pairs.push_back({ItemId(q), ItemId(c), label == "1" ? 1 : 0});
  }
  return pairs;
}

Catalog make_unique_subset(const Catalog& catalog) {
  // (work id, canonical title) -> smallest id seen
  std::map<std::pair<WorkId, std::string>, ItemId> keep;
  for (const auto& item : catalog.items()) {
    if (!item.work_id) continue;
    auto key = std::make_pair(*item.work_id, textsim::normalize(item.song_title.value_or("")).canonical);
    auto [it, inserted] = keep.emplace(std::move(key), item.id);
    if (!inserted && item.id < it->second) it->second = item.id;
  }
  std::unordered_set<ItemId> kept;
  for (const auto& [_, id] : keep) kept.insert(id);

  std::vector<Item> items;
  for (const auto& item : catalog.items())
    if (!item.work_id || kept.contains(item.id)) items.push_back(item);
  return Catalog(std::move(items));
}

Catalog inject_noise(const Catalog& catalog, const Catalog& noise) {
  std::vector<Item> items(catalog.items().begin(), catalog.items().end());
  for (const auto& item : noise.items()) {
    if (item.work_id)
      throw CatalogError("noise item '" + item.id.str() + "' carries work_id '" + item.work_id->str() + "'");
    if (catalog.find(item.id)) throw CatalogError("noise item id '" + item.id.str() + "' already in catalog");
    items.push_back(item);
  }
  return Catalog(std::move(items));
}

Catalog inject_noise(const Catalog& catalog, const std::filesystem::path& noise_path) {
  return inject_noise(catalog, load_catalog(noise_path));
}

}  // namespace ocsi
