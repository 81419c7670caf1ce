#include "ocsi/ltr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "ocsi/evalmetrics.hpp"

namespace ocsi::ltr {

using nlohmann::json;

namespace {

constexpr const char* kModelFormat = "LMART/1";
constexpr double kHessianFloor = 1e-9;
constexpr double kMinSplitGain = 1e-12;

bool has_mixed_relevance(const QueryGroup& g) {
  bool pos = false, neg = false;
  for (auto r : g.relevance) (r ? pos : neg) = true;
  return pos && neg;
}

bool has_relevant(const QueryGroup& g) {
  return std::any_of(g.relevance.begin(), g.relevance.end(), [](auto r) { return r != 0; });
}

}  // namespace

// ---------------------------------------------------------------------------
// Datasets

namespace {

void check_same_ids(const std::vector<ItemId>& a, const std::vector<ItemId>& b, const char* what) {
  if (a.size() != b.size()) throw InvalidInput(std::string("er/csi ") + what + " id sets differ in size");
  std::unordered_set<ItemId> sa(a.begin(), a.end());
  for (const auto& id : b)
    if (!sa.contains(id)) throw InvalidInput(std::string("er/csi ") + what + " id mismatch: '" + id.str() + "'");
}

}  // namespace

std::vector<QueryGroup> build_ranking_dataset(const SimilarityMatrix& er, const SimilarityMatrix& csi,
                                              const Catalog& catalog) {
  check_same_ids(er.query_ids(), csi.query_ids(), "query");
  check_same_ids(er.candidate_ids(), csi.candidate_ids(), "candidate");

  std::vector<std::size_t> cand_order(er.cols());
  std::iota(cand_order.begin(), cand_order.end(), 0);
  std::sort(cand_order.begin(), cand_order.end(),
            [&](std::size_t a, std::size_t b) { return er.candidate_ids()[a] < er.candidate_ids()[b]; });
  std::vector<std::size_t> csi_col(er.cols());
  std::vector<const Item*> cand_items(er.cols());
  for (std::size_t c = 0; c < er.cols(); ++c) {
    csi_col[c] = *csi.candidate_position(er.candidate_ids()[c]);
    cand_items[c] = catalog.find(er.candidate_ids()[c]);
    if (!cand_items[c]) throw InvalidInput("candidate id '" + er.candidate_ids()[c].str() + "' not in catalog");
  }

  std::vector<QueryGroup> groups;
  for (std::size_t r = 0; r < er.rows(); ++r) {
    const ItemId& qid = er.query_ids()[r];
    const Item* query = catalog.find(qid);
    if (!query) throw InvalidInput("query id '" + qid.str() + "' not in catalog");
    if (!query->is_query()) continue;
    const std::size_t csi_row = *csi.query_position(qid);
    QueryGroup g;
    g.query_id = qid;
    g.n_features = 2;
    for (std::size_t c : cand_order) {
      if (er.candidate_ids()[c] == qid) continue;
      g.candidate_ids.push_back(er.candidate_ids()[c]);
      g.features.push_back(er.at(r, c));
      g.features.push_back(csi.at(csi_row, csi_col[c]));
      g.relevance.push_back(same_work(*query, *cand_items[c]) ? 1 : 0);
    }
    if (!g.candidate_ids.empty()) groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<QueryGroup> build_pair_dataset(const SimilarityMatrix& er, const SimilarityMatrix& csi,
                                           const Catalog& catalog, std::span<const PairSample> pairs) {
  check_same_ids(er.query_ids(), csi.query_ids(), "query");
  check_same_ids(er.candidate_ids(), csi.candidate_ids(), "candidate");

  std::map<ItemId, QueryGroup> by_query;
  for (const auto& p : pairs) {
    if (!catalog.find(p.query_id) || !catalog.find(p.candidate_id))
      throw InvalidInput("pair " + (p.query_id.str() + "|" + p.candidate_id.str()) + " references unknown items");
    // Pairs are unordered; use whichever side has a matrix row.
    const ItemId* row_id = &p.query_id;
    const ItemId* col_id = &p.candidate_id;
    if (!er.query_position(*row_id)) std::swap(row_id, col_id);
    auto er_r = er.query_position(*row_id);
    auto er_c = er.candidate_position(*col_id);
    if (!er_r || !er_c)
      throw InvalidInput("pair " + (p.query_id.str() + "|" + p.candidate_id.str()) + " has no similarity cell");
    const std::size_t csi_r = *csi.query_position(*row_id);
    const std::size_t csi_c = *csi.candidate_position(*col_id);

    QueryGroup& g = by_query[*row_id];
    g.query_id = *row_id;
    g.n_features = 2;
    g.candidate_ids.push_back(*col_id);
    g.features.push_back(er.at(*er_r, *er_c));
    g.features.push_back(csi.at(csi_r, csi_c));
    g.relevance.push_back(static_cast<std::uint8_t>(p.label));
  }
  std::vector<QueryGroup> groups;
  for (auto& [_, g] : by_query) groups.push_back(std::move(g));
  return groups;
}

// ---------------------------------------------------------------------------
// Average precision and its swap deltas

std::vector<std::size_t> ranking_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double average_precision_group(std::span<const double> scores, std::span<const std::uint8_t> relevance) {
  if (scores.size() != relevance.size()) throw InvalidInput("average_precision_group: size mismatch");
  std::vector<std::uint8_t> ranked;
  ranked.reserve(scores.size());
  for (auto i : ranking_order(scores)) ranked.push_back(relevance[i]);
  return average_precision(ranked);
}

namespace {

// Prefix statistics of one ranking; delta(i, j) is O(1).
class ApSwapTable {
 public:
  ApSwapTable(std::span<const double> scores, std::span<const std::uint8_t> relevance)
      : position_(scores.size()), rel_(scores.size()), hits_(scores.size()), inv_rank_sum_(scores.size()) {
    const auto order = ranking_order(scores);
    std::size_t hits = 0;
    double inv_sum = 0.0;
    for (std::size_t p = 0; p < order.size(); ++p) {
      position_[order[p]] = p;
      rel_[p] = relevance[order[p]] != 0;
      if (rel_[p]) {
        ++hits;
        inv_sum += 1.0 / static_cast<double>(p + 1);
      }
      hits_[p] = hits;
      inv_rank_sum_[p] = inv_sum;
    }
    total_relevant_ = hits;
  }

  std::size_t total_relevant() const { return total_relevant_; }

  double delta(std::size_t i, std::size_t j) const {
    std::size_t a = position_[i], b = position_[j];
    if (a > b) std::swap(a, b);
    if (rel_[a] == rel_[b] || total_relevant_ == 0) return 0.0;
    // Relevant documents strictly between a and b shift their hit count by one.
    const double between = (b > a + 1) ? inv_rank_sum_[b - 1] - inv_rank_sum_[a] : 0.0;
    const double ra = static_cast<double>(a + 1), rb = static_cast<double>(b + 1);
    double d;
    if (rel_[a]) {
      d = static_cast<double>(hits_[b]) / rb - static_cast<double>(hits_[a]) / ra - between;
    } else {
      d = static_cast<double>(hits_[a] + 1) / ra - static_cast<double>(hits_[b]) / rb + between;
    }
    return d / static_cast<double>(total_relevant_);
  }

 private:
  std::vector<std::size_t> position_;
  std::vector<bool> rel_;
  std::vector<std::size_t> hits_;
  std::vector<double> inv_rank_sum_;
  std::size_t total_relevant_ = 0;
};

}  // namespace

double delta_ap(std::span<const double> scores, std::span<const std::uint8_t> relevance, std::size_t i,
                std::size_t j) {
  if (scores.size() != relevance.size()) throw InvalidInput("delta_ap: size mismatch");
  if (i >= scores.size() || j >= scores.size() || i == j) throw InvalidInput("delta_ap: need distinct valid rows");
  return ApSwapTable(scores, relevance).delta(i, j);
}

Gradients lambda_gradients(const QueryGroup& group, std::span<const double> scores, double sigma) {
  const std::size_t n = group.size();
  if (scores.size() != n) throw InvalidInput("lambda_gradients: score count mismatch");
  Gradients g{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  if (!has_mixed_relevance(group)) return g;

  const ApSwapTable table(scores, group.relevance);
  for (std::size_t i = 0; i < n; ++i) {
    if (!group.relevance[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (group.relevance[j]) continue;
      const double weight = std::abs(table.delta(i, j));
      if (weight == 0.0) continue;
      const double rho = 1.0 / (1.0 + std::exp(sigma * (scores[i] - scores[j])));
      const double lambda = sigma * rho * weight;
      const double hess = sigma * sigma * rho * (1.0 - rho) * weight;
      g.lambdas[i] += lambda;
      g.lambdas[j] -= lambda;
      g.hessians[i] += hess;
      g.hessians[j] += hess;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Trees

RegressionTree::RegressionTree(std::vector<Node> nodes, std::vector<double> leaf_values)
    : nodes_(std::move(nodes)), leaf_values_(std::move(leaf_values)) {
  if (leaf_values_.empty()) throw InvalidInput("RegressionTree: no leaves");
  if (nodes_.size() + 1 != leaf_values_.size()) throw InvalidInput("RegressionTree: leaves != internal nodes + 1");
  std::vector<int> seen_node(nodes_.size(), 0), seen_leaf(leaf_values_.size(), 0);
  auto visit = [&](int ref) {
    if (ref < 0) {
      const auto leaf = static_cast<std::size_t>(~ref);
      if (leaf >= leaf_values_.size() || seen_leaf[leaf]++) throw InvalidInput("RegressionTree: bad leaf reference");
    } else {
      const auto node = static_cast<std::size_t>(ref);
      if (node == 0 || node >= nodes_.size() || seen_node[node]++) throw InvalidInput("RegressionTree: bad node reference");
    }
  };
  for (const auto& n : nodes_) {
    visit(n.left);
    visit(n.right);
  }
}

std::size_t RegressionTree::leaf_index(std::span<const double> x) const {
  if (nodes_.empty()) return 0;
  int ref = 0;
  for (;;) {
    const Node& n = nodes_[static_cast<std::size_t>(ref)];
    ref = x[n.feature] <= n.threshold ? n.left : n.right;
    if (ref < 0) return static_cast<std::size_t>(~ref);
  }
}

std::vector<std::size_t> RegressionTree::used_features() const {
  std::set<std::size_t> f;
  for (const auto& n : nodes_) f.insert(n.feature);
  return {f.begin(), f.end()};
}

namespace {

// Renumbers nodes and leaves in preorder so equal trees compare equal.
RegressionTree canonicalize(const std::vector<RegressionTree::Node>& nodes, const std::vector<double>& leaves) {
  if (nodes.empty()) return RegressionTree({}, leaves);
  std::vector<RegressionTree::Node> out_nodes;
  std::vector<double> out_leaves;
  auto walk = [&](auto&& self, int ref) -> int {
    if (ref < 0) {
      out_leaves.push_back(leaves[static_cast<std::size_t>(~ref)]);
      return ~static_cast<int>(out_leaves.size() - 1);
    }
    const auto& n = nodes[static_cast<std::size_t>(ref)];
    const auto idx = out_nodes.size();
    out_nodes.push_back({n.feature, n.threshold, -1, -1});
    const int l = self(self, n.left);
    const int r = self(self, n.right);
    out_nodes[idx].left = l;
    out_nodes[idx].right = r;
    return static_cast<int>(idx);
  };
  walk(walk, 0);
  return RegressionTree(std::move(out_nodes), std::move(out_leaves));
}

struct Split {
  double gain = 0.0;
  std::size_t feature = 0;
  double threshold = 0.0;
  bool valid = false;
};

// Leaf-wise least-squares tree on lambdas with Newton leaf values.
class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> x, std::size_t n_features, const std::vector<std::vector<std::size_t>>& sorted,
              std::span<const double> grad, std::span<const double> hess, const LtrParams& params)
      : x_(x), nf_(n_features), sorted_(sorted), grad_(grad), hess_(hess), params_(params) {}

  // `allowed_sets` lists feature sets a single tree may draw all its splits from.
  RegressionTree build(const std::vector<std::vector<std::size_t>>& allowed_sets, std::vector<double>& feature_gain,
                       std::vector<std::size_t>& leaf_of) {
    const std::size_t n = grad_.size();
    leaf_of.assign(n, 0);
    std::vector<RegressionTree::Node> nodes;
    std::vector<LeafState> leaves{{-1, false, n, {}, {}}};
    std::set<std::size_t> used;
    std::vector<std::size_t> allowed = allowed_features(allowed_sets, used);

    while (leaves.size() < std::max<std::size_t>(params_.max_leaves, 1)) {
      std::size_t best_leaf = leaves.size();
      for (std::size_t l = 0; l < leaves.size(); ++l) {
        auto& st = leaves[l];
        if (!st.cached || st.cached_for != allowed) {
          st.best = best_split(l, st.count, allowed, leaf_of);
          st.cached = true;
          st.cached_for = allowed;
        }
        if (st.best.valid && (best_leaf == leaves.size() || st.best.gain > leaves[best_leaf].best.gain)) best_leaf = l;
      }
      if (best_leaf == leaves.size()) break;

      const Split split = leaves[best_leaf].best;
      const int node_idx = static_cast<int>(nodes.size());
      const int right_leaf = static_cast<int>(leaves.size());
      nodes.push_back({split.feature, split.threshold, ~static_cast<int>(best_leaf), ~right_leaf});
      if (leaves[best_leaf].parent >= 0) {
        auto& parent = nodes[static_cast<std::size_t>(leaves[best_leaf].parent)];
        (leaves[best_leaf].is_left ? parent.left : parent.right) = node_idx;
      }
      std::size_t left_count = 0, right_count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (leaf_of[i] != best_leaf) continue;
        if (x_[i * nf_ + split.feature] <= split.threshold) {
          ++left_count;
        } else {
          leaf_of[i] = static_cast<std::size_t>(right_leaf);
          ++right_count;
        }
      }
      leaves[best_leaf] = {node_idx, true, left_count, {}, {}};
      leaves.push_back({node_idx, false, right_count, {}, {}});
      feature_gain[split.feature] += split.gain;
      if (used.insert(split.feature).second) allowed = allowed_features(allowed_sets, used);
    }

    std::vector<double> g_sum(leaves.size(), 0.0), h_sum(leaves.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      g_sum[leaf_of[i]] += grad_[i];
      h_sum[leaf_of[i]] += hess_[i];
    }
    std::vector<double> values(leaves.size());
    for (std::size_t l = 0; l < leaves.size(); ++l)
      values[l] = std::clamp(g_sum[l] / (h_sum[l] + kHessianFloor), -params_.leaf_value_cap, params_.leaf_value_cap);
    if (nodes.empty()) return RegressionTree({}, std::move(values));
    return RegressionTree(std::move(nodes), std::move(values));
  }

 private:
  struct LeafState {
    int parent;
    bool is_left;
    std::size_t count;
    Split best;
    std::vector<std::size_t> cached_for;
    bool cached = false;
  };

  std::vector<std::size_t> allowed_features(const std::vector<std::vector<std::size_t>>& sets,
                                            const std::set<std::size_t>& used) const {
    std::set<std::size_t> out;
    for (const auto& s : sets) {
      const bool covers = std::all_of(used.begin(), used.end(),
                                      [&](std::size_t f) { return std::find(s.begin(), s.end(), f) != s.end(); });
      if (covers) out.insert(s.begin(), s.end());
    }
    return {out.begin(), out.end()};
  }

  Split best_split(std::size_t leaf, std::size_t count, const std::vector<std::size_t>& features,
                   const std::vector<std::size_t>& leaf_of) const {
    Split best;
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_samples_leaf, 1);
    if (count < 2 * min_leaf) return best;
    double total = 0.0;
    for (std::size_t i = 0; i < leaf_of.size(); ++i)
      if (leaf_of[i] == leaf) total += grad_[i];
    const double parent_score = total * total / static_cast<double>(count);

    for (std::size_t f : features) {
      double left_sum = 0.0;
      std::size_t left_n = 0;
      double prev = 0.0;
      for (std::size_t i : sorted_[f]) {
        if (leaf_of[i] != leaf) continue;
        const double v = x_[i * nf_ + f];
        if (left_n > 0 && v > prev && left_n >= min_leaf && count - left_n >= min_leaf) {
          const double right_sum = total - left_sum;
          const double gain = left_sum * left_sum / static_cast<double>(left_n) +
                              right_sum * right_sum / static_cast<double>(count - left_n) - parent_score;
          if (gain > kMinSplitGain && (!best.valid || gain > best.gain)) {
            double thr = prev + (v - prev) / 2.0;
            if (!(thr < v)) thr = prev;
            best = {gain, f, thr, true};
          }
        }
        left_sum += grad_[i];
        ++left_n;
        prev = v;
      }
    }
    return best;
  }

  std::span<const double> x_;
  std::size_t nf_;
  const std::vector<std::vector<std::size_t>>& sorted_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  const LtrParams& params_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Model

LambdaMartModel::LambdaMartModel(std::vector<RegressionTree> trees, double learning_rate,
                                 std::vector<std::string> feature_names)
    : trees_(std::move(trees)), learning_rate_(learning_rate), feature_names_(std::move(feature_names)) {
  if (!(learning_rate_ > 0.0) || !std::isfinite(learning_rate_)) throw InvalidInput("learning_rate must be positive");
  for (const auto& t : trees_)
    for (const auto& n : t.nodes())
      if (n.feature >= feature_names_.size()) throw InvalidInput("tree splits on unknown feature");
}

double LambdaMartModel::predict(std::span<const double> features) const {
  if (features.size() != feature_names_.size())
    throw InvalidInput("predict: expected " + std::to_string(feature_names_.size()) + " features, got " +
                       std::to_string(features.size()));
  double acc = 0.0;
  for (const auto& t : trees_) acc += learning_rate_ * t.predict(features);
  return acc;
}

namespace {

double group_map(std::span<const QueryGroup> groups, std::span<const std::size_t> offsets,
                 std::span<const double> scores) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!has_relevant(groups[g])) continue;
    sum += average_precision_group(scores.subspan(offsets[g], groups[g].size()), groups[g].relevance);
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

std::vector<std::pair<std::size_t, std::size_t>> rank_interactions(const std::vector<double>& gain,
                                                                   std::size_t max_pairs) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < gain.size(); ++a)
    for (std::size_t b = a + 1; b < gain.size(); ++b) pairs.emplace_back(a, b);
  std::stable_sort(pairs.begin(), pairs.end(), [&](const auto& p, const auto& q) {
    return gain[p.first] + gain[p.second] > gain[q.first] + gain[q.second];
  });
  if (pairs.size() > max_pairs) pairs.resize(max_pairs);
  return pairs;
}

}  // namespace

LambdaMartModel fit(std::span<const QueryGroup> groups, const LtrParams& params, std::vector<std::string> feature_names) {
  const std::size_t nf = feature_names.size();
  if (nf == 0) throw InvalidInput("fit: no features");
  if (!(params.learning_rate > 0.0) || !(params.sigma > 0.0) || params.max_leaves == 0)
    throw InvalidInput("fit: learning_rate, sigma and max_leaves must be positive");

  std::vector<std::size_t> offsets;
  std::size_t n_rows = 0;
  bool trainable = false;
  for (const auto& g : groups) {
    if (g.n_features != nf) throw InvalidInput("fit: group " + g.query_id.str() + " has wrong feature arity");
    if (g.features.size() != g.size() * nf || g.relevance.size() != g.size())
      throw InvalidInput("fit: group " + g.query_id.str() + " is inconsistent");
    offsets.push_back(n_rows);
    n_rows += g.size();
    trainable = trainable || has_mixed_relevance(g);
  }
  if (!trainable) throw InvalidInput("fit: no trainable pairs (no group mixes relevant and non-relevant rows)");

  std::vector<double> x;
  x.reserve(n_rows * nf);
  for (const auto& g : groups) x.insert(x.end(), g.features.begin(), g.features.end());
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidInput("fit: non-finite feature value");

  std::vector<std::vector<std::size_t>> sorted(nf, std::vector<std::size_t>(n_rows));
  for (std::size_t f = 0; f < nf; ++f) {
    std::iota(sorted[f].begin(), sorted[f].end(), 0);
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&](std::size_t a, std::size_t b) { return x[a * nf + f] < x[b * nf + f]; });
  }

  std::vector<std::vector<std::size_t>> main_sets;
  for (std::size_t f = 0; f < nf; ++f) main_sets.push_back({f});
  std::vector<std::vector<std::size_t>> pair_sets;
  std::vector<std::pair<std::size_t, std::size_t>> chosen_pairs;
  const std::size_t main_trees = std::min(params.main_effect_trees, params.n_trees);

  std::vector<double> scores(n_rows, 0.0), lambdas(n_rows), hessians(n_rows);
  std::vector<double> feature_gain(nf, 0.0);
  std::vector<std::size_t> leaf_of;
  std::vector<RegressionTree> trees;
  std::vector<double> training_map;

  for (std::size_t t = 0; t < params.n_trees; ++t) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto grads = lambda_gradients(groups[g], std::span<const double>(scores).subspan(offsets[g], groups[g].size()),
                                          params.sigma);
      std::copy(grads.lambdas.begin(), grads.lambdas.end(), lambdas.begin() + static_cast<std::ptrdiff_t>(offsets[g]));
      std::copy(grads.hessians.begin(), grads.hessians.end(), hessians.begin() + static_cast<std::ptrdiff_t>(offsets[g]));
    }
    if (t == main_trees) {
      chosen_pairs = rank_interactions(feature_gain, params.max_interactions);
      pair_sets = main_sets;
      for (auto [a, b] : chosen_pairs) pair_sets.push_back({a, b});
    }
    TreeBuilder builder(x, nf, sorted, lambdas, hessians, params);
    RegressionTree tree = builder.build(t < main_trees ? main_sets : pair_sets, feature_gain, leaf_of);
    for (std::size_t i = 0; i < n_rows; ++i) scores[i] += params.learning_rate * tree.leaf_values()[leaf_of[i]];
    trees.push_back(canonicalize(tree.nodes(), tree.leaf_values()));
    training_map.push_back(group_map(groups, offsets, scores));
  }

  LambdaMartModel model(std::move(trees), params.learning_rate, std::move(feature_names));
  model.params = params;
  model.training_map = std::move(training_map);
  model.interaction_pairs = std::move(chosen_pairs);
  return model;
}

double mean_average_precision(std::span<const QueryGroup> groups, const LambdaMartModel& model) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& g : groups) {
    if (!has_relevant(g)) continue;
    std::vector<double> s(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) s[i] = model.predict(g.row(i));
    sum += average_precision_group(s, g.relevance);
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

SimilarityMatrix rank_matrix(const LambdaMartModel& model, const SimilarityMatrix& er, const SimilarityMatrix& csi) {
  if (model.n_features() != 2) throw InvalidInput("rank_matrix: model must take exactly [er, csi] features");
  check_same_ids(er.query_ids(), csi.query_ids(), "query");
  check_same_ids(er.candidate_ids(), csi.candidate_ids(), "candidate");
  std::vector<std::size_t> csi_col(er.cols());
  for (std::size_t c = 0; c < er.cols(); ++c) csi_col[c] = *csi.candidate_position(er.candidate_ids()[c]);
  std::vector<float> scores(er.rows() * er.cols());
  for (std::size_t r = 0; r < er.rows(); ++r) {
    const std::size_t csi_row = *csi.query_position(er.query_ids()[r]);
    for (std::size_t c = 0; c < er.cols(); ++c) {
      const double f[2] = {er.at(r, c), csi.at(csi_row, csi_col[c])};
      scores[r * er.cols() + c] = static_cast<float>(model.predict(f));
    }
  }
  return SimilarityMatrix(er.query_ids(), er.candidate_ids(), std::move(scores), SimilarityKind::fused);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json node_to_json(const RegressionTree& tree, int ref) {
  if (ref < 0) return json{{"leaf", tree.leaf_values()[static_cast<std::size_t>(~ref)]}};
  const auto& n = tree.nodes()[static_cast<std::size_t>(ref)];
  return json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"left", node_to_json(tree, n.left)},
              {"right", node_to_json(tree, n.right)}};
}

int node_from_json(const json& j, std::vector<RegressionTree::Node>& nodes, std::vector<double>& leaves, int depth) {
  if (depth > 512) throw FormatError(FormatErrc::malformed, "LMART: tree too deep");
  if (!j.is_object()) throw FormatError(FormatErrc::malformed, "LMART: node must be an object");
  if (j.contains("leaf")) {
    leaves.push_back(j.at("leaf").get<double>());
    return ~static_cast<int>(leaves.size() - 1);
  }
  const auto idx = nodes.size();
  nodes.push_back({j.at("feature").get<std::size_t>(), j.at("threshold").get<double>(), -1, -1});
  const int l = node_from_json(j.at("left"), nodes, leaves, depth + 1);
  const int r = node_from_json(j.at("right"), nodes, leaves, depth + 1);
  nodes[idx].left = l;
  nodes[idx].right = r;
  return static_cast<int>(idx);
}

}  // namespace

void write_model(const LambdaMartModel& model, std::ostream& out) {
  const LtrParams& p = model.params;
  json trees = json::array();
  for (const auto& t : model.trees()) trees.push_back(node_to_json(t, t.nodes().empty() ? ~0 : 0));
  json pairs = json::array();
  for (auto [a, b] : model.interaction_pairs) pairs.push_back({a, b});
  json doc = {{"format", kModelFormat},
              {"learning_rate", model.learning_rate()},
              {"feature_names", model.feature_names()},
              {"params",
               {{"n_trees", p.n_trees},
                {"learning_rate", p.learning_rate},
                {"max_leaves", p.max_leaves},
                {"min_samples_leaf", p.min_samples_leaf},
                {"max_interactions", p.max_interactions},
                {"main_effect_trees", p.main_effect_trees},
                {"sigma", p.sigma},
                {"leaf_value_cap", p.leaf_value_cap},
                {"seed", p.seed}}},
              {"training_map", model.training_map},
              {"interaction_pairs", std::move(pairs)},
              {"trees", std::move(trees)}};
  out << doc.dump(1) << '\n';
}

LambdaMartModel read_model(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(FormatErrc::malformed, std::string("LMART: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format") || !doc["format"].is_string())
    throw FormatError(FormatErrc::malformed, "LMART: missing format tag");
  if (doc["format"] != kModelFormat)
    throw FormatError(FormatErrc::version_mismatch, "LMART: unsupported format " + doc["format"].get<std::string>());
  try {
    std::vector<RegressionTree> trees;
    for (const auto& tj : doc.at("trees")) {
      std::vector<RegressionTree::Node> nodes;
      std::vector<double> leaves;
      node_from_json(tj, nodes, leaves, 0);
      trees.emplace_back(std::move(nodes), std::move(leaves));
    }
    LambdaMartModel model(std::move(trees), doc.at("learning_rate").get<double>(),
                          doc.at("feature_names").get<std::vector<std::string>>());
    const auto& pj = doc.at("params");
    LtrParams& p = model.params;
    p.n_trees = pj.at("n_trees").get<std::size_t>();
    p.learning_rate = pj.at("learning_rate").get<double>();
    p.max_leaves = pj.at("max_leaves").get<std::size_t>();
    p.min_samples_leaf = pj.at("min_samples_leaf").get<std::size_t>();
    p.max_interactions = pj.at("max_interactions").get<std::size_t>();
    p.main_effect_trees = pj.at("main_effect_trees").get<std::size_t>();
    p.sigma = pj.at("sigma").get<double>();
    p.leaf_value_cap = pj.at("leaf_value_cap").get<double>();
    p.seed = pj.at("seed").get<std::uint64_t>();
    model.training_map = doc.at("training_map").get<std::vector<double>>();
    for (const auto& pr : doc.at("interaction_pairs"))
      model.interaction_pairs.emplace_back(pr.at(0).get<std::size_t>(), pr.at(1).get<std::size_t>());
    return model;
  } catch (const json::exception& e) {
    throw FormatError(FormatErrc::malformed, std::string("LMART: ") + e.what());
  } catch (const InvalidInput& e) {
    throw FormatError(FormatErrc::malformed, std::string("LMART: ") + e.what());
  }
}

void save_model(const LambdaMartModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot create " + path.string());
  write_model(model, out);
  if (!out) throw Error("write failed: " + path.string());
}

LambdaMartModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_model(in);
}

}  // namespace ocsi::ltr
