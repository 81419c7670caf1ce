#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ocsi/catalog.hpp"
#include "ocsi/embedstore.hpp"

namespace ocsi::ltr {

// Candidates of one query with row-major features and binary relevance.
struct QueryGroup {
  ItemId query_id;
  std::vector<ItemId> candidate_ids;
  std::size_t n_features = 0;
  std::vector<double> features;
  std::vector<std::uint8_t> relevance;

  std::size_t size() const noexcept { return candidate_ids.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * n_features, n_features}; }
};

struct LtrParams {
  std::size_t n_trees = 300;
  double learning_rate = 0.1;
  std::size_t max_leaves = 31;
  std::size_t min_samples_leaf = 1;
  std::size_t max_interactions = 50;
  // Leading trees restricted to a single feature before pair trees start.
  std::size_t main_effect_trees = 100;
  double sigma = 1.0;
  double leaf_value_cap = 10.0;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string> kDefaultFeatureNames{"er_sim", "csi_sim"};

// One group per query row (items with work id and song title); candidates in
// ascending id order, self excluded; features [er, csi].
std::vector<QueryGroup> build_ranking_dataset(const SimilarityMatrix& er, const SimilarityMatrix& csi,
                                              const Catalog& catalog);

// Same features, restricted to sampled pairs grouped by query_id.
std::vector<QueryGroup> build_pair_dataset(const SimilarityMatrix& er, const SimilarityMatrix& csi,
                                           const Catalog& catalog, std::span<const PairSample> pairs);

// Row order induced by descending score, ties to the lower row index.
std::vector<std::size_t> ranking_order(std::span<const double> scores);

double average_precision_group(std::span<const double> scores, std::span<const std::uint8_t> relevance);

// AP after swapping the rank positions of rows i and j, minus AP before.
double delta_ap(std::span<const double> scores, std::span<const std::uint8_t> relevance, std::size_t i,
                std::size_t j);

struct Gradients {
  std::vector<double> lambdas;
  std::vector<double> hessians;
};

// LambdaRank pairs (relevant i, non-relevant j) weighted by |delta_ap|.
Gradients lambda_gradients(const QueryGroup& group, std::span<const double> scores, double sigma);

// Binary tree; a node child index < 0 refers to leaf ~index.
class RegressionTree {
 public:
  struct Node {
    std::size_t feature = 0;
    double threshold = 0.0;
    int left = -1;
    int right = -1;

    friend bool operator==(const Node&, const Node&) = default;
  };

  RegressionTree() : leaf_values_{0.0} {}
  RegressionTree(std::vector<Node> nodes, std::vector<double> leaf_values);

  // Goes left iff feature <= threshold.
  std::size_t leaf_index(std::span<const double> features) const;
  double predict(std::span<const double> features) const { return leaf_values_[leaf_index(features)]; }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& leaf_values() const noexcept { return leaf_values_; }
  std::size_t num_leaves() const noexcept { return leaf_values_.size(); }
  // Distinct split features, ascending.
  std::vector<std::size_t> used_features() const;

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<Node> nodes_;
  std::vector<double> leaf_values_;
};

class LambdaMartModel {
 public:
  LambdaMartModel() = default;
  LambdaMartModel(std::vector<RegressionTree> trees, double learning_rate, std::vector<std::string> feature_names);

  // learning_rate * sum of tree outputs. Throws InvalidInput on arity mismatch.
  double predict(std::span<const double> features) const;

  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  double learning_rate() const noexcept { return learning_rate_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  std::size_t n_features() const noexcept { return feature_names_.size(); }

  // Training metadata.
  LtrParams params;
  std::vector<double> training_map;
  std::vector<std::pair<std::size_t, std::size_t>> interaction_pairs;

 private:
  std::vector<RegressionTree> trees_;
  double learning_rate_ = 0.1;
  std::vector<std::string> feature_names_;
};

LambdaMartModel fit(std::span<const QueryGroup> groups, const LtrParams& params,
                    std::vector<std::string> feature_names = kDefaultFeatureNames);

// Mean AP over groups with at least one relevant row.
double mean_average_precision(std::span<const QueryGroup> groups, const LambdaMartModel& model);

// Fused score matrix with the er matrix's ids; kind = fused.
SimilarityMatrix rank_matrix(const LambdaMartModel& model, const SimilarityMatrix& er, const SimilarityMatrix& csi);

void write_model(const LambdaMartModel& model, std::ostream& out);
LambdaMartModel read_model(std::istream& in);
void save_model(const LambdaMartModel& model, const std::filesystem::path& path);
LambdaMartModel load_model(const std::filesystem::path& path);

}  // namespace ocsi::ltr
