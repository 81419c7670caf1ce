// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "ocsi/catalog.hpp"
#include "ocsi/cli.hpp"
#include "ocsi/embedstore.hpp"
#include "ocsi/evalmetrics.hpp"
#include "ocsi/ltr.hpp"
#include "ocsi/matcher_bridge.hpp"
#include "ocsi/scorer_client.hpp"
#include "ocsi/textsim.hpp"
#include "ocsi/tripletlab.hpp"

using namespace ocsi;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// 1. Indel distance against the O(n*m) DP on every pair of short strings.

std::size_t indel_dp(const std::u32string& a, const std::u32string& b) {
  std::size_t d[7][7];
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = a[i - 1] == b[j - 1] ? d[i - 1][j - 1] : 1 + std::min(d[i - 1][j], d[i][j - 1]);
  return d[a.size()][b.size()];
}

Outcome indel_oracle() {
  std::vector<std::u32string> strings{U""};
  for (std::size_t begin = 0, len = 1; len <= 6; ++len) {
    const std::size_t end = strings.size();
    for (std::size_t i = begin; i < end; ++i)
      for (char32_t c : {U'a', U'b', U'c'}) strings.push_back(strings[i] + c);
    begin = end;
  }
  const auto start = Clock::now();
  std::size_t pairs = 0, mismatches = 0;
  for (const auto& a : strings)
    for (const auto& b : strings) {
      mismatches += textsim::indel_distance(a, b) != indel_dp(a, b);
      ++pairs;
    }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 10.0, std::to_string(pairs) + " pairs, " + std::to_string(mismatches) +
                                              " mismatches, " + fmt(secs, 2) + " s"};
}

// ---------------------------------------------------------------------------
// 2. Fuzzy fixtures.

Outcome fuzzy_fixtures() {
  const double y = textsim::token_ratio("Yesterday", "Yesterday's Kitchen: Old Recipes");
  const double h = textsim::token_ratio("Hush", "Relaxing Hush Sounds");
  const bool ok = std::abs(y - 0.45) <= 1e-9 && std::abs(h - 1.0 / 3.0) <= 1e-9;
  return {ok, "Yesterday " + fmt(y, 12) + ", Hush " + fmt(h, 12)};
}

// ---------------------------------------------------------------------------
// 3. AP / first relevant rank against brute force.

Outcome ap_oracle() {
  Rng rng(303);
  // Every work has at least one candidate, so all 1000 rankings are scored;
  // 10 extra queries from an absent work exercise the skip rule.
  constexpr std::size_t kRanked = 1000, kOrphans = 10, kQueries = kRanked + kOrphans, kWorks = 6;
  std::vector<Item> items;
  std::vector<ItemId> cand_ids, query_ids;
  for (std::size_t c = 0; c < 20; ++c) {
    const std::string id = "c" + std::to_string(100 + c);
    if (c >= kWorks && rng.below(4) == 0) {
      items.push_back(testkit::make_distractor(id, "v"));
    } else {
      const std::size_t work = c < kWorks ? c : rng.below(kWorks);
      items.push_back(testkit::make_item(id, "W" + std::to_string(work), "s", "v"));
    }
    cand_ids.emplace_back(id);
  }
  for (std::size_t q = 0; q < kQueries; ++q) {
    const std::string id = "q" + std::to_string(10000 + q);
    const std::string work = q < kRanked ? "W" + std::to_string(rng.below(kWorks)) : "orphan";
    items.push_back(testkit::make_item(id, work, "s", "v"));
    query_ids.emplace_back(id);
  }
  const Catalog cat(items);
  // Coarse score grid so ties (broken by candidate id) are frequent.
  std::vector<float> scores(kQueries * 20);
  for (auto& v : scores) v = static_cast<float>(rng.below(8)) / 8.0f;
  const SimilarityMatrix sim(query_ids, cand_ids, scores, SimilarityKind::cosine);
  const auto report = evaluate(sim, cat);

  std::size_t mismatches = 0, skipped = 0;
  double ap_sum = 0.0, rank_sum = 0.0;
  std::size_t k = 0;
  for (std::size_t q = 0; q < kQueries; ++q) {
    std::vector<std::size_t> order(20);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const float sa = scores[q * 20 + a], sb = scores[q * 20 + b];
      return sa != sb ? sa > sb : cand_ids[a] < cand_ids[b];
    });
    const Item& query = *cat.find(query_ids[q]);
    std::vector<int> rel;
    for (auto c : order) rel.push_back(same_work(query, *cat.find(cand_ids[c])) ? 1 : 0);
    const int total = std::accumulate(rel.begin(), rel.end(), 0);
    if (total == 0) {
      ++skipped;
      continue;
    }
    double ap = 0.0;
    std::size_t first = 0;
    for (std::size_t p = 0; p < rel.size(); ++p) {
      if (!rel[p]) continue;
      if (!first) first = p + 1;
      const int hits = std::accumulate(rel.begin(), rel.begin() + static_cast<std::ptrdiff_t>(p + 1), 0);
      ap += static_cast<double>(hits) / static_cast<double>(p + 1);
    }
    ap /= total;
    if (k >= report.queries.size()) return {false, "report has too few queries"};
    const auto& got = report.queries[k++];
    mismatches += got.query_id != query_ids[q] || got.average_precision != ap || got.first_relevant_rank != first;
    ap_sum += ap;
    rank_sum += static_cast<double>(first);
  }
  const double map = ap_sum / static_cast<double>(k), mr1 = rank_sum / static_cast<double>(k);
  const bool ok = mismatches == 0 && k == kRanked && k == report.evaluated && skipped == kOrphans &&
                  skipped == report.skipped &&
                  std::abs(map - report.map) <= 1e-12 && std::abs(mr1 - report.mr1) <= 1e-12;
  return {ok, std::to_string(k) + " evaluated, " + std::to_string(skipped) + " skipped, " +
                  std::to_string(mismatches) + " mismatches, MAP " + fmt(report.map) + ", MR1 " + fmt(report.mr1)};
}

// ---------------------------------------------------------------------------
// 4. delta_ap against swap-and-recompute; lambda sums.

double ap_ranked(const std::vector<std::uint8_t>& r) {
  double sum = 0;
  int hits = 0;
  for (std::size_t k = 0; k < r.size(); ++k)
    if (r[k]) sum += static_cast<double>(++hits) / static_cast<double>(k + 1);
  return hits ? sum / hits : 0.0;
}

Outcome delta_ap_consistency() {
  Rng rng(404);
  double worst_delta = 0.0, worst_sum = 0.0;
  std::size_t pairs = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    ltr::QueryGroup g;
    g.query_id = ItemId("q");
    g.n_features = 1;
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      g.candidate_ids.emplace_back("c" + std::to_string(i));
      g.features.push_back(0.0);
      g.relevance.push_back(rng.below(2));
      s[i] = rng.below(3) == 0 ? static_cast<double>(rng.below(3)) : rng.uniform(-3, 3);
    }
    g.relevance[rng.below(n)] = 1;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] != s[b] ? s[a] > s[b] : a < b; });
    std::vector<std::size_t> pos(n);
    std::vector<std::uint8_t> ranked;
    for (std::size_t p = 0; p < n; ++p) {
      pos[order[p]] = p;
      ranked.push_back(g.relevance[order[p]]);
    }
    const double before = ap_ranked(ranked);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        auto swapped = ranked;
        std::swap(swapped[pos[i]], swapped[pos[j]]);
        worst_delta = std::max(worst_delta, std::abs(ltr::delta_ap(s, g.relevance, i, j) - (ap_ranked(swapped) - before)));
        ++pairs;
      }
    const auto grads = ltr::lambda_gradients(g, s, 1.0);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(grads.lambdas.begin(), grads.lambdas.end(), 0.0)));
  }
  return {worst_delta <= 1e-12 && worst_sum <= 1e-9, std::to_string(pairs) + " pairs, max |error| " +
                                                        sci(worst_delta) + ", max |lambda sum| " +
                                                        sci(worst_sum)};
}

// ---------------------------------------------------------------------------
// 5. LambdaMART on the separable fixture.

std::string model_bytes(const ltr::LambdaMartModel& m) {
  std::ostringstream os;
  ltr::write_model(m, os);
  return os.str();
}

Outcome lambdamart_fixture() {
  Rng rng(505);
  std::vector<ltr::QueryGroup> groups;
  for (int q = 0; q < 200; ++q) {
    ltr::QueryGroup g;
    g.query_id = ItemId("q" + std::to_string(q));
    g.n_features = 2;
    for (int c = 0; c < 20; ++c) {
      g.candidate_ids.emplace_back("c" + std::to_string(c));
      const double er = rng.uniform(), csi = rng.uniform();
      g.features.insert(g.features.end(), {er, csi});
      g.relevance.push_back(er > 0.5);
    }
    groups.push_back(std::move(g));
  }
  ltr::LtrParams p;
  p.n_trees = 100;
  p.seed = 505;
  const auto start = Clock::now();
  const auto a = ltr::fit(groups, p);
  const double secs = seconds_since(start);
  const auto b = ltr::fit(groups, p);
  const bool identical = model_bytes(a) == model_bytes(b);
  const double map = a.training_map.back();
  return {map >= 0.95 && secs < 60.0 && identical, "training MAP " + fmt(map) + " after " +
                                                       std::to_string(a.trees().size()) + " trees, " + fmt(secs, 2) +
                                                       " s, identical=" + (identical ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 6. Fusion gain on the complementary-modality fixture (held-out seed).

Outcome fusion_gain() {
  const auto train = testkit::make_complementary_fixture(601);
  const auto test = testkit::make_complementary_fixture(602);
  ltr::LtrParams p;
  p.n_trees = 100;
  const auto model = ltr::fit(ltr::build_ranking_dataset(train.a, train.b, train.catalog), p);
  const auto fused = evaluate(ltr::rank_matrix(model, test.a, test.b), test.catalog);
  const auto ra = evaluate(test.a, test.catalog), rb = evaluate(test.b, test.catalog);
  const bool ok = fused.map >= std::max(ra.map, rb.map) + 0.10 && fused.mr1 <= std::min(ra.mr1, rb.mr1);
  return {ok, "MAP fused " + fmt(fused.map) + " vs A " + fmt(ra.map) + " / B " + fmt(rb.map) + "; MR1 fused " +
                  fmt(fused.mr1, 2) + " vs A " + fmt(ra.mr1, 2) + " / B " + fmt(rb.mr1, 2)};
}

// ---------------------------------------------------------------------------
// 7. Two-tier merge boundaries.

std::vector<std::size_t> sorted_by(const std::vector<ItemId>& ids, const std::function<double(std::size_t)>& key) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return key(a) != key(b) ? key(a) > key(b) : ids[a] < ids[b]; });
  return order;
}

Outcome blocking_boundaries() {
  Rng rng(707);
  std::size_t checked = 0, failures = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t rows = 1 + rng.below(4), cols = 1 + rng.below(25);
    const auto qids = testkit::numbered_ids("q", rows), cids = testkit::numbered_ids("c", cols);
    std::vector<float> blk_scores(rows * cols);
    for (auto& v : blk_scores) v = static_cast<float>(rng.below(16)) / 8.0f - 1.0f;
    const SimilarityMatrix blk(qids, cids, blk_scores, SimilarityKind::cosine);
    // Confidences on a dyadic grid keep 2 + confidence exact in float.
    std::vector<double> conf(rows * cols);
    for (auto& c : conf) c = static_cast<double>(rng.below(65)) / 64.0;
    auto heavy_for = [&](const RoutedPairs& routing) {
      std::vector<HeavyScore> heavy;
      for (std::size_t r = 0; r < rows; ++r)
        for (auto c : routing.routed[r]) heavy.push_back({make_pair_id(qids[r], cids[c]), conf[r * cols + c]});
      return heavy;
    };
    for (std::size_t k : {cols + rng.below(3), std::size_t{0}, rng.below(cols + 1)}) {
      const auto routing = route_topk(blk, {k});
      const auto merged = merge_two_tier(blk, heavy_for(routing), routing);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto got = rank_row(merged, r);
        bool ok = true;
        if (k >= cols) ok = got == sorted_by(cids, [&](std::size_t c) { return conf[r * cols + c]; });
        if (k == 0) ok = got == sorted_by(cids, [&](std::size_t c) { return blk_scores[r * cols + c]; });
        for (std::size_t i = 0; i < got.size(); ++i)
          ok = ok && merged.tier(r, got[i]) == (i < std::min(k, cols) ? Tier::heavy : Tier::blocker);
        failures += !ok;
        ++checked;
      }
    }
  }
  // One instance end to end through the in-harness echo stub over the wire protocol.
  const SimilarityMatrix blk(testkit::numbered_ids("q", 2), testkit::numbered_ids("c", 6),
                             {0.1f, 0.9f, 0.3f, 0.5f, 0.2f, 0.4f, 0.6f, 0.6f, 0.1f, 0.0f, 0.8f, 0.2f},
                             SimilarityKind::cosine);
  std::vector<Item> items;
  for (const auto& id : blk.query_ids()) items.push_back(testkit::make_item(id.str(), "W", "song", "v"));
  for (const auto& id : blk.candidate_ids()) items.push_back(testkit::make_distractor(id.str(), "v"));
  const auto routing = route_topk(blk, {3});
  const auto heavy =
      score_routed(serialize_routed(blk, routing, Catalog(items)), ScorerEndpoint::parse(std::string("cmd:") + ECHO_SCORER));
  const auto merged = merge_two_tier(blk, heavy, routing);
  for (std::size_t r = 0; r < 2; ++r) {
    auto expected = routing.routed[r];
    std::sort(expected.begin(), expected.end());  // constant confidence: id order
    const auto got = rank_row(merged, r);
    failures += !std::equal(expected.begin(), expected.end(), got.begin()) ||
                !std::equal(routing.residual[r].begin(), routing.residual[r].end(), got.begin() + 3);
    ++checked;
  }
  return {failures == 0, std::to_string(checked) + " rankings checked, " + std::to_string(failures) + " failures"};
}

// ---------------------------------------------------------------------------
// 8. Batch-hard mining against exhaustive search.

double cos_dist(std::span<const float> u, std::span<const float> v) {
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  return 1.0 - ((nu == 0 || nv == 0) ? 0.0 : dot / (std::sqrt(nu) * std::sqrt(nv)));
}

Outcome mining_oracle() {
  Rng rng(808);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> labels;
    for (std::size_t w = 0; w < 4; ++w) labels.insert(labels.end(), 4, w);
    rng.shuffle(labels);
    const std::size_t dim = 2 + rng.below(6);
    const tripletlab::MiningBatch batch(dim, testkit::random_floats(rng, 16 * dim), labels);
    const auto got = tripletlab::batch_hard_triplets(batch);
    for (std::size_t a = 0; a < 16; ++a) {
      // All (p, n) combinations; keep the lexicographically first maximiser
      // of d(a,p) and minimiser of d(a,n).
      std::size_t best_p = 16, best_n = 16;
      for (std::size_t p = 0; p < 16; ++p)
        for (std::size_t n = 0; n < 16; ++n) {
          if (p == a || labels[p] != labels[a] || labels[n] == labels[a]) continue;
          const double dp = cos_dist(batch.row(a), batch.row(p)), dn = cos_dist(batch.row(a), batch.row(n));
          if (best_p == 16 || dp > cos_dist(batch.row(a), batch.row(best_p))) best_p = p;
          if (best_n == 16 || dn < cos_dist(batch.row(a), batch.row(best_n))) best_n = n;
        }
      mismatches += got[a].positive != best_p || got[a].negative != best_n;
    }
  }
  const double l1 = tripletlab::triplet_loss(0.1, 0.5, 0.3), l2 = tripletlab::triplet_loss(0.5, 0.4, 0.3);
  const bool ok = mismatches == 0 && l1 == 0.0 && std::abs(l2 - 0.4) <= 1e-12;
  return {ok, "1600 anchors, " + std::to_string(mismatches) + " mismatches; losses " + fmt(l1, 6) + ", " + fmt(l2, 6)};
}

// ---------------------------------------------------------------------------
// 9. Hard-negative noise harness through the CLI.

Outcome noise_harness() {
  testkit::TempDir dir;
  const fs::path fixtures = OCSI_FIXTURE_DIR;
  std::ostringstream out, err;
  auto cli = [&](std::vector<std::string> args) { return cli::run(args, out, err); };
  const auto p = [&](const char* n) { return (dir / n).string(); };
  if (cli({"make-subset", "--catalog", (fixtures / "noise_works.jsonl").string(), "--mode", "noise", "--noise",
           (fixtures / "noise_titles.jsonl").string(), "--out", p("noisy.jsonl")}) != 0 ||
      cli({"textsim", "--catalog", p("noisy.jsonl"), "--out", p("noisy.sim")}) != 0 ||
      cli({"evaluate", "--sim", p("noisy.sim"), "--catalog", p("noisy.jsonl"), "--out-report", p("noisy.eval")}) != 0)
    return {false, "pipeline failed: " + err.str()};

  const Catalog cat = load_catalog(dir / "noisy.jsonl");
  const auto sim = load_similarity(dir / "noisy.sim");
  const auto report = load_report(dir / "noisy.eval");
  std::size_t works = cat.work_count(), noise = 0, zero_scores = 0, relevant_noise = 0;
  for (const auto& item : cat.items()) {
    if (item.work_id) continue;
    ++noise;
    const std::string trigger = item.description.substr(item.description.find(':') + 1);
    const std::size_t col = *sim.candidate_position(item.id);
    for (std::size_t r = 0; r < sim.rows(); ++r) {
      const Item& q = *cat.find(sim.query_ids()[r]);
      if (*q.song_title == trigger && !(sim.at(r, col) > 0.0f)) ++zero_scores;
    }
  }
  for (std::size_t r = 0; r < sim.rows(); ++r) {
    const auto ranked = ranked_list(sim, r, cat);
    for (std::size_t i = 0; i < ranked.candidates.size(); ++i)
      if (ranked.relevant[i] && !cat.find(ranked.candidates[i])->work_id) ++relevant_noise;
  }
  std::size_t per_query_relevant_ok = 0;
  for (const auto& q : report.queries) per_query_relevant_ok += q.n_relevant == 3;
  const bool ok = works == 12 && noise == 60 && zero_scores == 0 && relevant_noise == 0 &&
                  per_query_relevant_ok == report.queries.size() && report.evaluated == 48;
  return {ok, std::to_string(works) + " works, " + std::to_string(noise) + " noise items, " +
                  std::to_string(zero_scores) + " zero trigger scores, " + std::to_string(relevant_noise) +
                  " noise items counted relevant, MAP " + fmt(report.map)};
}

// ---------------------------------------------------------------------------
// 10. Byte-identical save -> load -> save for every format.

ltr::RegressionTree random_tree(Rng& rng, std::size_t n_features) {
  std::vector<ltr::RegressionTree::Node> nodes;
  std::vector<double> leaves;
  const std::function<int(int)> grow = [&](int depth) -> int {
    if (depth >= 4 || (depth > 0 && rng.below(3) == 0)) {
      const double specials[] = {0.0, -0.0, 1e-300, -1.7976931348623157e308, 0.1};
      leaves.push_back(rng.below(4) == 0 ? specials[rng.below(5)] : rng.uniform(-10, 10));
      return ~static_cast<int>(leaves.size() - 1);
    }
    const auto idx = nodes.size();
    nodes.push_back({rng.below(n_features), rng.uniform(-1, 1), -1, -1});
    const int l = grow(depth + 1);
    const int r = grow(depth + 1);
    nodes[idx].left = l;
    nodes[idx].right = r;
    return static_cast<int>(idx);
  };
  if (rng.below(5) == 0) return ltr::RegressionTree({}, {rng.uniform()});
  grow(0);
  return ltr::RegressionTree(nodes, leaves);
}

Outcome format_round_trips() {
  testkit::TempDir dir;
  Rng rng(1010);
  std::map<std::string, std::size_t> failures{{"EMB1", 0}, {"SIM1", 0}, {"LMART/1", 0}, {"EVAL/1", 0}};
  const auto a = dir / "a", b = dir / "b";
  auto same = [&] { return testkit::read_file(a) == testkit::read_file(b); };
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = rng.below(12), dim = 1 + rng.below(9);
    std::vector<ItemId> ids;
    for (std::size_t i = 0; i < n; ++i) ids.emplace_back("id-" + std::to_string(rng.next()) + "-é");
    const EmbeddingMatrix emb(ids, dim, testkit::random_floats(rng, n * dim, -1e6, 1e6));
    save_embeddings(emb, a);
    save_embeddings(load_embeddings(a), b);
    failures["EMB1"] += !same() || !(load_embeddings(b) == emb);

    const std::size_t rows = rng.below(6), cols = rng.below(9);
    const auto kind = static_cast<SimilarityKind>(rng.below(4));
    std::vector<std::uint8_t> tiers;
    if (kind == SimilarityKind::tiered) tiers.resize(rows * cols), std::generate(tiers.begin(), tiers.end(), [&] {
      return static_cast<std::uint8_t>(rng.below(2));
    });
    const SimilarityMatrix sim(testkit::numbered_ids("q", rows), testkit::numbered_ids("c", cols),
                               testkit::random_floats(rng, rows * cols, -3, 3), kind, tiers);
    save_similarity(sim, a);
    save_similarity(load_similarity(a), b);
    failures["SIM1"] += !same() || !(load_similarity(b) == sim);

    const std::size_t nf = 1 + rng.below(3);
    std::vector<ltr::RegressionTree> trees;
    for (auto t = rng.below(6); t > 0; --t) trees.push_back(random_tree(rng, nf));
    std::vector<std::string> names;
    for (std::size_t f = 0; f < nf; ++f) names.push_back("f" + std::to_string(f));
    ltr::LambdaMartModel model(trees, rng.uniform(0.01, 1.0), names);
    model.params.seed = rng.next();
    model.params.sigma = rng.uniform(0.1, 3);
    for (auto t = rng.below(5); t > 0; --t) model.training_map.push_back(rng.uniform());
    if (nf >= 2) model.interaction_pairs.emplace_back(0, 1);
    ltr::save_model(model, a);
    ltr::save_model(ltr::load_model(a), b);
    failures["LMART/1"] += !same() || !(ltr::load_model(b).trees() == model.trees());

    EvalReport report;
    for (auto q = rng.below(6); q > 0; --q)
      report.queries.push_back({ItemId("q" + std::to_string(rng.next())), 1 + rng.below(5), rng.uniform(),
                                1 + rng.below(40)});
    report.evaluated = report.queries.size();
    report.skipped = rng.below(3);
    report.map = rng.uniform();
    report.mr1 = rng.uniform(1, 40);
    save_report(report, a);
    save_report(load_report(a), b);
    failures["EVAL/1"] += !same();
  }
  std::string detail;
  std::size_t total = 0;
  for (const auto& [name, f] : failures) {
    detail += name + " " + std::to_string(25 - f) + "/25 ";
    total += f;
  }
  return {total == 0, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"indel distance equals DP oracle on all strings <= 6 over {a,b,c}", indel_oracle},
      {"fuzzy fixtures (Yesterday 0.45, Hush 1/3)", fuzzy_fixtures},
      {"AP and first relevant rank match brute force", ap_oracle},
      {"delta_ap matches swap-and-recompute; lambda sums vanish", delta_ap_consistency},
      {"LambdaMART separable fixture", lambdamart_fixture},
      {"fusion gain on complementary modalities", fusion_gain},
      {"two-tier blocking boundaries and tier dominance", blocking_boundaries},
      {"batch-hard mining equals exhaustive search", mining_oracle},
      {"hard-negative noise harness", noise_harness},
      {"format round trips are byte-identical", format_round_trips},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << std::setw(2) << (i + 1) << "  " << criteria[i].first << "  ["
              << o.detail << "]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
