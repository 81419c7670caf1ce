#include "ocsi/cli.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ocsi/catalog.hpp"
#include "ocsi/embedstore.hpp"
#include "ocsi/evalmetrics.hpp"
#include "ocsi/ltr.hpp"
#include "ocsi/manifest.hpp"
#include "ocsi/matcher_bridge.hpp"
#include "ocsi/rng.hpp"
#include "ocsi/scorer_client.hpp"
#include "ocsi/textsim.hpp"
#include "ocsi/tripletlab.hpp"

namespace ocsi::cli {

namespace fs = std::filesystem;

namespace {

// What a subcommand read and wrote, for the manifest.
struct RunRecord {
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  std::optional<std::uint64_t> seed;
};

struct Globals {
  unsigned threads = 0;
  std::string manifest;

  unsigned thread_count() const {
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot create " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ',';
    out += p;
  }
  return out;
}

using Handler = std::function<RunRecord(std::ostream&)>;

struct Subcommand {
  CLI::App* app;
  Handler handler;
};

// ---------------------------------------------------------------------------

Subcommand add_ingest_check(CLI::App& root) {
  auto* app = root.add_subcommand("ingest-check", "Validate a catalog and print a summary");
  auto catalog = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  app->add_option("--catalog", *catalog, "Catalog JSONL")->required();
  app->add_option("--out", *out_path, "Optional JSON summary");
  return {app, [=](std::ostream& out) {
            const Catalog cat = load_catalog(*catalog);
            std::size_t queries = 0, distractors = 0, with_work = 0;
            for (const auto& item : cat.items()) {
              queries += item.is_query();
              distractors += !item.work_id;
              with_work += item.work_id.has_value();
            }
            nlohmann::json summary = {{"items", cat.size()},
                                      {"works", cat.work_count()},
                                      {"queries", queries},
                                      {"work_items", with_work},
                                      {"distractors", distractors}};
            out << "items " << cat.size() << ", works " << cat.work_count() << ", queries " << queries
                << ", distractors " << distractors << '\n';
            RunRecord rec;
            rec.inputs.push_back(*catalog);
            if (!out_path->empty()) {
              write_text(*out_path, summary.dump(1) + "\n");
              rec.outputs.push_back(*out_path);
            }
            return rec;
          }};
}

Subcommand add_textsim(CLI::App& root, const Globals& g) {
  auto* app = root.add_subcommand("textsim", "Fuzzy token-ratio similarity matrix from a catalog");
  auto catalog = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  app->add_option("--catalog", *catalog, "Catalog JSONL")->required();
  app->add_option("--out", *out_path, "Output SIM1 file")->required();
  return {app, [=, &g](std::ostream& out) {
            const Catalog cat = load_catalog(*catalog);
            const auto sim = textsim::fuzzy_similarity(cat, g.thread_count());
            save_similarity(sim, *out_path);
            out << "textsim: " << sim.rows() << " x " << sim.cols() << " -> " << *out_path << '\n';
            return RunRecord{{*catalog}, {*out_path}, std::nullopt};
          }};
}

Subcommand add_embed_sim(CLI::App& root, const Globals& g) {
  auto* app = root.add_subcommand("embed-sim", "Cosine similarity matrix between two embedding files");
  auto queries = std::make_shared<std::string>();
  auto candidates = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  app->add_option("--queries", *queries, "Query EMB1 file")->required();
  app->add_option("--candidates", *candidates, "Candidate EMB1 file")->required();
  app->add_option("--out", *out_path, "Output SIM1 file")->required();
  return {app, [=, &g](std::ostream& out) {
            const auto q = load_embeddings(*queries);
            const auto c = load_embeddings(*candidates);
            const auto sim = full_similarity(q, c, g.thread_count());
            save_similarity(sim, *out_path);
            out << "embed-sim: " << sim.rows() << " x " << sim.cols() << " -> " << *out_path << '\n';
            return RunRecord{{*queries, *candidates}, {*out_path}, std::nullopt};
          }};
}

Subcommand add_block(CLI::App& root) {
  auto* app = root.add_subcommand("block", "Route top-k blocker pairs to a heavy scorer and merge tiers");
  auto blocker = std::make_shared<std::string>();
  auto catalog = std::make_shared<std::string>();
  auto scorer = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  auto k = std::make_shared<std::size_t>(BlockingConfig{}.k);
  auto attempts = std::make_shared<int>(ScorerOptions{}.max_attempts);
  auto timeout_ms = std::make_shared<long>(static_cast<long>(ScorerOptions{}.timeout.count()));
  app->add_option("--blocker", *blocker, "Blocker SIM1 file")->required();
  app->add_option("--catalog", *catalog, "Catalog JSONL")->required();
  app->add_option("--scorer", *scorer, "cmd:<command> or tcp:<host>:<port>")->required();
  app->add_option("--topk", *k, "Pairs per query routed to the scorer")->capture_default_str();
  app->add_option("--max-attempts", *attempts, "Connection attempts")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--timeout-ms", *timeout_ms, "Per-read timeout")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--out", *out_path, "Output tiered SIM1 file")->required();
  return {app, [=](std::ostream& out) {
            const auto blk = load_similarity(*blocker);
            const Catalog cat = load_catalog(*catalog);
            const auto routing = route_topk(blk, BlockingConfig{*k});
            const auto pairs = serialize_routed(blk, routing, cat);
            std::vector<HeavyScore> heavy;
            if (!pairs.empty())
              heavy = score_routed(pairs, ScorerEndpoint::parse(*scorer),
                                   ScorerOptions{*attempts, std::chrono::milliseconds(*timeout_ms)});
            const auto merged = merge_two_tier(blk, heavy, routing);
            save_similarity(merged, *out_path);
            out << "block: " << pairs.size() << " pairs scored -> " << *out_path << '\n';
            return RunRecord{{*blocker, *catalog}, {*out_path}, std::nullopt};
          }};
}

Subcommand add_make_pairs(CLI::App& root) {
  auto* app = root.add_subcommand("make-pairs", "Sample labelled training pairs");
  auto catalog = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  auto cfg = std::make_shared<PairSamplingConfig>();
  app->add_option("--catalog", *catalog, "Catalog JSONL")->required();
  app->add_option("--n-pos", cfg->n_pos, "Positive pairs")->capture_default_str();
  app->add_option("--n-neg", cfg->n_neg, "Negative pairs")->capture_default_str();
  app->add_option("--seed", cfg->seed, "Sampling seed")->required();
  app->add_option("--out", *out_path, "Output TSV")->required();
  return {app, [=](std::ostream& out) {
            const Catalog cat = load_catalog(*catalog);
            const auto pairs = sample_training_pairs(cat, *cfg);
            save_pairs(pairs, *out_path);
            out << "make-pairs: " << pairs.size() << " pairs -> " << *out_path << '\n';
            return RunRecord{{*catalog}, {*out_path}, cfg->seed};
          }};
}

Subcommand add_make_subset(CLI::App& root) {
  auto* app = root.add_subcommand("make-subset", "Derive a unique-title subset or a noise-injected catalog");
  auto catalog = std::make_shared<std::string>();
  auto mode = std::make_shared<std::string>();
  auto noise = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  app->add_option("--catalog", *catalog, "Catalog JSONL")->required();
  app->add_option("--mode", *mode, "unique or noise")->required()->check(CLI::IsMember({"unique", "noise"}));
  app->add_option("--noise", *noise, "Noise catalog JSONL (mode noise)");
  app->add_option("--out", *out_path, "Output catalog JSONL")->required();
  return {app, [=](std::ostream& out) {
            const Catalog cat = load_catalog(*catalog);
            RunRecord rec{{*catalog}, {*out_path}, std::nullopt};
            Catalog result;
            if (*mode == "unique") {
              if (!noise->empty()) throw InvalidInput("--noise is only valid with --mode noise");
              result = make_unique_subset(cat);
            } else {
              if (noise->empty()) throw InvalidInput("--mode noise requires --noise");
              result = inject_noise(cat, fs::path(*noise));
              rec.inputs.push_back(*noise);
            }
            save_catalog(result, *out_path);
            out << "make-subset: " << cat.size() << " -> " << result.size() << " items -> " << *out_path << '\n';
            return rec;
          }};
}

Subcommand add_mine(CLI::App& root) {
  auto* app = root.add_subcommand("mine", "Batch-hard triplet losses over sampled batches");
  auto emb = std::make_shared<std::string>();
  auto catalog = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  auto cfg = std::make_shared<tripletlab::MiningConfig>();
  auto batches = std::make_shared<std::size_t>(10);
  app->add_option("--emb", *emb, "EMB1 file")->required();
  app->add_option("--catalog", *catalog, "Catalog JSONL")->required();
  app->add_option("--works-per-batch", cfg->works_per_batch, "Works per batch (P)")->capture_default_str();
  app->add_option("--items-per-work", cfg->items_per_work, "Items per work (K)")->capture_default_str();
  app->add_option("--margin", cfg->margin, "Triplet margin")->capture_default_str();
  app->add_option("--seed", cfg->seed, "Sampling seed")->required();
  app->add_option("--batches", *batches, "Number of batches")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--out", *out_path, "Output JSON report (a .txt table is written beside it)")->required();
  return {app, [=](std::ostream& out) {
            const auto embeddings = load_embeddings(*emb);
            const Catalog cat = load_catalog(*catalog);
            nlohmann::json rows = nlohmann::json::array();
            std::ostringstream table;
            table << std::setw(6) << "batch" << "  " << std::setw(10) << "loss" << "  " << std::setw(8) << "active"
                  << '\n'
                  << std::fixed;
            double total = 0.0;
            for (std::size_t b = 0; b < *batches; ++b) {
              tripletlab::MiningConfig batch_cfg = *cfg;
              batch_cfg.seed = mix_seed(cfg->seed, b);
              const auto batch = tripletlab::sample_batch(embeddings, cat, batch_cfg);
              const auto triplets = tripletlab::batch_hard_triplets(batch);
              double sum = 0.0;
              std::size_t active = 0;
              for (const auto& t : triplets) {
                const double l = tripletlab::triplet_loss(t, cfg->margin);
                sum += l;
                active += l > 0.0;
              }
              const double loss = sum / static_cast<double>(triplets.size());
              total += loss;
              std::vector<std::string> ids;
              for (const auto& id : batch.item_ids()) ids.push_back(id.str());
              rows.push_back({{"batch", b}, {"loss", loss}, {"active_triplets", active}, {"items", ids}});
              table << std::setw(6) << b << "  " << std::setw(10) << std::setprecision(6) << loss << "  "
                    << std::setw(8) << active << '\n';
            }
            const double mean = total / static_cast<double>(*batches);
            table << "mean loss " << std::setprecision(6) << mean << '\n';
            nlohmann::json doc = {{"format", "MINE/1"},
                                  {"seed", cfg->seed},
                                  {"margin", cfg->margin},
                                  {"works_per_batch", cfg->works_per_batch},
                                  {"items_per_work", cfg->items_per_work},
                                  {"mean_loss", mean},
                                  {"batches", std::move(rows)}};
            write_text(*out_path, doc.dump(1) + "\n");
            const fs::path txt = *out_path + ".txt";
            write_text(txt, table.str());
            out << table.str();
            return RunRecord{{*emb, *catalog}, {*out_path, txt}, cfg->seed};
          }};
}

Subcommand add_train_ranker(CLI::App& root) {
  auto* app = root.add_subcommand("train-ranker", "Train a LambdaMART fusion ranker on [er, csi] features");
  auto er = std::make_shared<std::string>();
  auto csi = std::make_shared<std::string>();
  auto catalog = std::make_shared<std::string>();
  auto pairs = std::make_shared<std::string>();
  auto out_model = std::make_shared<std::string>();
  auto p = std::make_shared<ltr::LtrParams>();
  app->add_option("--er-sim", *er, "Entity-resolution SIM1 file")->required();
  app->add_option("--csi-sim", *csi, "CSI SIM1 file")->required();
  app->add_option("--catalog", *catalog, "Catalog JSONL")->required();
  app->add_option("--pairs", *pairs, "Train only on these sampled pairs (TSV)");
  app->add_option("--out-model", *out_model, "Output LMART/1 model")->required();
  app->add_option("--n-trees", p->n_trees, "Boosting rounds")->capture_default_str();
  app->add_option("--learning-rate", p->learning_rate, "Shrinkage")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--max-leaves", p->max_leaves, "Leaves per tree")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--min-samples-leaf", p->min_samples_leaf, "Minimum rows per leaf")->capture_default_str();
  app->add_option("--max-interactions", p->max_interactions, "Allowed feature pairs")->capture_default_str();
  app->add_option("--main-effect-trees", p->main_effect_trees, "Single-feature trees before pair trees")
      ->capture_default_str();
  app->add_option("--sigma", p->sigma, "Logistic scale")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--leaf-value-cap", p->leaf_value_cap, "Leaf value clamp")->capture_default_str();
  app->add_option("--seed", p->seed, "Recorded seed")->capture_default_str();
  return {app, [=](std::ostream& out) {
            const auto er_sim = load_similarity(*er);
            const auto csi_sim = load_similarity(*csi);
            const Catalog cat = load_catalog(*catalog);
            RunRecord rec{{*er, *csi, *catalog}, {*out_model}, p->seed};
            std::vector<ltr::QueryGroup> groups;
            if (pairs->empty()) {
              groups = ltr::build_ranking_dataset(er_sim, csi_sim, cat);
            } else {
              groups = ltr::build_pair_dataset(er_sim, csi_sim, cat, load_pairs(*pairs));
              rec.inputs.push_back(*pairs);
            }
            const auto model = ltr::fit(groups, *p);
            ltr::save_model(model, *out_model);
            out << "train-ranker: " << groups.size() << " groups, " << model.trees().size() << " trees, training MAP "
                << std::fixed << std::setprecision(4) << (model.training_map.empty() ? 0.0 : model.training_map.back())
                << " -> " << *out_model << '\n';
            return rec;
          }};
}

Subcommand add_rank(CLI::App& root) {
  auto* app = root.add_subcommand("rank", "Apply a trained ranker to [er, csi] matrices");
  auto model = std::make_shared<std::string>();
  auto er = std::make_shared<std::string>();
  auto csi = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  app->add_option("--model", *model, "LMART/1 model")->required();
  app->add_option("--er-sim", *er, "Entity-resolution SIM1 file")->required();
  app->add_option("--csi-sim", *csi, "CSI SIM1 file")->required();
  app->add_option("--out", *out_path, "Output fused SIM1 file")->required();
  return {app, [=](std::ostream& out) {
            const auto m = ltr::load_model(*model);
            const auto fused = ltr::rank_matrix(m, load_similarity(*er), load_similarity(*csi));
            save_similarity(fused, *out_path);
            out << "rank: " << fused.rows() << " x " << fused.cols() << " -> " << *out_path << '\n';
            return RunRecord{{*model, *er, *csi}, {*out_path}, std::nullopt};
          }};
}

Subcommand add_evaluate(CLI::App& root) {
  auto* app = root.add_subcommand("evaluate", "MAP and MR1 of a similarity matrix");
  auto sim = std::make_shared<std::string>();
  auto catalog = std::make_shared<std::string>();
  auto out_report = std::make_shared<std::string>();
  app->add_option("--sim", *sim, "SIM1 file")->required();
  app->add_option("--catalog", *catalog, "Catalog JSONL")->required();
  app->add_option("--out-report", *out_report, "Output EVAL/1 report (a .txt table is written beside it)")->required();
  return {app, [=](std::ostream& out) {
            const auto report = evaluate(load_similarity(*sim), load_catalog(*catalog));
            save_report(report, *out_report);
            const fs::path txt = *out_report + ".txt";
            const std::string table = format_table(report);
            write_text(txt, table);
            out << table;
            return RunRecord{{*sim, *catalog}, {*out_report, txt}, std::nullopt};
          }};
}

std::map<std::string, std::string> collect_flags(const CLI::App& root, const CLI::App& sub) {
  std::map<std::string, std::string> flags;
  auto add = [&](const CLI::App& app) {
    for (const CLI::Option* opt : app.get_options()) {
      const std::string name = opt->get_name();
      if (name == "--help" || name == "-h") continue;
      flags[name] = opt->count() > 0 ? join(opt->results()) : opt->get_default_str();
    }
  };
  add(root);
  add(sub);
  return flags;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App root("Online cover song identification pipeline", "ocsi");
  root.require_subcommand(1);
  root.set_version_flag("--version", kToolVersion);
  Globals globals;
  root.add_option("--threads", globals.threads, "Cap on worker threads (0 = hardware)")->capture_default_str();
  root.add_option("--manifest", globals.manifest, "Manifest path (default: <first output>.manifest.json)");

  std::vector<Subcommand> subs = {add_ingest_check(root), add_textsim(root, globals), add_embed_sim(root, globals),
                                  add_block(root),        add_make_pairs(root),      add_make_subset(root),
                                  add_mine(root),         add_train_ranker(root),    add_rank(root),
                                  add_evaluate(root)};
  for (auto& s : subs) s.app->fallthrough();

  std::vector<std::string> argv_store{"ocsi"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    root.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << root.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << root.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  const Subcommand* chosen = nullptr;
  for (const auto& s : subs)
    if (s.app->parsed()) chosen = &s;
  if (!chosen) {
    err << "usage error: no subcommand\n";
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    RunRecord rec = chosen->handler(out);
    RunManifest manifest;
    manifest.subcommand = chosen->app->get_name();
    manifest.flags = collect_flags(root, *chosen->app);
    manifest.seed = rec.seed;
    for (const auto& p : rec.inputs) manifest.add_input(p);
    for (const auto& p : rec.outputs) manifest.add_output(p);
    manifest.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fs::path manifest_path = globals.manifest;
    if (manifest_path.empty() && !rec.outputs.empty()) manifest_path = rec.outputs.front().string() + ".manifest.json";
    if (!manifest_path.empty()) save_manifest(manifest, manifest_path);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << chosen->app->get_name() << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ocsi::cli
