// Stub heavy scorer for the newline-delimited JSON matcher protocol.
// Reads requests on stdin and answers on stdout; --mode selects well-behaved
// or deliberately broken behaviour for client tests.

#include <chrono>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

using nlohmann::json;

namespace {

std::set<std::string> words(const std::string& text) {
  std::set<std::string> out;
  std::istringstream is(text);
  std::string w;
  while (is >> w) {
    if (w.front() == '[' && w.back() == ']') continue;
    for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.insert(w);
  }
  return out;
}

// Share of the query's title words found anywhere in the candidate entry.
double title_overlap(const std::string& text) {
  const auto sep = text.find(" [SEP] ");
  if (sep == std::string::npos) return 0.0;
  const std::string left = text.substr(0, sep);
  const auto start = left.find("[COL] title [VAL] ");
  if (start == std::string::npos) return 0.0;
  const auto value_begin = start + 18;
  const auto value_end = left.find(" [COL] ", value_begin);
  const auto title = words(left.substr(value_begin, value_end - value_begin));
  if (title.empty()) return 0.0;
  const auto cand = words(text.substr(sep + 7));
  std::size_t hits = 0;
  for (const auto& w : title) hits += cand.count(w);
  return static_cast<double>(hits) / static_cast<double>(title.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Stub matcher scorer");
  std::string mode = "ok";
  double confidence = 0.5;
  std::size_t drop_after = 0;
  app.add_option("--mode", mode)
      ->check(CLI::IsMember({"ok", "token-overlap", "unknown-id", "malformed", "out-of-range", "missing-id", "duplicate",
                             "drop-after", "no-handshake", "bad-version", "reverse", "silent"}));
  app.add_option("--confidence", confidence);
  app.add_option("--drop-after", drop_after, "Answer this many requests, then exit (mode drop-after)");
  CLI11_PARSE(app, argc, argv);

  if (mode == "no-handshake") {
    std::cout << "{\"ready\":true}\n" << std::flush;
  } else {
    std::cout << json{{"hello", "matcher"}, {"version", mode == "bad-version" ? 2 : 1}}.dump() << '\n' << std::flush;
  }

  std::vector<std::string> held;
  std::size_t answered = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    const json req = json::parse(line);
    const std::string id = req.at("id").get<std::string>();
    double conf = confidence;
    if (mode == "token-overlap") conf = title_overlap(req.at("text").get<std::string>());

    std::string reply;
    if (mode == "unknown-id") {
      reply = json{{"id", id + "#"}, {"confidence", conf}}.dump();
    } else if (mode == "malformed") {
      reply = "confidence=" + std::to_string(conf);
    } else if (mode == "out-of-range") {
      reply = json{{"id", id}, {"confidence", 1.5}}.dump();
    } else if (mode == "missing-id") {
      reply = json{{"confidence", conf}}.dump();
    } else {
      reply = json{{"id", id}, {"confidence", conf}}.dump();
    }

    if (mode == "silent") continue;
    if (mode == "reverse") {
      held.push_back(reply);
      continue;
    }
    std::cout << reply << '\n';
    if (mode == "duplicate") std::cout << reply << '\n';
    std::cout << std::flush;
    if (mode == "drop-after" && ++answered >= drop_after) return 0;
  }
  for (auto it = held.rbegin(); it != held.rend(); ++it) std::cout << *it << '\n';
  std::cout << std::flush;
  if (mode == "silent") std::this_thread::sleep_for(std::chrono::seconds(30));
  return 0;
}
