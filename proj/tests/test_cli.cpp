#include <doctest.h>

#include "loom/cli.hpp"

#include "support/fixtures.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace loom;
using loomtest::decision_response;
using loomtest::fields_response;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() / "loom_cli_tests";
    std::filesystem::create_directories(path);
  }
  std::string file(const std::string& name, const std::string& content) const {
    std::filesystem::path p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

struct CliResult {
  int exit_code;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  int code = run_cli(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::string fixture_json(const std::vector<std::pair<std::string, std::string>>& records) {
  Value doc = Value::array();
  for (const auto& [expect, response] : records) {
    Value record;
    if (!expect.empty()) record["expect_substring"] = expect;
    record["response"] = response;
    doc.push_back(record);
  }
  return doc.dump();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("parse prints the result map on success") {
  TempDir tmp;
  std::string schema = tmp.file("schema.json", R"({"Answer": "the answer, type: int"})");
  std::string fixture =
      tmp.file("fix.json", fixture_json({{"", "{\"###Answer###\": 42}"}}));
  CliResult result = run({"parse", "--schema", schema, "--system", "s", "--user", "u",
                          "--fixture", fixture});
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("\"Answer\": 42") != std::string::npos);
}

TEST_CASE("parse prints the transcript and exits 1 on exhausted retries") {
  TempDir tmp;
  std::string schema = tmp.file("schema.json", R"({"Answer": "the answer, type: int"})");
  std::string fixture = tmp.file("fix.json", fixture_json({{"", "junk"},
                                                           {"", "more junk"},
                                                           {"", "still junk"}}));
  CliResult result = run({"parse", "--schema", schema, "--user", "u", "--fixture", fixture});
  CHECK(result.exit_code == 1);
  CHECK(result.out.find("attempt 1 response:") != std::string::npos);
  CHECK(result.out.find("attempt 3 response:") != std::string::npos);
  CHECK(result.out.find("junk") != std::string::npos);
}

TEST_CASE("a missing schema file is a usage error") {
  CliResult result = run({"parse", "--schema", "/nonexistent/schema.json", "--user", "u",
                          "--provider", "scripted", "--fixture", "/nonexistent/fix.json"});
  CHECK(result.exit_code == 2);
}

TEST_CASE("unknown flags exit 2 with usage text") {
  CliResult result = run({"parse", "--no-such-flag", "x"});
  CHECK(result.exit_code == 2);
  CHECK_FALSE(result.err.empty());
}

TEST_CASE("--help prints usage and exits 0") {
  CliResult result = run({"--help"});
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("Subcommands") != std::string::npos);
}

TEST_CASE("no subcommand is a usage error") {
  CliResult result = run({});
  CHECK(result.exit_code == 2);
}

TEST_CASE("a custom delimiter is honored end to end") {
  TempDir tmp;
  std::string schema = tmp.file("schema.json", R"({"Answer": "the answer, type: int"})");
  std::string fixture = tmp.file("fix.json", fixture_json({{"", "@@@Answer@@@: 7"}}));
  CliResult result = run({"parse", "--schema", schema, "--user", "u", "--delimiter", "@@@",
                          "--fixture", fixture});
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("\"Answer\": 7") != std::string::npos);
}

TEST_CASE("agent-run prints the records then the reply") {
  TempDir tmp;
  std::string config = tmp.file("agent.json", R"({
    "name": "Mathematician",
    "description": "does arithmetic",
    "default_to_llm": false,
    "functions": ["add_numbers", "subtract_numbers"]
  })");
  std::string fixture = tmp.file("fix.json", fixture_json({
      {"", decision_response("o", "t", "add 2 and 3", "add_numbers")},
      {"", fields_response(Value{{"x", 2}, {"y", 3}})},
      {"", decision_response("o", "t", "done", "end_task")},
      {"", "###Response###: \"the sum is 5\""},
  }));
  CliResult result = run({"agent-run", "--config", config, "--task", "add 2 and 3",
                          "--fixture", fixture});
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("- add_numbers(x=2.0, y=3.0): {output_1: 5.0}") != std::string::npos);
  CHECK(result.out.find("Reply: the sum is 5") != std::string::npos);
}

TEST_CASE("agent-run --verbose prints observation and thoughts per step") {
  TempDir tmp;
  std::string config = tmp.file("agent.json", R"({
    "name": "Mathematician",
    "description": "does arithmetic",
    "default_to_llm": false,
    "functions": ["add_numbers"]
  })");
  std::string fixture = tmp.file("fix.json", fixture_json({
      {"", decision_response("looked at the task", "will add now", "add 1 and 1", "add_numbers")},
      {"", fields_response(Value{{"x", 1}, {"y", 1}})},
      {"", decision_response("o", "t", "done", "end_task")},
      {"", "###Response###: \"done\""},
  }));
  // verbose agent output goes to the real stdout; capture through a redirect
  std::istringstream in;
  std::ostringstream out, err;
  std::streambuf* old = std::cout.rdbuf(out.rdbuf());
  std::ostringstream cli_out;
  int code = run_cli({"agent-run", "--config", config, "--task", "add", "--fixture", fixture,
                      "--verbose"},
                     in, cli_out, err);
  std::cout.rdbuf(old);
  CHECK(code == 0);
  CHECK(out.str().find("Observation: looked at the task") != std::string::npos);
  CHECK(out.str().find("Thoughts: will add now") != std::string::npos);
}

TEST_CASE("agent-run with an empty task is a usage error") {
  TempDir tmp;
  std::string config = tmp.file("agent.json", R"({"name": "A", "description": "d"})");
  CliResult result = run({"agent-run", "--config", config, "--task", "", "--provider",
                          "scripted", "--fixture", "whatever.json"});
  CHECK(result.exit_code == 2);
}

TEST_CASE("agent config shared variables and global context feed the prompts") {
  TempDir tmp;
  std::string config = tmp.file("agent.json", R"({
    "name": "Inventory Manager",
    "description": "manages the inventory",
    "default_to_llm": false,
    "global_context": "Inventory: <Inventory>",
    "shared_variables": {"Inventory": ["apples"]},
    "functions": ["add_item_to_inventory", "remove_item_from_inventory"]
  })");
  std::string fixture = tmp.file("fix.json", fixture_json({
      {"Inventory: [apples]", decision_response("o", "t", "done", "end_task")},
      {"", "###Response###: \"inventory unchanged\""},
  }));
  CliResult result = run({"agent-run", "--config", config, "--task", "report", "--fixture",
                          fixture});
  CHECK(result.exit_code == 0);
}

TEST_CASE("maze-run with the oracle planner solves every episode") {
  CliResult result = run({"maze-run", "--width", "12", "--height", "12", "--episodes", "6",
                          "--change-at", "3", "--density", "0.15", "--seed", "3",
                          "--planner", "oracle", "--max-replans", "50"});
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("solve rate: 100% (6/6)") != std::string::npos);
}

TEST_CASE("maze-run is deterministic and writes the CSV report") {
  TempDir tmp;
  std::string report = (tmp.path / "report.csv").string();
  std::vector<std::string> args = {"maze-run", "--width", "10", "--height", "10",
                                   "--episodes", "4", "--change-at", "2", "--density", "0.1",
                                   "--seed", "9", "--report", report, "--max-replans", "50"};
  CliResult first = run(args);
  CliResult second = run(args);
  CHECK(first.exit_code == 0);
  CHECK(first.out == second.out);

  std::ifstream in(report);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 4);  // episode,solved,steps,min,replans
  }
  CHECK(rows == 4);
}

TEST_CASE("maze-run min_steps column equals the oracle distance when fully solved") {
  TempDir tmp;
  std::string report = (tmp.path / "report.csv").string();
  CliResult result = run({"maze-run", "--width", "8", "--height", "8", "--episodes", "3",
                          "--change-at", "1", "--density", "0.0", "--seed", "2", "--report",
                          report, "--max-replans", "50"});
  CHECK(result.exit_code == 0);
  // with no obstacles there is nothing hidden: steps always equal min_steps
  std::ifstream in(report);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string episode, solved, steps, min_steps, replans;
    std::getline(row, episode, ',');
    std::getline(row, solved, ',');
    std::getline(row, steps, ',');
    std::getline(row, min_steps, ',');
    std::getline(row, replans, ',');
    CHECK(solved == "1");
    CHECK(steps == min_steps);
  }
}

TEST_CASE("maze-run rejects unsolvable density requests with exit 1") {
  CliResult result = run({"maze-run", "--width", "12", "--height", "12", "--episodes", "1",
                          "--density", "0.98", "--seed", "1"});
  CHECK(result.exit_code == 1);
}

TEST_CASE("maze-run loads a maze file") {
  TempDir tmp;
  Value doc;
  doc["width"] = 6;
  doc["height"] = 6;
  doc["obstacles_phase1"] = Value::array({Value::array({2, 2})});
  doc["obstacles_phase2"] = Value::array();
  doc["start"] = Value::array({0, 0});
  doc["exit"] = Value::array({5, 5});
  std::string maze = tmp.file("maze.json", doc.dump());
  CliResult result = run({"maze-run", "--maze", maze, "--episodes", "2", "--change-at", "1",
                          "--max-replans", "50"});
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("solve rate: 100% (2/2)") != std::string::npos);
}

TEST_CASE("chat answers per line and dumps the transcript at end of input") {
  TempDir tmp;
  std::string config = tmp.file("agent.json", R"({
    "name": "Psychology Counsellor",
    "description": "a supportive counsellor",
    "persistent_memory": {"User Emotion": "the user's emotion, type: str"}
  })");
  std::string fixture = tmp.file("fix.json", fixture_json({
      {"", decision_response("o", "t", "none", "end_task")},
      {"", "###Response###: \"tell me more\""},
      {"", "###Summary###: \"user opened up\""},
      {"", fields_response(Value{{"User Emotion", "anxious"}})},
  }));
  CliResult result = run({"chat", "--config", config, "--fixture", fixture, "--transcript"},
                         "I feel anxious\n");
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("Agent: tell me more") != std::string::npos);
  CHECK(result.out.find("--- transcript ---") != std::string::npos);
  CHECK(result.out.find("User: I feel anxious") != std::string::npos);
}

TEST_CASE("chat with immediate end of input exits 0") {
  TempDir tmp;
  std::string config = tmp.file("agent.json", R"({"name": "A", "description": "d"})");
  std::string fixture = tmp.file("fix.json", "[]");
  CliResult result = run({"chat", "--config", config, "--fixture", fixture}, "");
  CHECK(result.exit_code == 0);
  CHECK(result.out.empty());
}

TEST_CASE("demo-rag finds the answer in the first batch with one interaction") {
  TempDir tmp;
  std::string corpus = tmp.file("corpus.txt",
                                "The capital of France is Paris.\n"
                                "Paris is famous for the Eiffel Tower.\n"
                                "France is known for its culture and cuisine.\n"
                                "Berlin is the capital of Germany.\n");
  std::string fixture = tmp.file("fix.json", fixture_json({
      {"The capital of France is Paris.",
       "###Answer###: \"The capital of France is Paris.\""},
  }));
  CliResult result = run({"demo-rag", "--corpus", corpus, "--query",
                          "What is the capital of France?", "--fixture", fixture});
  CHECK(result.exit_code == 0);
  CHECK(result.out == "Interactions: 1\nAnswer: The capital of France is Paris.\n");
}

TEST_CASE("demo-rag stops at exactly five interactions when never answered") {
  TempDir tmp;
  std::ostringstream corpus_text;
  for (int i = 0; i < 20; ++i) corpus_text << "context line number " << i << "\n";
  std::string corpus = tmp.file("corpus.txt", corpus_text.str());
  std::vector<std::pair<std::string, std::string>> records;
  for (int i = 0; i < 5; ++i) records.push_back({"", "###Answer###: \"no answer\""});
  std::string fixture = tmp.file("fix.json", fixture_json(records));
  CliResult result = run({"demo-rag", "--corpus", corpus, "--query", "unanswerable question",
                          "--batch-size", "4", "--fixture", fixture});
  CHECK(result.exit_code == 0);
  CHECK(result.out == "Interactions: 5\nAnswer: no answer\n");
}

TEST_CASE("demo-rag with an empty corpus answers immediately without provider calls") {
  TempDir tmp;
  std::string corpus = tmp.file("corpus.txt", "");
  std::string fixture = tmp.file("fix.json", "[]");
  CliResult result = run({"demo-rag", "--corpus", corpus, "--query", "anything", "--fixture",
                          fixture});
  CHECK(result.exit_code == 0);
  CHECK(result.out == "Interactions: 0\nAnswer: no answer\n");
}

TEST_CASE("scripted subcommands are deterministic across runs") {
  TempDir tmp;
  std::string schema = tmp.file("schema.json", R"({"Words": "the words, type: List[str]"})");
  std::string fixture =
      tmp.file("fix.json", fixture_json({{"", "###Words###: ['alpha', 'beta']"}}));
  std::vector<std::string> args = {"parse", "--schema", schema, "--user", "list the words",
                                   "--fixture", fixture};
  CliResult first = run(args);
  CliResult second = run(args);
  CHECK(first.exit_code == 0);
  CHECK(first.out == second.out);
}

TEST_SUITE_END();
