#include "loom/cli.hpp"

#include "loom/conversable.hpp"
#include "loom/maze.hpp"
#include "loom/parser.hpp"
#include "loom/planner.hpp"
#include "loom/provider.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace loom {
namespace {

// Signals exit code 2 (bad invocation or unreadable input files).
struct UsageError : public Error {
  using Error::Error;
};

Value load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open file: " + path);
  Value doc = Value::parse(in, nullptr, false);
  if (doc.is_discarded()) throw UsageError("file is not valid JSON: " + path);
  return doc;
}

std::shared_ptr<Provider> make_provider(const std::string& kind, const std::string& fixture_path) {
  if (kind == "scripted") {
    if (fixture_path.empty()) throw UsageError("--provider scripted requires --fixture FILE");
    std::ifstream probe(fixture_path);
    if (!probe) throw UsageError("cannot open fixture file: " + fixture_path);
    return std::make_shared<ScriptedProvider>(ScriptedProvider::load_fixture(fixture_path));
  }
  return std::make_shared<HttpProvider>(HttpProvider::config_from_env());
}

std::optional<Value> no_output() { return std::nullopt; }

ExternalFunctionDef arithmetic_fn(const std::string& name, const std::string& doc,
                                  std::function<double(double, double)> op) {
  SignatureMeta meta;
  meta.name = name;
  meta.params = {{"x", "float"}, {"y", "float"}};
  meta.return_type = "float";
  meta.callable = [op](const Value& args, SharedVariables&) -> std::optional<Value> {
    return Value(op(args.at("x").get<double>(), args.at("y").get<double>()));
  };
  return derive_external_metadata(meta, doc);
}

Value& inventory_of(SharedVariables& shared) {
  if (!shared.has("Inventory")) shared.set("Inventory", Value::array());
  return shared.get_mutable("Inventory");
}

}  // namespace

std::vector<EquippedFunction> demo_function_registry() {
  std::vector<EquippedFunction> registry;

  registry.emplace_back(arithmetic_fn(
      "add_numbers", "Adds <x: first number> and <y: second number> to evaluate x + y",
      [](double x, double y) { return x + y; }));
  registry.emplace_back(arithmetic_fn(
      "subtract_numbers", "Subtracts <y: second number> from <x: first number> to evaluate x - y",
      [](double x, double y) { return x - y; }));
  registry.emplace_back(arithmetic_fn(
      "multiply_numbers", "Multiplies <x: first number> with <y: second number> to evaluate x * y",
      [](double x, double y) { return x * y; }));
  registry.emplace_back(arithmetic_fn(
      "divide_numbers", "Divides <x: first number> by <y: second number> to evaluate x / y",
      [](double x, double y) {
        if (y == 0.0) throw Error("division by zero");
        return x / y;
      }));
  registry.emplace_back(arithmetic_fn(
      "power_of_numbers", "Raises <x: the base> to <y: the exponent> to evaluate x ** y",
      [](double x, double y) { return std::pow(x, y); }));
  registry.emplace_back(arithmetic_fn(
      "modulo_of_numbers", "Computes <x: first number> modulo <y: second number> to evaluate x % y",
      [](double x, double y) {
        if (y == 0.0) throw Error("modulo by zero");
        return std::fmod(x, y);
      }));
  registry.emplace_back(arithmetic_fn(
      "gcd_of_numbers",
      "Computes the greatest common divisor of <x: first number> and <y: second number>, i.e. "
      "gcd of x and y",
      [](double x, double y) {
        return static_cast<double>(std::gcd(static_cast<long long>(std::llround(x)),
                                            static_cast<long long>(std::llround(y))));
      }));

  {
    SignatureMeta meta;
    meta.name = "square_root";
    meta.params = {{"x", "float"}};
    meta.return_type = "float";
    meta.callable = [](const Value& args, SharedVariables&) -> std::optional<Value> {
      return Value(std::sqrt(args.at("x").get<double>()));
    };
    registry.emplace_back(
        derive_external_metadata(meta, "Computes the square root of <x: the number>, i.e. sqrt(x)"));
  }
  {
    SignatureMeta meta;
    meta.name = "absolute_value";
    meta.params = {{"x", "float"}};
    meta.return_type = "float";
    meta.callable = [](const Value& args, SharedVariables&) -> std::optional<Value> {
      return Value(std::fabs(args.at("x").get<double>()));
    };
    registry.emplace_back(
        derive_external_metadata(meta, "Computes the absolute value of <x: the number>, i.e. |x|"));
  }
  {
    SignatureMeta meta;
    meta.name = "binary_to_decimal";
    meta.params = {{"x", "int"}};
    meta.return_type = "int";
    meta.callable = [](const Value& args, SharedVariables&) -> std::optional<Value> {
      long long digits = args.at("x").get<long long>();
      long long result = 0;
      long long base = 1;
      bool negative = digits < 0;
      if (negative) digits = -digits;
      while (digits > 0) {
        long long digit = digits % 10;
        if (digit > 1) throw Error("not a binary number");
        result += digit * base;
        base *= 2;
        digits /= 10;
      }
      return Value(negative ? -result : result);
    };
    registry.emplace_back(derive_external_metadata(
        meta, "Convert input <x: a binary number in base 2> to base 10"));
  }
  {
    SignatureMeta meta;
    meta.name = "add_item_to_inventory";
    meta.params = {{"item", "str"}, {"shared_variables", ""}};
    meta.callable = [](const Value& args, SharedVariables& shared) -> std::optional<Value> {
      inventory_of(shared).push_back(args.at("item"));
      return no_output();
    };
    registry.emplace_back(derive_external_metadata(
        meta, "Adds <item: the item to add> to the inventory"));
  }
  {
    SignatureMeta meta;
    meta.name = "remove_item_from_inventory";
    meta.params = {{"item", "str"}, {"shared_variables", ""}};
    meta.callable = [](const Value& args, SharedVariables& shared) -> std::optional<Value> {
      Value& inventory = inventory_of(shared);
      Value kept = Value::array();
      for (const auto& existing : inventory) {
        if (existing != args.at("item")) kept.push_back(existing);
      }
      inventory = std::move(kept);
      return no_output();
    };
    registry.emplace_back(derive_external_metadata(
        meta, "Removes every copy of <item: the item to remove> from the inventory"));
  }
  {
    SignatureMeta meta;
    meta.name = "generate_quote";
    meta.params = {{"topic", "str"}, {"shared_variables", ""}};
    meta.callable = [](const Value& args, SharedVariables& shared) -> std::optional<Value> {
      if (!shared.has("Quote List")) shared.set("Quote List", Value::array());
      Value quotes = shared.get("Quote List");
      quotes.push_back("Quote about " + args.at("topic").get<std::string>());
      shared.set("Quote List", quotes);
      return no_output();  // the quote itself stays in the shared variable
    };
    registry.emplace_back(derive_external_metadata(
        meta, "Generates a quote about <topic: the topic of the quote> and stores it in the "
              "shared variable 'Quote List'"));
  }
  {
    InternalFunctionDef def;
    def.name = "sentence_with_objects_entities_emotion";
    def.description = "Output a sentence with <obj> and <entity> in the style of <emotion>";
    def.output_schema.add("output", "the generated sentence, type: str");
    registry.emplace_back(std::move(def));
  }
  return registry;
}

std::shared_ptr<Agent> agent_from_config(const Value& doc) {
  if (!doc.is_object() || !doc.contains("name") || !doc.contains("description")) {
    throw UsageError("agent config needs at least 'name' and 'description'");
  }
  AgentConfig config;
  config.name = doc.at("name").get<std::string>();
  config.description = doc.at("description").get<std::string>();
  if (doc.contains("max_subtasks")) config.max_subtasks = doc.at("max_subtasks").get<int>();
  if (doc.contains("summarise_subtasks_count")) {
    config.summarise_subtasks_count = doc.at("summarise_subtasks_count").get<int>();
  }
  if (doc.contains("default_to_llm")) config.default_to_llm = doc.at("default_to_llm").get<bool>();
  if (doc.contains("top_k_functions")) config.top_k_functions = doc.at("top_k_functions").get<int>();
  if (doc.contains("verbose")) config.verbose = doc.at("verbose").get<bool>();

  auto agent = std::make_shared<Agent>(config);

  if (doc.contains("global_context")) {
    agent->set_global_context({doc.at("global_context").get<std::string>(), nullptr});
  }
  if (doc.contains("shared_variables")) {
    for (auto it = doc.at("shared_variables").begin(); it != doc.at("shared_variables").end();
         ++it) {
      agent->shared_variables().set(it.key(), it.value());
    }
  }
  if (doc.contains("functions")) {
    std::vector<EquippedFunction> registry = demo_function_registry();
    std::vector<EquippedFunction> chosen;
    for (const auto& entry : doc.at("functions")) {
      const std::string wanted = entry.get<std::string>();
      auto found = std::find_if(registry.begin(), registry.end(),
                                [&](const EquippedFunction& fn) { return fn.name() == wanted; });
      if (found == registry.end()) {
        throw UsageError("config references unknown function '" + wanted + "'");
      }
      chosen.push_back(*found);
    }
    agent->assign_functions(std::move(chosen));
  }
  if (doc.contains("memory_bank")) {
    for (auto it = doc.at("memory_bank").begin(); it != doc.at("memory_bank").end(); ++it) {
      MemoryStore store;
      for (const auto& item : it.value()) store.items.push_back(item);
      agent->memory_bank().spaces[it.key()] = std::move(store);
    }
  }
  return agent;
}

namespace {

// ---------------- parse ----------------

struct ParseOptions {
  std::string schema_file;
  std::string system_prompt;
  std::string user_prompt;
  std::string delimiter = "###";
  int tries = 3;
  std::string provider = "scripted";
  std::string fixture;
  bool verbose = false;
};

int cmd_parse(const ParseOptions& opts, std::ostream& out) {
  OutputSchema schema = OutputSchema::from_document(load_json_file(opts.schema_file));
  ParseConfig config{opts.delimiter, opts.tries, opts.verbose};
  auto provider = make_provider(opts.provider, opts.fixture);
  try {
    ParseOutcome outcome =
        strict_json(opts.system_prompt, opts.user_prompt, schema, *provider, config);
    out << outcome.result.dump(2) << "\n";
    return 0;
  } catch (const ExhaustedRetriesError& e) {
    for (std::size_t i = 0; i < e.outcome.attempts.size(); ++i) {
      const ParseAttempt& attempt = e.outcome.attempts[i];
      out << "attempt " << (i + 1) << " response:\n" << attempt.raw_response << "\n";
      out << "attempt " << (i + 1) << " errors:\n";
      for (const auto& error : attempt.errors) out << "- " << error << "\n";
    }
    return 1;
  }
}

// ---------------- agent-run ----------------

struct AgentRunOptions {
  std::string config_file;
  std::string task;
  std::string provider = "scripted";
  std::string fixture;
  bool verbose = false;
};

int cmd_agent_run(const AgentRunOptions& opts, std::ostream& out) {
  if (opts.task.empty()) throw UsageError("--task must be non-empty");
  auto agent = agent_from_config(load_json_file(opts.config_file));
  if (opts.verbose) agent->set_verbose(true);
  agent->set_provider(make_provider(opts.provider, opts.fixture));

  std::vector<SubtaskRecord> records = agent->run(opts.task);
  for (const auto& record : records) {
    out << "- " << record.key << ": " << display(record.output) << "\n";
  }
  out << "Reply: " << agent->reply_user() << "\n";
  return 0;
}

// ---------------- maze-run ----------------

struct MazeRunOptions {
  int width = 40;
  int height = 40;
  int episodes = 20;
  int change_at = 10;
  std::string planner = "oracle";
  double density = 0.1;
  unsigned seed = 0;
  std::string report_file;
  std::string maze_file;
  int max_replans = 10;
  std::string provider = "http";
  std::string fixture;
};

int cmd_maze_run(const MazeRunOptions& opts, std::ostream& out) {
  MazeConfig base = opts.maze_file.empty()
                        ? generate_solvable_maze(opts.width, opts.height, opts.density, opts.seed)
                        : MazeConfig::from_document(load_json_file(opts.maze_file));

  std::shared_ptr<Provider> provider;
  if (opts.planner == "llm") provider = make_provider(opts.provider, opts.fixture);

  std::set<Cell> memory;  // obstacle knowledge carried across episodes
  int solved_count = 0;
  std::ostringstream report;
  out << "episode solved steps min_steps replans\n";

  for (int episode = 1; episode <= opts.episodes; ++episode) {
    int phase = episode > opts.change_at ? 2 : 1;
    MazeConfig config = base;
    randomize_start_exit(config, phase, opts.seed * 2654435761u + static_cast<unsigned>(episode));

    MazeEnv env(config, phase);
    env.known_obstacles() = memory;
    env.initial_observe();

    Agent agent({"Maze Navigator", "Navigates a grid world to reach the exit position",
                 /*max_subtasks=*/5, /*summarise_subtasks_count=*/5, /*default_to_llm=*/false},
                provider);
    agent.shared_variables().set("Current Position", to_string(env.pos()));
    agent.shared_variables().set("Exit Position", to_string(config.exit));
    agent.set_global_context(
        {"Current Position: <Current Position>\nExit Position: <Exit Position>", nullptr});
    agent.assign_functions(std::vector<ExternalFunctionDef>{make_move_function(env)});

    PlannerFn planner;
    StepExecution mode = StepExecution::RuleBased;
    if (opts.planner == "llm") {
      planner = [&](const PlannerQuery& query) { return make_plan(query, *provider); };
      mode = StepExecution::LlmDriven;
    } else {
      planner = [&](const PlannerQuery& query) {
        return oracle_plan(query, env.known_obstacles(), config.width, config.height);
      };
    }

    EpisodeResult result = run_episode(agent, planner, env, opts.max_replans, mode);
    memory = env.known_obstacles();

    int min_steps =
        shortest_path_length(config, env.active_obstacles(), config.start, config.exit).value_or(-1);
    solved_count += result.solved ? 1 : 0;
    out << episode << " " << (result.solved ? 1 : 0) << " " << result.steps_taken << " "
        << min_steps << " " << result.replans << "\n";
    report << episode << "," << (result.solved ? 1 : 0) << "," << result.steps_taken << ","
           << min_steps << "," << result.replans << "\n";
  }

  double rate = opts.episodes > 0 ? 100.0 * solved_count / opts.episodes : 0.0;
  out << "solve rate: " << rate << "% (" << solved_count << "/" << opts.episodes << ")\n";

  if (!opts.report_file.empty()) {
    std::ofstream file(opts.report_file);
    if (!file) throw UsageError("cannot write report file: " + opts.report_file);
    file << report.str();
  }
  return 0;
}

// ---------------- chat ----------------

struct ChatOptions {
  std::string config_file;
  std::string provider = "scripted";
  std::string fixture;
  bool transcript = false;
};

int cmd_chat(const ChatOptions& opts, std::istream& in, std::ostream& out) {
  Value doc = load_json_file(opts.config_file);
  auto agent = agent_from_config(doc);
  agent->set_provider(make_provider(opts.provider, opts.fixture));

  OutputSchema memory_schema;
  if (doc.contains("persistent_memory")) {
    memory_schema = OutputSchema::from_document(doc.at("persistent_memory"));
  }
  ConversableAgent conversable(agent, memory_schema);

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out << "Agent: " << conversable.chat(line) << "\n";
  }
  if (opts.transcript) {
    out << "--- transcript ---\n" << conversable.render_conversation();
  }
  return 0;
}

// ---------------- demo-rag ----------------

struct DemoRagOptions {
  std::string corpus_file;
  std::string query;
  int batch_size = 10;
  std::string provider = "scripted";
  std::string fixture;
};

int cmd_demo_rag(const DemoRagOptions& opts, std::ostream& out) {
  std::ifstream corpus(opts.corpus_file);
  if (!corpus) throw UsageError("cannot open corpus file: " + opts.corpus_file);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(corpus, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) {
    out << "Interactions: 0\nAnswer: no answer\n";
    return 0;
  }

  // Rank the whole corpus once; batch b serves ranked lines [b*K, (b+1)*K).
  MemoryStore store;
  store.top_k = static_cast<int>(lines.size());
  for (const auto& text : lines) store.items.push_back(Value(text));
  std::vector<Value> ranked = retrieve_by_ranker(store, opts.query);

  ExternalFunctionDef context_fetch;
  context_fetch.name = "context_fetch";
  context_fetch.description =
      "Fetches the next most relevant context lines for <query: the question> at <batch_number: "
      "0-based batch index>";
  context_fetch.params.push_back({"query", TypeExpr::simple(TypeExpr::Kind::Str), "the question"});
  context_fetch.params.push_back(
      {"batch_number", TypeExpr::simple(TypeExpr::Kind::Int), "0-based batch index"});
  context_fetch.output_fields.push_back(
      {"Context", TypeExpr::list_of(TypeExpr::simple(TypeExpr::Kind::Str)), ""});
  const int batch_size = opts.batch_size;
  context_fetch.callable = [&ranked, batch_size](const Value& args,
                                                 SharedVariables&) -> std::optional<Value> {
    int batch = args.at("batch_number").get<int>();
    Value batch_lines = Value::array();
    for (int i = batch * batch_size;
         i < (batch + 1) * batch_size && i < static_cast<int>(ranked.size()); ++i) {
      batch_lines.push_back(ranked[static_cast<std::size_t>(i)]);
    }
    return Value{{"Context", batch_lines}};
  };

  InternalFunctionDef answer_fn;
  answer_fn.name = "answer_question";
  answer_fn.description =
      "Answer the <query> based only on the <context>; reply exactly 'no answer' if the context "
      "is insufficient";
  answer_fn.output_schema.add(
      "Answer", "the answer to the query, or 'no answer' if the context does not contain it, "
                "type: str");

  auto provider = make_provider(opts.provider, opts.fixture);
  SharedVariables shared;
  Value context = Value::array();

  for (int interaction = 1; interaction <= 5; ++interaction) {
    Value fetch_args{{"query", opts.query}, {"batch_number", interaction - 1}};
    Value fetched = invoke_external(context_fetch, fetch_args, shared);
    for (const auto& item : fetched["Context"]) context.push_back(item);

    Value answer_args{{"query", opts.query}, {"context", context}};
    Value answered = invoke_internal(answer_fn, answer_args, *provider);
    std::string answer = answered["Answer"].get<std::string>();

    std::string folded;
    for (char c : answer) folded += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::size_t begin = folded.find_first_not_of(" \t\r\n");
    std::size_t end = folded.find_last_not_of(" \t\r\n");
    bool no_answer = begin == std::string::npos ||
                     folded.substr(begin, end - begin + 1) == "no answer";
    if (!no_answer) {
      out << "Interactions: " << interaction << "\nAnswer: " << answer << "\n";
      return 0;
    }
  }
  out << "Interactions: 5\nAnswer: no answer\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"LLM agent framework with delimiter-keyed structured output"};
  app.name("loom");
  app.require_subcommand(1);

  ParseOptions parse_opts;
  auto* parse_cmd = app.add_subcommand("parse", "Run one structured-output call");
  parse_cmd->add_option("--schema", parse_opts.schema_file, "Schema file (JSON field: description)")
      ->required();
  parse_cmd->add_option("--system", parse_opts.system_prompt, "System prompt");
  parse_cmd->add_option("--user", parse_opts.user_prompt, "User prompt");
  parse_cmd->add_option("--delimiter", parse_opts.delimiter, "Key delimiter");
  parse_cmd->add_option("--tries", parse_opts.tries, "Retry budget");
  parse_cmd->add_option("--provider", parse_opts.provider, "Provider kind")
      ->check(CLI::IsMember({"scripted", "http"}));
  parse_cmd->add_option("--fixture", parse_opts.fixture, "Scripted provider fixture file");
  parse_cmd->add_flag("--verbose", parse_opts.verbose, "Print prompts and responses");

  AgentRunOptions agent_opts;
  auto* agent_cmd = app.add_subcommand("agent-run", "Run an agent on a task");
  agent_cmd->add_option("--config", agent_opts.config_file, "Agent config file")->required();
  agent_cmd->add_option("--task", agent_opts.task, "Task to run")->required();
  agent_cmd->add_option("--provider", agent_opts.provider, "Provider kind")
      ->check(CLI::IsMember({"scripted", "http"}));
  agent_cmd->add_option("--fixture", agent_opts.fixture, "Scripted provider fixture file");
  agent_cmd->add_flag("--verbose", agent_opts.verbose, "Print decisions per step");

  MazeRunOptions maze_opts;
  auto* maze_cmd = app.add_subcommand("maze-run", "Run the maze benchmark");
  maze_cmd->add_option("--width", maze_opts.width, "Maze width");
  maze_cmd->add_option("--height", maze_opts.height, "Maze height");
  maze_cmd->add_option("--episodes", maze_opts.episodes, "Number of episodes");
  maze_cmd->add_option("--change-at", maze_opts.change_at, "Obstacle changeover episode");
  maze_cmd->add_option("--planner", maze_opts.planner, "Planner kind")
      ->check(CLI::IsMember({"oracle", "llm"}));
  maze_cmd->add_option("--density", maze_opts.density, "Obstacle density");
  maze_cmd->add_option("--seed", maze_opts.seed, "Random seed");
  maze_cmd->add_option("--report", maze_opts.report_file, "CSV report file");
  maze_cmd->add_option("--maze", maze_opts.maze_file, "Maze file instead of a generated one");
  maze_cmd->add_option("--max-replans", maze_opts.max_replans, "Replanning budget per episode");
  maze_cmd->add_option("--provider", maze_opts.provider, "Provider kind for the llm planner")
      ->check(CLI::IsMember({"scripted", "http"}));
  maze_cmd->add_option("--fixture", maze_opts.fixture, "Scripted provider fixture file");

  ChatOptions chat_opts;
  auto* chat_cmd = app.add_subcommand("chat", "Chat REPL over an agent");
  chat_cmd->add_option("--config", chat_opts.config_file, "Agent config file")->required();
  chat_cmd->add_option("--provider", chat_opts.provider, "Provider kind")
      ->check(CLI::IsMember({"scripted", "http"}));
  chat_cmd->add_option("--fixture", chat_opts.fixture, "Scripted provider fixture file");
  chat_cmd->add_flag("--transcript", chat_opts.transcript, "Dump the conversation at end of input");

  DemoRagOptions rag_opts;
  auto* rag_cmd = app.add_subcommand("demo-rag", "Interactive-retrieval question answering demo");
  rag_cmd->add_option("--corpus", rag_opts.corpus_file, "Corpus file, one context line per row")
      ->required();
  rag_cmd->add_option("--query", rag_opts.query, "The question")->required();
  rag_cmd->add_option("--batch-size", rag_opts.batch_size, "Context lines fetched per batch");
  rag_cmd->add_option("--provider", rag_opts.provider, "Provider kind")
      ->check(CLI::IsMember({"scripted", "http"}));
  rag_cmd->add_option("--fixture", rag_opts.fixture, "Scripted provider fixture file");

  std::vector<const char*> argv;
  argv.push_back("loom");
  for (const auto& arg : args) argv.push_back(arg.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (*parse_cmd) return cmd_parse(parse_opts, out);
    if (*agent_cmd) return cmd_agent_run(agent_opts, out);
    if (*maze_cmd) return cmd_maze_run(maze_opts, out);
    if (*chat_cmd) return cmd_chat(chat_opts, in, out);
    if (*rag_cmd) return cmd_demo_rag(rag_opts, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace loom
