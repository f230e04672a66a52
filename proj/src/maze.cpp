#include "loom/maze.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <random>
#include <sstream>

namespace loom {
namespace {

Cell offset(const Cell& cell, MazeAction action) {
  switch (action) {
    case MazeAction::Up: return {cell.row - 1, cell.col};
    case MazeAction::Down: return {cell.row + 1, cell.col};
    case MazeAction::Left: return {cell.row, cell.col - 1};
    case MazeAction::Right: return {cell.row, cell.col + 1};
  }
  return cell;
}

std::set<Cell> parse_cell_list(const Value& doc) {
  std::set<Cell> cells;
  for (const auto& item : doc) {
    cells.insert({item.at(0).get<int>(), item.at(1).get<int>()});
  }
  return cells;
}

Value dump_cell_list(const std::set<Cell>& cells) {
  Value out = Value::array();
  for (const auto& cell : cells) out.push_back(Value::array({cell.row, cell.col}));
  return out;
}

}  // namespace

std::string to_string(const Cell& cell) {
  return "(" + std::to_string(cell.row) + ", " + std::to_string(cell.col) + ")";
}

std::optional<MazeAction> parse_maze_action(const std::string& text) {
  std::string lowered;
  for (char c : text) lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lowered == "up") return MazeAction::Up;
  if (lowered == "down") return MazeAction::Down;
  if (lowered == "left") return MazeAction::Left;
  if (lowered == "right") return MazeAction::Right;
  return std::nullopt;
}

std::string to_string(MazeAction action) {
  switch (action) {
    case MazeAction::Up: return "Up";
    case MazeAction::Down: return "Down";
    case MazeAction::Left: return "Left";
    case MazeAction::Right: return "Right";
  }
  return "Up";
}

void MazeConfig::validate() const {
  if (width < 1 || height < 1) throw Error("maze dimensions must be positive");
  if (start == exit) throw Error("maze start and exit must differ");
  auto check_cell = [&](const Cell& cell, const std::string& what) {
    if (cell.row < 0 || cell.row >= height || cell.col < 0 || cell.col >= width) {
      throw Error("maze " + what + " " + to_string(cell) + " is out of bounds");
    }
  };
  check_cell(start, "start");
  check_cell(exit, "exit");
  if (obstacles_phase1.count(start) || obstacles_phase1.count(exit)) {
    throw Error("start/exit must not be phase-1 obstacles");
  }
  if (obstacles_phase2.count(start) || obstacles_phase2.count(exit)) {
    throw Error("start/exit must not be phase-2 obstacles");
  }
}

MazeConfig MazeConfig::from_document(const Value& doc) {
  MazeConfig config;
  config.width = doc.at("width").get<int>();
  config.height = doc.at("height").get<int>();
  config.obstacles_phase1 = parse_cell_list(doc.at("obstacles_phase1"));
  config.obstacles_phase2 = parse_cell_list(doc.at("obstacles_phase2"));
  config.start = {doc.at("start").at(0).get<int>(), doc.at("start").at(1).get<int>()};
  config.exit = {doc.at("exit").at(0).get<int>(), doc.at("exit").at(1).get<int>()};
  if (doc.contains("changeover_episode")) {
    config.changeover_episode = doc.at("changeover_episode").get<int>();
  }
  if (doc.contains("seed")) config.seed = doc.at("seed").get<unsigned>();
  config.validate();
  return config;
}

Value MazeConfig::to_document() const {
  Value doc;
  doc["width"] = width;
  doc["height"] = height;
  doc["obstacles_phase1"] = dump_cell_list(obstacles_phase1);
  doc["obstacles_phase2"] = dump_cell_list(obstacles_phase2);
  doc["start"] = Value::array({start.row, start.col});
  doc["exit"] = Value::array({exit.row, exit.col});
  doc["changeover_episode"] = changeover_episode;
  doc["seed"] = seed;
  return doc;
}

MazeEnv::MazeEnv(MazeConfig config, int phase)
    : config_(std::move(config)), phase_(phase), pos_(config_.start) {
  if (phase_ != 1 && phase_ != 2) throw Error("maze phase must be 1 or 2");
  config_.validate();
}

const std::set<Cell>& MazeEnv::active_obstacles() const {
  return phase_ == 1 ? config_.obstacles_phase1 : config_.obstacles_phase2;
}

bool MazeEnv::in_bounds(const Cell& cell) const {
  return cell.row >= 0 && cell.row < config_.height && cell.col >= 0 && cell.col < config_.width;
}

StepResult MazeEnv::step(MazeAction action) {
  if (episode_over()) throw EpisodeOverError();
  Cell target = offset(pos_, action);
  bool collided = !in_bounds(target) || active_obstacles().count(target) > 0;
  if (!collided) pos_ = target;
  ++steps_;
  return {pos_, collided};
}

std::set<Cell> MazeEnv::vision_window() const {
  std::set<Cell> window;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      Cell cell{pos_.row + dr, pos_.col + dc};
      if (in_bounds(cell)) window.insert(cell);
    }
  }
  return window;
}

std::set<Cell> MazeEnv::observe() const {
  std::set<Cell> seen;
  for (const Cell& cell : vision_window()) {
    if (active_obstacles().count(cell)) seen.insert(cell);
  }
  return seen;
}

void MazeEnv::initial_observe() {
  known_obstacles_ = update_obstacle_memory(known_obstacles_, vision_window(), observe());
}

std::string MazeEnv::render_grid() const {
  std::ostringstream out;
  for (int r = 0; r < config_.height; ++r) {
    for (int c = 0; c < config_.width; ++c) {
      Cell cell{r, c};
      if (cell == pos_) {
        out << 'A';
      } else if (cell == config_.exit) {
        out << 'E';
      } else if (active_obstacles().count(cell)) {
        out << '#';
      } else {
        out << '.';
      }
    }
    out << '\n';
  }
  return out.str();
}

std::set<Cell> update_obstacle_memory(const std::set<Cell>& memory,
                                      const std::set<Cell>& window_cells,
                                      const std::set<Cell>& observed) {
  std::set<Cell> updated = memory;
  for (const Cell& cell : window_cells) updated.erase(cell);
  for (const Cell& cell : observed) updated.insert(cell);
  return updated;
}

MoveOutcome move(MazeEnv& env, MazeAction action, int times) {
  if (times < 1) throw Error("move requires times >= 1");
  MoveOutcome outcome;
  outcome.final_pos = env.pos();
  for (int i = 0; i < times; ++i) {
    if (env.episode_over()) {
      outcome.episode_over = true;
      break;
    }
    StepResult result = env.step(action);
    env.known_obstacles() =
        update_obstacle_memory(env.known_obstacles(), env.vision_window(), env.observe());
    outcome.final_pos = result.pos;
    if (result.collided) {
      outcome.collided = true;
      break;
    }
    ++outcome.moves_executed;
  }
  return outcome;
}

ExternalFunctionDef make_move_function(MazeEnv& env) {
  ExternalFunctionDef def;
  def.name = "move";
  def.description =
      "Move the agent in the maze with <action: the direction to move> repeated <times: how many "
      "times to move in that direction>";
  def.params.push_back({"action",
                        TypeExpr::enum_of({"Up", "Down", "Left", "Right"}),
                        "the direction to move"});
  def.params.push_back({"times", TypeExpr::simple(TypeExpr::Kind::Int),
                        "how many times to move in that direction"});
  def.output_fields.push_back({"Final Position", TypeExpr::simple(TypeExpr::Kind::Str), ""});
  def.output_fields.push_back({"Moves Executed", TypeExpr::simple(TypeExpr::Kind::Int), ""});
  def.output_fields.push_back({"Collided", TypeExpr::simple(TypeExpr::Kind::Bool), ""});
  def.wants_shared_variables = true;
  def.callable = [&env](const Value& args, SharedVariables& shared) -> std::optional<Value> {
    auto action = parse_maze_action(args.at("action").get<std::string>());
    if (!action) throw Error("unknown action '" + args.at("action").get<std::string>() + "'");
    int times = args.at("times").get<int>();
    MoveOutcome outcome = move(env, *action, times);
    shared.set("Current Position", to_string(outcome.final_pos));
    Value out;
    out["Final Position"] = to_string(outcome.final_pos);
    out["Moves Executed"] = outcome.moves_executed;
    out["Collided"] = outcome.collided;
    return out;
  };
  return def;
}

std::optional<int> shortest_path_length(const MazeConfig& config, const std::set<Cell>& obstacles,
                                        const Cell& start, const Cell& exit) {
  if (start == exit) return 0;
  auto in_bounds = [&](const Cell& cell) {
    return cell.row >= 0 && cell.row < config.height && cell.col >= 0 && cell.col < config.width;
  };
  if (!in_bounds(start) || !in_bounds(exit) || obstacles.count(start) || obstacles.count(exit)) {
    return std::nullopt;
  }

  std::vector<int> dist(static_cast<std::size_t>(config.width) * config.height, -1);
  auto index = [&](const Cell& cell) {
    return static_cast<std::size_t>(cell.row) * config.width + cell.col;
  };
  std::deque<Cell> queue{start};
  dist[index(start)] = 0;
  while (!queue.empty()) {
    Cell current = queue.front();
    queue.pop_front();
    for (MazeAction action :
         {MazeAction::Up, MazeAction::Down, MazeAction::Left, MazeAction::Right}) {
      Cell next = offset(current, action);
      if (!in_bounds(next) || obstacles.count(next) || dist[index(next)] != -1) continue;
      dist[index(next)] = dist[index(current)] + 1;
      if (next == exit) return dist[index(next)];
      queue.push_back(next);
    }
  }
  return std::nullopt;
}

MazeConfig generate_solvable_maze(int width, int height, double density, unsigned seed) {
  if (density < 0.0 || density >= 1.0) throw Error("obstacle density must be in [0, 1)");
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> row_dist(0, height - 1);
  std::uniform_int_distribution<int> col_dist(0, width - 1);

  // The start/exit pair is fixed by the seed; retries re-draw obstacles only.
  Cell start{row_dist(rng), col_dist(rng)};
  Cell exit = start;
  while (exit == start) exit = {row_dist(rng), col_dist(rng)};

  for (int attempt = 0; attempt < 200; ++attempt) {
    MazeConfig config;
    config.width = width;
    config.height = height;
    config.seed = seed;
    config.start = start;
    config.exit = exit;

    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        Cell cell{r, c};
        if (cell == config.start || cell == config.exit) continue;
        if (coin(rng) < density) config.obstacles_phase1.insert(cell);
      }
    }
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        Cell cell{r, c};
        if (cell == config.start || cell == config.exit) continue;
        if (coin(rng) < density) config.obstacles_phase2.insert(cell);
      }
    }

    if (shortest_path_length(config, config.obstacles_phase1, config.start, config.exit) &&
        shortest_path_length(config, config.obstacles_phase2, config.start, config.exit)) {
      return config;
    }
  }
  throw Error("could not generate a solvable maze at density " + std::to_string(density));
}

void randomize_start_exit(MazeConfig& config, int phase, unsigned episode_seed) {
  const std::set<Cell>& obstacles =
      phase == 1 ? config.obstacles_phase1 : config.obstacles_phase2;
  std::mt19937 rng(episode_seed);
  std::uniform_int_distribution<int> row_dist(0, config.height - 1);
  std::uniform_int_distribution<int> col_dist(0, config.width - 1);

  for (int attempt = 0; attempt < 10000; ++attempt) {
    Cell start{row_dist(rng), col_dist(rng)};
    Cell exit{row_dist(rng), col_dist(rng)};
    if (start == exit || obstacles.count(start) || obstacles.count(exit)) continue;
    if (config.obstacles_phase1.count(start) || config.obstacles_phase1.count(exit)) continue;
    if (config.obstacles_phase2.count(start) || config.obstacles_phase2.count(exit)) continue;
    if (!shortest_path_length(config, obstacles, start, exit)) continue;
    config.start = start;
    config.exit = exit;
    return;
  }
  throw Error("could not sample a solvable start/exit pair");
}

}  // namespace loom
