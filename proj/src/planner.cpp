#include "loom/planner.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <sstream>

namespace loom {
namespace {

// The worked example used as few-shot content for the plan call: a vertical
// wall with a gap below it, passed by moving down, right, then up.
const char* kPlannerFewShot =
    "Example:\n"
    "Start Position: (2, 0)\n"
    "Exit Position: (2, 4)\n"
    "Obstacle Positions: [\"Obstacle from (0, 1) to (5, 1)\"]\n"
    "Obstacle Position Layout: There is a wall of obstacles from (0, 1) to (5, 1)\n"
    "Thoughts: I need to get from (2, 0) to (0, 4)\n"
    "There are obstacles in the way. Since (2, 1) to (5, 1) has obstacles, I am only able to go "
    "past the wall via (6, 1)\n"
    "Plan: [\"Move down 4 times from (2, 0) to (6, 0)\", \"Move right 4 times from (6, 0) to "
    "(6, 4)\", \"Move up 4 times from (6, 4) to (2, 2)\"]";

std::string run_text(const Cell& from, const Cell& to) {
  return "Obstacle from " + to_string(from) + " to " + to_string(to);
}

std::string step_text(MazeAction action, int times, const Cell& from, const Cell& to) {
  std::string direction;
  switch (action) {
    case MazeAction::Up: direction = "up"; break;
    case MazeAction::Down: direction = "down"; break;
    case MazeAction::Left: direction = "left"; break;
    case MazeAction::Right: direction = "right"; break;
  }
  return "Move " + direction + " " + std::to_string(times) + (times == 1 ? " time" : " times") +
         " from " + to_string(from) + " to " + to_string(to);
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string word;
  while (in >> word) words.push_back(word);
  return words;
}

}  // namespace

std::vector<std::string> group_obstacles(const std::set<Cell>& cells) {
  std::vector<std::string> runs;
  std::set<Cell> used;
  for (const Cell& cell : cells) {  // row-major: set orders by (row, col)
    if (used.count(cell)) continue;
    // Horizontal run first, then vertical, else a singleton.
    Cell end = cell;
    while (cells.count({end.row, end.col + 1}) && !used.count({end.row, end.col + 1})) {
      end = {end.row, end.col + 1};
    }
    if (end.col == cell.col) {
      while (cells.count({end.row + 1, end.col}) && !used.count({end.row + 1, end.col})) {
        end = {end.row + 1, end.col};
      }
    }
    for (int r = cell.row; r <= end.row; ++r) {
      for (int c = cell.col; c <= end.col; ++c) used.insert({r, c});
    }
    runs.push_back(run_text(cell, end));
  }
  return runs;
}

Plan make_plan(const PlannerQuery& query, Provider& provider, const ParseConfig& config) {
  OutputSchema schema;
  schema.add("Obstacle Position Layout",
             "describe the obstacle positions as walls of obstacles, type: str");
  schema.add("Thoughts",
             "think step by step about how to get from the start position to the exit position "
             "while avoiding every obstacle, type: str");
  schema.add("Plan",
             "list of movement steps of the form 'Move direction n times from (row1, col1) to "
             "(row2, col2)', type: List[str]");

  std::ostringstream obstacles;
  obstacles << "[";
  for (std::size_t i = 0; i < query.obstacle_groups.size(); ++i) {
    if (i) obstacles << ", ";
    obstacles << "\"" << query.obstacle_groups[i] << "\"";
  }
  obstacles << "]";

  std::ostringstream user;
  user << "Start Position: " << to_string(query.start) << "\n"
       << "Exit Position: " << to_string(query.exit) << "\n"
       << "Obstacle Positions: " << obstacles.str() << "\n"
       << "Subtasks Completed: " << (query.history.empty() ? "None" : query.history) << "\n"
       << "Derive the plan to move from the start position to the exit position without passing "
          "through any obstacle position.";

  std::string system =
      std::string("You are a planner for an agent in a grid world. Rows increase downwards and "
                  "columns increase rightwards; moving down adds 1 to the row, moving right adds "
                  "1 to the column. Cells are written (row, col).\n") +
      kPlannerFewShot;

  ParseOutcome outcome = strict_json(system, user.str(), schema, provider, config);
  Plan plan;
  for (const auto& step : outcome.result["Plan"]) plan.steps.push_back(step.get<std::string>());
  if (plan.steps.empty()) throw PlanningFailedError("planner returned an empty plan");
  return plan;
}

std::optional<std::vector<Cell>> shortest_path(int width, int height,
                                               const std::set<Cell>& obstacles, const Cell& start,
                                               const Cell& exit) {
  auto in_bounds = [&](const Cell& cell) {
    return cell.row >= 0 && cell.row < height && cell.col >= 0 && cell.col < width;
  };
  if (!in_bounds(start) || !in_bounds(exit)) return std::nullopt;
  if (obstacles.count(start) || obstacles.count(exit)) return std::nullopt;
  if (start == exit) return std::vector<Cell>{start};

  std::map<Cell, Cell> parent;
  std::deque<Cell> queue{start};
  parent[start] = start;
  while (!queue.empty()) {
    Cell current = queue.front();
    queue.pop_front();
    for (const Cell& next : {Cell{current.row - 1, current.col}, Cell{current.row + 1, current.col},
                             Cell{current.row, current.col - 1},
                             Cell{current.row, current.col + 1}}) {
      if (!in_bounds(next) || obstacles.count(next) || parent.count(next)) continue;
      parent[next] = current;
      if (next == exit) {
        std::vector<Cell> path{exit};
        Cell walk = exit;
        while (walk != start) {
          walk = parent[walk];
          path.push_back(walk);
        }
        std::reverse(path.begin(), path.end());
        return path;
      }
      queue.push_back(next);
    }
  }
  return std::nullopt;
}

Plan path_to_plan(const std::vector<Cell>& path) {
  Plan plan;
  if (path.size() < 2) return plan;

  auto direction = [](const Cell& from, const Cell& to) {
    if (to.row == from.row + 1) return MazeAction::Down;
    if (to.row == from.row - 1) return MazeAction::Up;
    if (to.col == from.col + 1) return MazeAction::Right;
    return MazeAction::Left;
  };

  std::size_t run_start = 0;
  MazeAction current = direction(path[0], path[1]);
  for (std::size_t i = 1; i + 1 <= path.size(); ++i) {
    bool run_ends = i + 1 == path.size() || direction(path[i], path[i + 1]) != current;
    if (!run_ends) continue;
    plan.steps.push_back(step_text(current, static_cast<int>(i - run_start), path[run_start],
                                   path[i]));
    if (i + 1 < path.size()) {
      run_start = i;
      current = direction(path[i], path[i + 1]);
    }
  }
  return plan;
}

Plan oracle_plan(const PlannerQuery& query, const std::set<Cell>& known_obstacles, int width,
                 int height) {
  if (query.start == query.exit) return Plan{};
  auto path = shortest_path(width, height, known_obstacles, query.start, query.exit);
  if (!path) {
    throw NoPathKnownError("no path from " + to_string(query.start) + " to " +
                           to_string(query.exit) + " over the known obstacles");
  }
  return path_to_plan(*path);
}

std::optional<PlanStep> parse_plan_step(const std::string& text) {
  std::vector<std::string> words = split_words(text);
  if (words.size() < 3) return std::nullopt;
  std::string head;
  for (char c : words[0]) head += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (head != "move") return std::nullopt;
  auto action = parse_maze_action(words[1]);
  if (!action) return std::nullopt;
  try {
    int times = std::stoi(words[2]);
    if (times < 1) return std::nullopt;
    return PlanStep{*action, times};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

namespace {

void refresh_position_context(Agent& agent, const MazeEnv& env) {
  agent.shared_variables().set("Current Position", to_string(env.pos()));
  agent.shared_variables().set("Exit Position", to_string(env.config().exit));
}

// Runs one plan step through the agent and reports whether it failed.
StepOutcome run_step(Agent& agent, const std::string& step, MazeEnv& env, StepExecution mode) {
  StepOutcome outcome{step, false, ""};

  agent.reset();  // past history must not bleed into the current step
  refresh_position_context(agent, env);

  if (mode == StepExecution::RuleBased) {
    auto parsed = parse_plan_step(step);
    if (!parsed) {
      outcome.failed = true;
      outcome.detail = "unparseable step";
      return outcome;
    }
    SubtaskDecision decision;
    decision.current_subtask = step;
    decision.function_name = "move";
    Value args;
    args["action"] = to_string(parsed->action);
    args["times"] = parsed->times;
    auto record = agent.execute_subtask(decision, args);
    if (record && record->output.contains("Collided") &&
        record->output["Collided"].get<bool>()) {
      outcome.failed = true;
      outcome.detail = "collided at " + record->output["Final Position"].get<std::string>();
    }
    if (env.episode_over()) {
      outcome.failed = true;
      if (outcome.detail.empty()) outcome.detail = "step budget exhausted";
    }
    return outcome;
  }

  agent.run(step);
  for (const auto& record : agent.subtasks_completed()) {
    if (record.output.contains("Collided") && record.output["Collided"].is_boolean() &&
        record.output["Collided"].get<bool>()) {
      outcome.failed = true;
      outcome.detail = "collided";
      break;
    }
  }
  if (env.episode_over()) {
    outcome.failed = true;
    if (outcome.detail.empty()) outcome.detail = "step budget exhausted";
  }
  return outcome;
}

std::string recent_history(const Agent& agent, std::size_t limit = 5) {
  const auto& log = agent.subtasks_completed();
  std::ostringstream out;
  std::size_t begin = log.size() > limit ? log.size() - limit : 0;
  for (std::size_t i = begin; i < log.size(); ++i) {
    if (i > begin) out << "; ";
    out << log[i].key;
  }
  return out.str();
}

}  // namespace

PlanExecution execute_plan(Agent& agent, const Plan& plan, MazeEnv& env, StepExecution mode) {
  PlanExecution execution;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    StepOutcome outcome = run_step(agent, plan.steps[i], env, mode);
    execution.steps.push_back(outcome);
    if (outcome.failed) {
      execution.failure_index = i;
      break;
    }
  }
  return execution;
}

EpisodeResult run_episode(Agent& agent, const PlannerFn& planner, MazeEnv& env, int max_replans,
                          StepExecution mode) {
  EpisodeResult result;
  while (true) {
    if (env.at_exit()) {
      result.solved = true;
      break;
    }
    if (env.episode_over()) break;

    PlannerQuery query{env.pos(), env.config().exit, group_obstacles(env.known_obstacles()),
                       recent_history(agent)};
    Plan plan;
    try {
      plan = planner(query);
    } catch (const NoPathKnownError&) {
      // Stale memory can wall off the exit after a changeover; fall back to
      // what is currently visible and count the attempt as a replan.
      env.known_obstacles() = env.observe();
      ++result.replans;
      if (result.replans > max_replans) break;
      continue;
    }

    execute_plan(agent, plan, env, mode);
    if (env.at_exit()) {
      result.solved = true;
      break;
    }
    ++result.replans;
    if (result.replans > max_replans || env.episode_over()) break;
  }
  result.steps_taken = env.steps();
  result.reward = result.solved ? 1 : 0;
  return result;
}

}  // namespace loom
