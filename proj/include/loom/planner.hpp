#pragma once

#include "loom/agent.hpp"
#include "loom/maze.hpp"
#include "loom/parser.hpp"
#include "loom/provider.hpp"

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace loom {

// Ordered step list produced by a planner. Steps read
// "Move <direction> <n> times from (r1, c1) to (r2, c2)".
struct Plan {
  std::vector<std::string> steps;
};

struct PlannerQuery {
  Cell start;
  Cell exit;
  std::vector<std::string> obstacle_groups;
  std::string history;  // recent subtask log excerpt
};

struct EpisodeResult {
  bool solved = false;
  int steps_taken = 0;
  int replans = 0;
  int reward = 0;
};

// Partitions cells into maximal straight-line runs (horizontal preferred,
// then vertical, greedy in row-major order), each rendered
// "Obstacle from (r1, c1) to (r2, c2)".
std::vector<std::string> group_obstacles(const std::set<Cell>& cells);

// One structured chain-of-thought call producing the step plan. Includes a
// worked wall-with-a-gap example as few-shot content; an empty plan is a
// planning failure.
Plan make_plan(const PlannerQuery& query, Provider& provider,
               const ParseConfig& config = ParseConfig{});

// Rule-based planner: breadth-first shortest path over the known obstacles,
// compressed into the same straight-run step texts the LLM planner emits.
// start == exit yields an empty plan; throws NoPathKnownError when the known
// obstacles wall off the exit.
Plan oracle_plan(const PlannerQuery& query, const std::set<Cell>& known_obstacles, int width,
                 int height);

// Full shortest path (sequence of cells from start to exit inclusive).
std::optional<std::vector<Cell>> shortest_path(int width, int height,
                                               const std::set<Cell>& obstacles, const Cell& start,
                                               const Cell& exit);

// Compresses a unit-step path into straight-run step texts.
Plan path_to_plan(const std::vector<Cell>& path);

struct PlanStep {
  MazeAction action;
  int times = 0;
};

// Parses "Move down 4 times from ...". Returns nullopt on malformed text.
std::optional<PlanStep> parse_plan_step(const std::string& text);

// How plan steps are driven through the agent: parsed directly into the move
// function, or handed to the agent's LLM loop as a task.
enum class StepExecution { RuleBased, LlmDriven };

struct StepOutcome {
  std::string step;
  bool failed = false;
  std::string detail;
};

struct PlanExecution {
  std::vector<StepOutcome> steps;
  std::optional<std::size_t> failure_index;
};

// Drives the plan step by step: the agent's log is reset before each step,
// the position/exit shared variables are refreshed, and a collision or
// out-of-bounds outcome marks the step failed and halts the sweep. Obstacle
// memory updates through the move function's vision after every unit step.
PlanExecution execute_plan(Agent& agent, const Plan& plan, MazeEnv& env,
                           StepExecution mode = StepExecution::RuleBased);

using PlannerFn = std::function<Plan(const PlannerQuery&)>;

// plan -> execute -> check -> replan, bounded by max_replans and the
// environment's width x height step budget. Completion is positional: the
// episode is solved exactly when the agent stands on the exit.
EpisodeResult run_episode(Agent& agent, const PlannerFn& planner, MazeEnv& env,
                          int max_replans = 10, StepExecution mode = StepExecution::RuleBased);

}  // namespace loom
