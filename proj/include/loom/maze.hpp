#pragma once

#include "loom/error.hpp"
#include "loom/function.hpp"
#include "loom/value.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace loom {

// Grid cell in (row, col) coordinates, (0, 0) top-left.
struct Cell {
  int row = 0;
  int col = 0;

  auto operator<=>(const Cell&) const = default;
};

std::string to_string(const Cell& cell);  // "(row, col)"

enum class MazeAction { Up, Down, Left, Right };

// Case-insensitive; unknown text returns nullopt.
std::optional<MazeAction> parse_maze_action(const std::string& text);
std::string to_string(MazeAction action);

struct MazeConfig {
  int width = 40;
  int height = 40;
  std::set<Cell> obstacles_phase1;
  std::set<Cell> obstacles_phase2;
  Cell start{0, 0};
  Cell exit{0, 0};
  int changeover_episode = 10;
  unsigned seed = 0;

  // Throws on start == exit, out-of-bounds cells, or start/exit sitting on an
  // obstacle of its phase.
  void validate() const;

  static MazeConfig from_document(const Value& doc);
  Value to_document() const;
};

struct StepResult {
  Cell pos;
  bool collided = false;
};

struct MoveOutcome {
  Cell final_pos;
  int moves_executed = 0;
  bool collided = false;
  bool episode_over = false;
};

// Deterministic grid-world: obstacles, 3x3 vision, bounded episodes. Down
// increases the row; there is no wraparound, and a collision leaves the
// position unchanged while still consuming a step. The step budget is
// width x height.
class MazeEnv {
 public:
  MazeEnv(MazeConfig config, int phase);

  const MazeConfig& config() const { return config_; }
  int phase() const { return phase_; }
  const std::set<Cell>& active_obstacles() const;
  Cell pos() const { return pos_; }
  int steps() const { return steps_; }
  int step_budget() const { return config_.width * config_.height; }
  bool episode_over() const { return steps_ >= step_budget(); }
  bool at_exit() const { return pos_ == config_.exit; }
  bool in_bounds(const Cell& cell) const;

  // Throws EpisodeOverError when the step budget is exhausted.
  StepResult step(MazeAction action);

  // Active obstacles within the 3x3 window centered on the agent, clipped at
  // the borders.
  std::set<Cell> observe() const;
  std::set<Cell> vision_window() const;

  // Agent-side obstacle memory, carried across episodes by the harness.
  std::set<Cell>& known_obstacles() { return known_obstacles_; }
  const std::set<Cell>& known_obstacles() const { return known_obstacles_; }

  // One observation at episode start, before any move.
  void initial_observe();

  // Plain-text grid dump: '#' obstacle, 'A' agent, 'E' exit, '.' free.
  std::string render_grid() const;

 private:
  MazeConfig config_;
  int phase_;
  Cell pos_;
  int steps_ = 0;
  std::set<Cell> known_obstacles_;
};

// memory plus newly observed cells, minus window cells observed to be free.
std::set<Cell> update_obstacle_memory(const std::set<Cell>& memory,
                                      const std::set<Cell>& window_cells,
                                      const std::set<Cell>& observed);

// Applies up to `times` unit steps, halting at the first collision or when
// the episode ends mid-sequence (partial result, no throw). Vision runs after
// every unit step and updates the obstacle memory.
MoveOutcome move(MazeEnv& env, MazeAction action, int times);

// The multi-move external function exposed to agents. Each call goes through
// move() and refreshes the "Current Position" shared variable.
ExternalFunctionDef make_move_function(MazeEnv& env);

// Random obstacles at `density` for both phases, with start/exit sampled and
// the whole configuration re-drawn until both phases are solvable. Same seed,
// same config.
MazeConfig generate_solvable_maze(int width, int height, double density, unsigned seed);

// Fresh start/exit pair for an episode, solvable in the active phase.
void randomize_start_exit(MazeConfig& config, int phase, unsigned episode_seed);

// Shortest-path length between start and exit over the given obstacles, or
// nullopt when unreachable. Breadth-first search.
std::optional<int> shortest_path_length(const MazeConfig& config, const std::set<Cell>& obstacles,
                                        const Cell& start, const Cell& exit);

}  // namespace loom
