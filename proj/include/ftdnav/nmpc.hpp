#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <vector>

#include "ftdnav/ftd_map.hpp"
#include "ftdnav/risk.hpp"
#include "ftdnav/robot.hpp"

namespace ftdnav {

struct NmpcParams {
  int horizon{30};
  double dt{0.1};
  double gamma{0.9};  // barrier decay rate parameter, (0, 1]
  double delta_s{0.271};
  double delta_d{0.35};

  Eigen::Vector3d q_weights{1.0, 1.0, 0.05};   // target tracking
  Eigen::Vector2d r_weights{0.1, 0.05};        // control effort
  Eigen::Vector3d w_weights{0.1, 0.1, 0.01};   // prediction variation
  double terminal_weight_scale{10.0};          // Q_N = scale * Q

  double v_min{-0.3};
  double v_max{1.2};
  double omega_max{1.2};
  double pos_bound{1e9};        // |x|, |y| state box half-width; >= 1e6 disables
  double terminal_radius{0.0};  // terminal ball constraint; 0 disables

  HeightBand band{0.05, 0.4};

  int max_sqp_iterations{50};
  // Stationarity is scaled by (1 + |grad|_inf); feasibility is absolute.
  double tol_stationarity{1e-6};
  double tol_equality{1e-9};
  double tol_inequality{1e-7};

  void validate() const;
};

/// One linear-decay barrier inequality between two horizon states:
///   h_next(x[k_next]) - (1 - gamma) * h_prev(x[k_prev]) >= 0
/// with h(p) = (p - c)' diag(inv_metric) (p - c) - offset. Point barriers use
/// inv_metric = (1, 1) and offset = delta^2; ellipsoids use the reciprocal
/// squared semi-axes and offset = 1. k_prev == -1 anchors h_prev at the
/// measured current state (a constant).
struct CbfConstraint {
  int k_prev{0};
  int k_next{0};
  Eigen::Vector2d center_prev{0, 0};
  Eigen::Vector2d center_next{0, 0};
  Eigen::Vector2d inv_metric{1, 1};
  double offset{0.0};
};

double cbf_h(const Eigen::Vector2d& pos, const CbfConstraint& c, bool next);

/// Value and state gradients of the decay inequality
///   g = h_next(p_next) - (1 - gamma) * h_prev(p_prev)
/// for one barrier row. Gradient outputs are optional.
double cbf_row(const CbfConstraint& c, double gamma,
               const Eigen::Vector2d& p_prev, const Eigen::Vector2d& p_next,
               Eigen::Vector2d* grad_prev = nullptr,
               Eigen::Vector2d* grad_next = nullptr);

struct NlpProblem {
  RobotState x0;
  RobotState target;
  std::vector<RobotState> variation_reference;  // one per stage k = 0..N-1
  std::vector<CbfConstraint> cbf;
  NmpcParams params;
};

enum class SolveStatus { kSolved, kFailed };

struct NmpcSolution {
  std::vector<ControlInput> inputs;  // N
  std::vector<RobotState> states;    // N + 1
  double cost{0.0};
  SolveStatus status{SolveStatus::kFailed};
  double solve_time_s{0.0};
  int iterations{0};
};

/// Builds the optimization problem for the current cycle: dynamics and bound
/// constraints are implicit in the params; static risk points contribute one
/// constraint per horizon step, dynamic risk points one constraint each.
/// prev (the previous cycle's solution states, aligned so index k predicts
/// k steps from now) feeds the prediction-variation cost; cold starts pass
/// nullptr and the reference collapses to x0.
NlpProblem assemble_problem(const RobotState& x0, const RobotState& target,
                            const HistoricalRiskSet& hist,
                            const std::vector<RiskPoint>& dynamic_risks,
                            const std::vector<RobotState>* prev_states,
                            const NmpcParams& params);

/// SQP with a Gauss-Newton Hessian, l1-merit line search and dense dual
/// active-set QP subproblems. The warm start is optional; passing the
/// previous solution shifted by one step is the intended use. A returned
/// kSolved status guarantees states are an exact rollout of inputs and all
/// inequality constraints hold to tolerance.
NmpcSolution solve(const NlpProblem& problem,
                   const NmpcSolution* warm_start = nullptr);

/// Last successful solution plus the failure counter that indexes into it.
struct FallbackBuffer {
  std::optional<NmpcSolution> last_success;
  double success_time{0.0};
  int steps_since_success{0};
};

/// The recovery rule: on failure number dT since the last success, apply
/// element dT of the stored input sequence; exhausted or empty buffers stop
/// the robot.
ControlInput fallback_control(const FallbackBuffer& buffer);

/// Per-cycle diagnostics of one planning step.
struct PlanStepResult {
  ControlInput applied;
  bool solved{false};
  bool fallback_exhausted{false};
  int static_risk_count{0};
  int dynamic_risk_count{0};
  double cycle_time_s{0.0};  // risk identification + assembly + solve
  double min_static_cbf_margin{std::numeric_limits<double>::infinity()};
  NmpcSolution solution;  // last attempt (may be failed)
};

/// Owns the receding-horizon loop state: previous prediction, historical
/// risk set and the fallback buffer.
class Planner {
 public:
  Planner(NmpcParams params, RiskParams risk_params);

  PlanStepResult plan_step(const RobotState& x0, const RobotState& target,
                           const FtdMap& map, double now);

  const HistoricalRiskSet& historical_set() const { return hist_; }
  const FallbackBuffer& fallback_buffer() const { return fallback_; }
  const std::vector<RobotState>& previous_prediction() const { return prev_states_; }

  /// Test hook: force the solver to fail by capping its iterations.
  void set_iteration_cap(int cap) { params_.max_sqp_iterations = cap; }
  const NmpcParams& params() const { return params_; }

  void reset();

 private:
  NmpcParams params_;
  RiskParams risk_params_;
  HistoricalRiskSet hist_;
  FallbackBuffer fallback_;
  std::vector<RobotState> prev_states_;    // empty until the first cycle ran
  std::vector<ControlInput> prev_inputs_;  // aligned with prev_states_
  int stall_cycles_{0};
};

}  // namespace ftdnav
