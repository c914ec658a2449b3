#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "lolipop/cmdp.hpp"
#include "lolipop/rng.hpp"

namespace lolipop {

struct TrajectoryStep {
  int state = 0;
  int action = 0;
  double reward = 0.0;
};

// One episode: context plus exactly H (state, action, realized reward)
// triples. policy_id is an opaque tag for logging.
struct Trajectory {
  int context = 0;
  std::uint32_t policy_id = 0;
  std::vector<TrajectoryStep> steps;

  // Checks shape and that every realized reward is in the model's support.
  bool consistent_with(const TabularCMDP& model) const {
    if (context < 0 || context >= model.num_contexts()) return false;
    if (static_cast<int>(steps.size()) != model.horizon()) return false;
    if (steps[0].state != model.start_state()) return false;
    for (int h = 0; h < model.horizon(); ++h) {
      const auto& st = steps[static_cast<std::size_t>(h)];
      if (st.state < 0 || st.state >= model.num_states()) return false;
      if (st.action < 0 || st.action >= model.num_actions()) return false;
      if (model.reward(context, h, st.state, st.action).prob_of(st.reward) ==
          0.0)
        return false;
    }
    return true;
  }
};

// i.i.d. context draw.
inline int sample_context(RngStream& rng, std::span<const double> probs) {
  require_probability_vector(probs, "context distribution");
  return rng.next_categorical(probs);
}

// Roll one episode under (model, context, policy). Draw order per layer is
// fixed: action, reward, next state.
inline Trajectory rollout(const TabularCMDP& model, int context,
                          const Policy& policy, RngStream& rng,
                          std::uint32_t policy_id = 0) {
  model.check_context(context);
  const int H = model.horizon();
  Trajectory traj;
  traj.context = context;
  traj.policy_id = policy_id;
  traj.steps.resize(static_cast<std::size_t>(H));
  int s = model.start_state();
  for (int h = 0; h < H; ++h) {
    const int a = rng.next_categorical(policy.row(h, s));
    const double r = model.reward(context, h, s, a).sample(rng);
    traj.steps[static_cast<std::size_t>(h)] = {s, a, r};
    if (h + 1 < H)
      s = rng.next_categorical(model.transition_row(context, h, s, a));
  }
  return traj;
}

}  // namespace lolipop
