#include "sea/rl/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sea::rl {

using ad::Tape;
using ad::Var;
using spatial::FrameTopology;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::a2c: return "a2c";
    case Algorithm::ppo: return "ppo";
    case Algorithm::ddpg: return "ddpg";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "a2c") return Algorithm::a2c;
  if (s == "ppo") return Algorithm::ppo;
  if (s == "ddpg") return Algorithm::ddpg;
  throw Error("algorithm: unknown name '" + s + "' (expected a2c, ppo or ddpg)");
}

PolicyKind policy_kind_for(Algorithm a, env::ActionKind k) {
  if (a == Algorithm::ddpg) return PolicyKind::deterministic;
  return k == env::ActionKind::continuous ? PolicyKind::gaussian : PolicyKind::categorical;
}

Learner Learner::create(const AlgoConfig& algo, const NetworkConfig& net, std::size_t obs_dim, env::ActionSpec spec,
                        Rng& rng) {
  Learner l;
  l.algo = algo;
  l.net = net;
  const PolicyKind pk = policy_kind_for(algo.algorithm, spec.kind);
  l.nets.actor = std::make_unique<Actor>(pk, spec, obs_dim, net, rng);
  const std::size_t critic_in = l.critic_input_dim();
  l.nets.critic = std::make_unique<Critic>(net.critic, critic_in, net, rng, "critic");
  if (algo.algorithm == Algorithm::ddpg) {
    l.nets.target_actor = std::make_unique<Actor>(pk, spec, obs_dim, net, rng);
    l.nets.target_critic = std::make_unique<Critic>(net.critic, critic_in, net, rng, "critic");
    copy_parameters(l.nets.target_actor->parameters(), l.nets.actor->parameters());
    copy_parameters(l.nets.target_critic->parameters(), l.nets.critic->parameters());
  }
  l.actor_opt = ad::Adam(l.nets.actor->parameters(), {.learning_rate = algo.actor_lr});
  l.critic_opt = ad::Adam(l.nets.critic->parameters(), {.learning_rate = algo.critic_lr});
  return l;
}

std::size_t Learner::critic_input_dim() const {
  const std::size_t obs = nets.actor->net().in_dim();
  return algo.algorithm == Algorithm::ddpg ? obs + nets.actor->action_features() : obs;
}

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

// Alive rows of several frames stacked in frame order. Frames without any
// alive agent contribute no rows and no topology.
struct Stack {
  Matrix obs;
  std::vector<std::pair<std::size_t, std::size_t>> entries;  // (frame, agent)
  std::vector<FrameTopology> topologies;
  std::vector<std::size_t> frame_rows;                       // rows per included frame

  std::size_t rows() const { return entries.size(); }
};

Stack stack_frames(const std::vector<const Frame*>& frames, const Critic* critic) {
  Stack s;
  std::size_t rows = 0, cols = 0;
  for (const Frame* f : frames) {
    rows += f->alive_count();
    if (f->obs.cols() > 0) cols = f->obs.cols();
  }
  s.obs = Matrix(rows, cols);
  std::size_t r = 0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Frame& f = *frames[k];
    const auto idx = f.alive_indices();
    if (idx.empty()) continue;
    for (std::size_t i : idx) {
      auto src = f.obs.row_span(i);
      std::copy(src.begin(), src.end(), s.obs.row_span(r++).begin());
      s.entries.emplace_back(k, i);
    }
    s.frame_rows.push_back(idx.size());
    if (critic && uses_sea(critic->kind())) s.topologies.push_back(critic->topology(f));
  }
  return s;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto o = out.row_span(r);
    auto x = a.row_span(r);
    auto y = b.row_span(r);
    std::copy(x.begin(), x.end(), o.begin());
    std::copy(y.begin(), y.end(), o.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

Matrix column(const std::vector<double>& v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

struct PolicyTerms {
  Var log_prob;  // n × 1
  Var entropy;   // n × 1
};

PolicyTerms policy_terms(Tape& tape, Actor& actor, Var obs, const Matrix& actions) {
  Var out = actor.forward(tape, obs);
  const std::size_t n = obs.rows();
  if (actor.kind() == PolicyKind::gaussian) {
    const auto d = static_cast<double>(actor.spec().size);
    Var ls = ad::gather_rows(tape.param(actor.log_std()), std::vector<std::size_t>(n, 0));
    Var z = ad::mul(ad::sub(tape.constant(actions), out), ad::exp(ad::scale(ls, -1.0)));
    Var lp = ad::add_scalar(ad::sum_cols(ad::sub(ad::scale(ad::square(z), -0.5), ls)), -d * kHalfLog2Pi);
    Var ent = ad::add_scalar(ad::sum_cols(ls), d * (kHalfLog2Pi + 0.5));
    return {lp, ent};
  }
  if (actor.kind() == PolicyKind::categorical) {
    std::vector<std::size_t> choice(n);
    for (std::size_t r = 0; r < n; ++r) choice[r] = static_cast<std::size_t>(actions(r, 0));
    Var lsm = ad::log_softmax(out);
    Var ent = ad::scale(ad::sum_cols(ad::mul(ad::exp(lsm), lsm)), -1.0);
    return {ad::pick(lsm, std::move(choice)), ent};
  }
  throw Error("policy_terms: deterministic actors have no log-probabilities");
}

void clip_and_step(ad::Adam& opt, double max_norm) {
  if (max_norm > 0.0) ad::clip_grad_norm(opt.params(), max_norm);
  opt.step();
}

// Critic values for every frame of a rollout (and the bootstrap frame) on `tape`.
// Returns the stacked values and writes them into the batch.
Var evaluate_values(Tape& tape, RolloutBatch& batch, Critic& critic, Stack& stack) {
  std::vector<const Frame*> frames;
  for (const auto& s : batch.steps) frames.push_back(&s.frame);
  frames.push_back(&batch.bootstrap);
  stack = stack_frames(frames, &critic);
  for (auto& s : batch.steps) s.values.assign(s.frame.n_agents(), 0.0);
  batch.bootstrap_values.assign(batch.bootstrap.n_agents(), 0.0);
  if (stack.rows() == 0) return {};
  Var v = critic.forward(tape, tape.constant(stack.obs), stack.topologies);
  const std::size_t T = batch.steps.size();
  for (std::size_t r = 0; r < stack.rows(); ++r) {
    auto [k, i] = stack.entries[r];
    (k < T ? batch.steps[k].values : batch.bootstrap_values)[i] = v.value()(r, 0);
  }
  return v;
}

// Row ids (into a stack that ends with the bootstrap frame) belonging to the rollout steps.
std::vector<std::size_t> step_rows(const Stack& s, std::size_t steps) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < s.rows(); ++r)
    if (s.entries[r].first < steps) rows.push_back(r);
  return rows;
}

Matrix gather_matrix_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto src = m.row_span(rows[k]);
    std::copy(src.begin(), src.end(), out.row_span(k).begin());
  }
  return out;
}

void check_batch(const RolloutBatch& batch) {
  if (batch.steps.empty()) throw Error("update: empty rollout");
  for (const auto& s : batch.steps) {
    const std::size_t n = s.frame.n_agents();
    if (s.rewards.size() != n || s.actions.rows() != n || s.frame.obs.rows() != n)
      throw Error("update: rollout step has inconsistent agent counts");
    if (s.log_probs.size() != n) throw Error("update: rollout step is missing log-probabilities");
  }
  if (batch.bootstrap.n_agents() != batch.steps.back().frame.n_agents())
    throw Error("update: bootstrap frame has a different agent count");
}

}  // namespace

// ---- acting ------------------------------------------------------------------

double exploration_noise(const AlgoConfig& c, std::size_t step) {
  if (c.noise_decay_steps == 0 || step >= c.noise_decay_steps) return c.noise_end;
  const double f = static_cast<double>(step) / static_cast<double>(c.noise_decay_steps);
  return c.noise_start + (c.noise_end - c.noise_start) * f;
}

ActionChoice select_actions(Actor& actor, const Frame& frame, ActMode mode, Rng& rng, double noise) {
  const std::size_t n = frame.n_agents();
  const auto& spec = actor.spec();
  const bool discrete = spec.kind == env::ActionKind::discrete;
  const auto idx = frame.alive_indices();
  ActionChoice c;
  c.env_actions = Matrix(n, discrete ? 1 : spec.size);
  c.critic_actions = Matrix(n, spec.size);
  c.log_probs.assign(n, 0.0);
  if (idx.empty()) return c;

  // Decentralized execution: the actor sees nothing but the alive agents' own rows.
  Matrix obs(idx.size(), frame.obs.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    auto src = frame.obs.row_span(idx[k]);
    std::copy(src.begin(), src.end(), obs.row_span(k).begin());
  }
  const Matrix out = actor.evaluate(obs);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    auto o = out.row_span(k);
    switch (actor.kind()) {
      case PolicyKind::gaussian: {
        const auto& ls = actor.log_std().value;
        double lp = 0.0;
        for (std::size_t d = 0; d < spec.size; ++d) {
          double a = o[d];
          if (mode == ActMode::explore) a += std::exp(ls(0, d)) * normal(rng);
          const double z = (a - o[d]) * std::exp(-ls(0, d));
          lp += -0.5 * z * z - ls(0, d);
          c.env_actions(i, d) = a;
          c.critic_actions(i, d) = a;
        }
        c.log_probs[i] = lp - static_cast<double>(spec.size) * kHalfLog2Pi;
        break;
      }
      case PolicyKind::categorical: {
        const double m = *std::max_element(o.begin(), o.end());
        double z = 0.0;
        for (double v : o) z += std::exp(v - m);
        const double log_z = m + std::log(z);
        std::size_t a = static_cast<std::size_t>(std::max_element(o.begin(), o.end()) - o.begin());
        if (mode == ActMode::explore) {
          double u = unit(rng), acc = 0.0;
          a = spec.size - 1;
          for (std::size_t j = 0; j < spec.size; ++j) {
            acc += std::exp(o[j] - log_z);
            if (u < acc) {
              a = j;
              break;
            }
          }
        }
        c.env_actions(i, 0) = static_cast<double>(a);
        c.critic_actions(i, a) = 1.0;
        c.log_probs[i] = o[a] - log_z;
        break;
      }
      case PolicyKind::deterministic: {
        if (discrete) {
          std::size_t a = static_cast<std::size_t>(std::max_element(o.begin(), o.end()) - o.begin());
          if (mode == ActMode::explore && unit(rng) < noise) {
            a = std::uniform_int_distribution<std::size_t>(0, spec.size - 1)(rng);
          }
          c.env_actions(i, 0) = static_cast<double>(a);
          c.critic_actions(i, a) = 1.0;
        } else {
          for (std::size_t d = 0; d < spec.size; ++d) {
            double a = o[d];
            if (mode == ActMode::explore && noise > 0.0) a = std::clamp(a + noise * normal(rng), -1.0, 1.0);
            c.env_actions(i, d) = a;
            c.critic_actions(i, d) = a;
          }
        }
        break;
      }
    }
  }
  return c;
}

// ---- estimators --------------------------------------------------------------

void fill_values(RolloutBatch& batch, Critic& critic) {
  Tape tape;
  Stack stack;
  evaluate_values(tape, batch, critic, stack);
}

std::vector<std::vector<double>> nstep_returns(const RolloutBatch& batch, double gamma) {
  const std::size_t T = batch.steps.size();
  std::vector<std::vector<double>> R(T);
  for (std::size_t t = T; t-- > 0;) {
    const RolloutStep& s = batch.steps[t];
    R[t].assign(s.frame.n_agents(), 0.0);
    for (std::size_t i = 0; i < s.frame.n_agents(); ++i) {
      if (!s.frame.alive[i]) continue;
      double next = 0.0;
      if (!batch.terminal(t, i)) next = t + 1 < T ? R[t + 1][i] : batch.bootstrap_values[i];
      R[t][i] = s.rewards[i] + gamma * next;
    }
  }
  return R;
}

std::vector<std::vector<double>> gae_advantages(const RolloutBatch& batch, double gamma, double lambda) {
  const std::size_t T = batch.steps.size();
  std::vector<std::vector<double>> A(T);
  for (std::size_t t = T; t-- > 0;) {
    const RolloutStep& s = batch.steps[t];
    A[t].assign(s.frame.n_agents(), 0.0);
    for (std::size_t i = 0; i < s.frame.n_agents(); ++i) {
      if (!s.frame.alive[i]) continue;
      const bool term = batch.terminal(t, i);
      const double next_v = term ? 0.0 : batch.next_value(t, i);
      const double delta = s.rewards[i] + gamma * next_v - s.values[i];
      const double carry = (term || t + 1 == T) ? 0.0 : A[t + 1][i];
      A[t][i] = delta + gamma * lambda * carry;
    }
  }
  return A;
}

Var ppo_value_terms(Var v_new, const Matrix& v_old, const Matrix& returns, double eps) {
  Tape& tape = v_new.tape();
  Matrix lo = v_old, hi = v_old;
  for (double& x : lo.values()) x -= eps;
  for (double& x : hi.values()) x += eps;
  Var ret = tape.constant(returns);
  Var unclipped = ad::square(ad::sub(v_new, ret));
  Var clipped = ad::square(ad::sub(ad::clip(v_new, lo, hi), ret));
  return ad::maximum(unclipped, clipped);
}

// ---- updates -----------------------------------------------------------------

UpdateStats a2c_update(RolloutBatch& batch, Learner& L) {
  check_batch(batch);
  Actor& actor = *L.nets.actor;
  Critic& critic = *L.nets.critic;
  const std::size_t T = batch.steps.size();

  Tape tape;
  Stack all;
  Var v_all = evaluate_values(tape, batch, critic, all);
  const auto rows = step_rows(all, T);
  if (rows.empty()) throw Error("a2c_update: no alive agents in the batch");
  const auto R = nstep_returns(batch, L.algo.gamma);

  Matrix actions(rows.size(), batch.steps[0].actions.cols());
  std::vector<double> ret(rows.size()), adv(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto [t, i] = all.entries[rows[k]];
    auto src = batch.steps[t].actions.row_span(i);
    std::copy(src.begin(), src.end(), actions.row_span(k).begin());
    ret[k] = R[t][i];
    adv[k] = R[t][i] - batch.steps[t].values[i];
  }

  Var obs = tape.constant(gather_matrix_rows(all.obs, rows));
  PolicyTerms pt = policy_terms(tape, actor, obs, actions);
  Var v = ad::gather_rows(v_all, rows);
  Var policy_loss = ad::scale(ad::mean(ad::mul(tape.constant(column(adv)), pt.log_prob)), -1.0);
  Var entropy = ad::mean(pt.entropy);
  Var value_loss = ad::mse(v, tape.constant(column(ret)));
  Var total = ad::add(ad::sub(policy_loss, ad::scale(entropy, L.algo.entropy_coef)),
                      ad::scale(value_loss, L.algo.value_coef));

  L.actor_opt.zero_grad();
  L.critic_opt.zero_grad();
  tape.backward(total);
  clip_and_step(L.actor_opt, L.algo.max_grad_norm);
  clip_and_step(L.critic_opt, L.algo.max_grad_norm);
  return {policy_loss.value()(0, 0), value_loss.value()(0, 0), entropy.value()(0, 0), rows.size()};
}

UpdateStats ppo_update(RolloutBatch& batch, Learner& L, Rng& rng) {
  check_batch(batch);
  const AlgoConfig& cfg = L.algo;
  Actor& actor = *L.nets.actor;
  Critic& critic = *L.nets.critic;
  const std::size_t T = batch.steps.size();
  if (cfg.ppo_epochs == 0) throw Error("ppo_update: ppo_epochs must be at least 1");
  if (cfg.ppo_minibatches == 0) throw Error("ppo_update: ppo_minibatches must be at least 1");

  fill_values(batch, critic);
  const auto A = gae_advantages(batch, cfg.gamma, cfg.gae_lambda);

  std::vector<std::size_t> live;
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < T; ++t) {
    const Frame& f = batch.steps[t].frame;
    if (f.alive_count() > 0) live.push_back(t);
    for (std::size_t i = 0; i < f.n_agents(); ++i) {
      if (!f.alive[i]) continue;
      sum += A[t][i];
      ++count;
    }
  }
  if (count == 0) throw Error("ppo_update: no alive agents in the batch");
  if (cfg.ppo_minibatches > live.size()) {
    throw Error("ppo_update: " + std::to_string(cfg.ppo_minibatches) + " minibatches requested but the batch has " +
                std::to_string(live.size()) + " usable frames");
  }
  const double mean_adv = sum / static_cast<double>(count);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < batch.steps[t].frame.n_agents(); ++i)
      if (batch.steps[t].frame.alive[i]) sq += (A[t][i] - mean_adv) * (A[t][i] - mean_adv);
  const double std_adv = std::sqrt(sq / static_cast<double>(count)) + 1e-8;

  UpdateStats stats;
  std::size_t updates = 0;
  for (std::size_t epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    std::vector<std::size_t> order = live;
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t M = cfg.ppo_minibatches;
    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t lo = order.size() * m / M, hi = order.size() * (m + 1) / M;
      std::vector<std::size_t> chosen(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                      order.begin() + static_cast<std::ptrdiff_t>(hi));
      std::sort(chosen.begin(), chosen.end());
      std::vector<const Frame*> frames;
      for (std::size_t t : chosen) frames.push_back(&batch.steps[t].frame);
      Stack st = stack_frames(frames, &critic);

      const std::size_t n = st.rows();
      Matrix actions(n, batch.steps[0].actions.cols());
      std::vector<double> old_lp(n), adv(n), ret(n);
      Matrix v_old(n, 1);
      for (std::size_t r = 0; r < n; ++r) {
        auto [k, i] = st.entries[r];
        const std::size_t t = chosen[k];
        const RolloutStep& s = batch.steps[t];
        auto src = s.actions.row_span(i);
        std::copy(src.begin(), src.end(), actions.row_span(r).begin());
        old_lp[r] = s.log_probs[i];
        adv[r] = (A[t][i] - mean_adv) / std_adv;
        ret[r] = A[t][i] + s.values[i];
        v_old(r, 0) = s.values[i];
      }

      Tape tape;
      Var obs = tape.constant(st.obs);
      PolicyTerms pt = policy_terms(tape, actor, obs, actions);
      Var ratio = ad::exp(ad::sub(pt.log_prob, tape.constant(column(old_lp))));
      Var a = tape.constant(column(adv));
      Var surr1 = ad::mul(ratio, a);
      Var surr2 = ad::mul(ad::clip(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon), a);
      Var policy_loss = ad::scale(ad::mean(ad::minimum(surr1, surr2)), -1.0);
      Var entropy = ad::mean(pt.entropy);
      Var v = critic.forward(tape, obs, st.topologies);
      Var terms = ppo_value_terms(v, v_old, column(ret), cfg.clip_epsilon);
      // Summed over the agents of a frame, averaged over frames.
      Var value_loss = ad::scale(ad::sum(terms), 1.0 / static_cast<double>(chosen.size()));
      Var total = ad::add(ad::sub(policy_loss, ad::scale(entropy, cfg.entropy_coef)),
                          ad::scale(value_loss, cfg.value_coef));

      L.actor_opt.zero_grad();
      L.critic_opt.zero_grad();
      tape.backward(total);
      clip_and_step(L.actor_opt, cfg.max_grad_norm);
      clip_and_step(L.critic_opt, cfg.max_grad_norm);

      stats.policy_loss += policy_loss.value()(0, 0);
      stats.value_loss += value_loss.value()(0, 0);
      stats.entropy += entropy.value()(0, 0);
      ++updates;
    }
  }
  const double u = static_cast<double>(updates);
  stats.policy_loss /= u;
  stats.value_loss /= u;
  stats.entropy /= u;
  stats.samples = count;
  return stats;
}

Var ddpg_actor_loss(Tape& tape, Actor& actor, Critic& critic, const std::vector<const Transition*>& samples) {
  std::vector<const Frame*> states;
  for (const Transition* tr : samples) states.push_back(&tr->state);
  Stack s = stack_frames(states, &critic);
  if (s.rows() == 0) throw Error("ddpg_actor_loss: no alive agents in the sampled transitions");
  Var obs = tape.constant(s.obs);
  Var a = actor.forward(tape, obs);
  Var q = critic.forward(tape, ad::concat_cols(obs, a), s.topologies);
  return ad::scale(ad::mean(q), -1.0);
}

UpdateStats ddpg_update(const std::vector<const Transition*>& samples, Learner& L) {
  if (!L.nets.target_actor || !L.nets.target_critic) throw Error("ddpg_update: learner has no target networks");
  if (samples.empty()) throw Error("ddpg_update: insufficient replay samples");
  const AlgoConfig& cfg = L.algo;
  Actor& actor = *L.nets.actor;
  Critic& critic = *L.nets.critic;
  Actor& target_actor = *L.nets.target_actor;
  Critic& target_critic = *L.nets.target_critic;
  const std::size_t act_w = actor.action_features();

  std::vector<const Frame*> states, nexts;
  for (const Transition* tr : samples) {
    states.push_back(&tr->state);
    nexts.push_back(&tr->next);
  }
  Stack s = stack_frames(states, &critic);
  const std::size_t n = s.rows();
  if (n == 0) throw Error("ddpg_update: no alive agents in the sampled transitions");
  Matrix acts(n, act_w);
  std::vector<double> reward(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto [b, i] = s.entries[r];
    const Transition& tr = *samples[b];
    if (tr.actions.cols() != act_w) throw Error("ddpg_update: stored action width does not match the actor");
    auto src = tr.actions.row_span(i);
    std::copy(src.begin(), src.end(), acts.row_span(r).begin());
    reward[r] = tr.rewards[i];
  }

  // Bootstrap targets from the target networks.
  Stack ns = stack_frames(nexts, &target_critic);
  std::vector<double> target(n);
  {
    std::vector<std::vector<std::ptrdiff_t>> next_row(samples.size());
    for (std::size_t b = 0; b < samples.size(); ++b) next_row[b].assign(samples[b]->next.n_agents(), -1);
    for (std::size_t r = 0; r < ns.rows(); ++r) next_row[ns.entries[r].first][ns.entries[r].second] = static_cast<std::ptrdiff_t>(r);
    Matrix q_next;
    if (ns.rows() > 0) {
      Tape tape;
      const Matrix next_act = target_actor.evaluate(ns.obs);
      q_next = target_critic.forward(tape, tape.constant(hconcat(ns.obs, next_act)), ns.topologies).value();
    }
    for (std::size_t r = 0; r < n; ++r) {
      auto [b, i] = s.entries[r];
      const Transition& tr = *samples[b];
      const std::ptrdiff_t nr = next_row[b][i];
      const bool terminal = tr.done || nr < 0;
      target[r] = reward[r] + (terminal ? 0.0 : cfg.gamma * q_next(static_cast<std::size_t>(nr), 0));
    }
  }

  UpdateStats stats;
  stats.samples = n;
  {
    Tape tape;
    Var q = critic.forward(tape, tape.constant(hconcat(s.obs, acts)), s.topologies);
    Var loss = ad::mse(q, tape.constant(column(target)));
    L.critic_opt.zero_grad();
    tape.backward(loss);
    clip_and_step(L.critic_opt, cfg.max_grad_norm);
    stats.value_loss = loss.value()(0, 0);
  }
  {
    // Actor step: the gradient reaches the actor through its own actions only.
    Tape tape;
    Var loss = ddpg_actor_loss(tape, actor, critic, samples);
    L.actor_opt.zero_grad();
    L.critic_opt.zero_grad();
    tape.backward(loss);
    clip_and_step(L.actor_opt, cfg.max_grad_norm);
    L.critic_opt.zero_grad();
    stats.policy_loss = loss.value()(0, 0);
  }
  soft_update(target_actor.parameters(), actor.parameters(), cfg.tau);
  soft_update(target_critic.parameters(), critic.parameters(), cfg.tau);
  return stats;
}

// ---- collection --------------------------------------------------------------

void RolloutCursor::ensure_started(env::Environment& env) {
  if (started) return;
  current = env.reset(derive_seed(base_seed, episodes));
  started = true;
}

namespace {

env::StepResult advance(env::Environment& env, RolloutCursor& cursor, const env::StepResult& result) {
  if (!result.done) return result;
  ++cursor.episodes;
  return env.reset(derive_seed(cursor.base_seed, cursor.episodes));
}

}  // namespace

RolloutBatch collect_rollout(env::Environment& env, Learner& learner, RolloutCursor& cursor, std::size_t steps,
                             Rng& rng) {
  cursor.ensure_started(env);
  RolloutBatch batch;
  batch.steps.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    RolloutStep s;
    s.frame = frame_from(cursor.current);
    ActionChoice c = select_actions(*learner.nets.actor, s.frame, ActMode::explore, rng);
    env::StepResult r = env.step(c.env_actions);
    s.actions = std::move(c.env_actions);
    s.log_probs = std::move(c.log_probs);
    s.rewards = r.rewards;
    s.done = r.done;
    batch.steps.push_back(std::move(s));
    cursor.current = advance(env, cursor, r);
  }
  batch.bootstrap = frame_from(cursor.current);
  return batch;
}

void collect_transitions(env::Environment& env, Learner& learner, RolloutCursor& cursor, std::size_t steps,
                         double noise, Rng& rng, ReplayBuffer& buffer) {
  cursor.ensure_started(env);
  for (std::size_t t = 0; t < steps; ++t) {
    Transition tr;
    tr.state = frame_from(cursor.current);
    ActionChoice c = select_actions(*learner.nets.actor, tr.state, ActMode::explore, rng, noise);
    env::StepResult r = env.step(c.env_actions);
    tr.actions = std::move(c.critic_actions);
    tr.rewards = r.rewards;
    tr.next = frame_from(r);
    tr.done = r.done;
    buffer.push(std::move(tr));
    cursor.current = advance(env, cursor, r);
  }
}

}  // namespace sea::rl
