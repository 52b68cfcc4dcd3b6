"""Online diffusion-policy training (the qagob algorithm).

Per environment step: act with the sample-and-argmax behavior policy,
store the transition in the replay buffer and the chosen pair in the
diffusion buffer, then (after warmup) run one critic update on a replay
batch and one actor update on a diffusion-buffer batch, followed by soft
target blending.  Critics are twins; TD targets bootstrap through the
minimum of the two target critics evaluated at the target policy's
sample-and-argmax action.

Actor updates weight the denoising loss by the positive advantage
max(Q - V, 0), with V the mean critic value over fresh policy samples,
plus an entropy term that denoises toward uniform actions.
"""

import dataclasses
import os
import time

import numpy as np

from . import diffusion
from .environment import SaginEnv
from .errors import NonFiniteGradient
from .nets.mlp import Mlp, save_checkpoint
from .nets.optim import Adam
from .nets import autodiff as ad
from .scenario import SeededRng


@dataclasses.dataclass
class Hyper:
    episodes: int = 3000
    gamma: float = 0.9
    soft_rate: float = 0.005          # target blend per update
    lr_actor: float = 3.0e-4
    lr_critic: float = 3.0e-2
    replay_capacity: int = 1_000_000
    diffusion_capacity: int = 1_000_000
    batch_size: int = 256
    warmup_steps: int = 1000          # env steps before updates begin
    update_every: int = 1             # env steps per critic update
    actor_every: int = 1              # critic updates per actor update
    n_policy_samples: int = 64        # diffusion-buffer rows per actor update
    n_uniform_samples: int = 16       # uniform rows per actor update
    n_value_samples: int = 8          # policy samples behind the V estimate
    behavior_samples: int = 4         # candidates when acting
    target_samples: int = 2           # candidates inside the TD target
    ent_coeff: float = 0.02
    ent_variant: str = "mean"         # "mean" | "max"
    critic_widths: tuple = (256, 128)
    actor_widths: tuple = (256, 256)
    n_denoise: int = 10
    beta_start: float = 1.0e-4
    beta_end: float = 0.02
    checkpoint_every: int = 0         # episodes; 0 keeps only the final file


class RingBuffer:
    """Fixed-capacity FIFO with uniform sampling (no replacement)."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.items = []
        self._next = 0

    def push(self, item):
        if len(self.items) < self.capacity:
            self.items.append(item)
        else:
            self.items[self._next] = item
        self._next = (self._next + 1) % self.capacity

    def sample(self, n, rng):
        if n > len(self.items):
            raise ValueError("asked for %d items, buffer holds %d"
                             % (n, len(self.items)))
        idx = rng.choice(len(self.items), size=n, replace=False)
        return [self.items[i] for i in idx]

    def __len__(self):
        return len(self.items)


class TwinCritics:
    def __init__(self, state_dim, action_dim, widths, rng):
        dims = [state_dim + action_dim] + list(widths) + [1]
        self.q1 = Mlp(dims, rng)
        self.q2 = Mlp(dims, rng)
        self.q1_target = self.q1.clone()
        self.q2_target = self.q2.clone()

    @staticmethod
    def _join(states, actions):
        return np.concatenate([np.atleast_2d(states), np.atleast_2d(actions)],
                              axis=1)

    def min_q(self, states, actions):
        x = self._join(states, actions)
        return np.minimum(self.q1.forward(x), self.q2.forward(x))[:, 0]

    def min_target_q(self, states, actions):
        x = self._join(states, actions)
        return np.minimum(self.q1_target.forward(x),
                          self.q2_target.forward(x))[:, 0]


def soft_update(online, target, rate):
    """target <- rate * online + (1 - rate) * target, elementwise."""
    if online.widths != target.widths:
        raise ValueError("network shapes differ")
    for p_on, p_tg in zip(online.params, target.params):
        p_tg.value = rate * p_on.value + (1.0 - rate) * p_tg.value


def td_targets(batch, critics, target_policy, gamma, target_samples, rng):
    """Bootstrapped targets y = r + gamma min-target-Q(s', a*) with a* the
    target policy's best-of-target_samples action; terminal rows use r."""
    states, actions, rewards, next_states, dones = batch
    n = len(rewards)
    rep = np.repeat(next_states, target_samples, axis=0)
    candidates = target_policy.sample_batch(rep, rng)
    values = critics.min_target_q(rep, candidates).reshape(n, target_samples)
    best = values.max(axis=1)
    return rewards + gamma * best * (1.0 - dones)


def critic_update(batch, targets, critics, opt1, opt2):
    """Step both critics toward the shared targets; returns the two losses."""
    states, actions, _, _, _ = batch
    x = TwinCritics._join(states, actions)
    y = np.asarray(targets, dtype=np.float64)[:, None]
    losses = []
    for net, opt in ((critics.q1, opt1), (critics.q2, opt2)):
        pred = net.forward_tape(x)
        loss = ad.mean(ad.square(ad.sub(pred, y)))
        if not np.isfinite(loss.value):
            raise NonFiniteGradient("critic loss is not finite: %r"
                                    % float(loss.value))
        opt.zero_grad()
        ad.backward(loss)
        opt.step()
        losses.append(float(loss.value))
    return losses


def actor_update(policy, critics, diff_batch, hyper, rng, opt):
    """Q-weighted denoising update plus the entropy term; returns the loss."""
    states = np.stack([s for s, _ in diff_batch])
    acts = np.stack([a for _, a in diff_batch])
    n = len(states)

    q_vals = critics.min_q(states, acts)
    rep = np.repeat(states, hyper.n_value_samples, axis=0)
    samples = policy.sample_batch(rep, rng)
    q_samples = critics.min_q(rep, samples).reshape(n, hyper.n_value_samples)
    v_est = q_samples.mean(axis=1)
    weights = diffusion.q_weights(q_vals, v_est)
    # per-state mean positive advantage of the fresh samples, for the
    # mean-form entropy weight
    sample_adv = np.maximum(q_samples - v_est[:, None], 0.0).mean(axis=1)

    loss = diffusion.vlb_loss(policy, states, acts, weights, rng)
    if hyper.n_uniform_samples > 0 and hyper.ent_coeff > 0.0:
        idx = rng.integers(0, n, size=hyper.n_uniform_samples)
        u_states = states[idx]
        u_actions = rng.uniform(-1.0, 1.0,
                                size=(hyper.n_uniform_samples, policy.action_dim))
        if hyper.ent_variant == "max":
            stats = np.full(hyper.n_uniform_samples, weights.max())
        else:
            stats = sample_adv[idx]
        loss = ad.add(loss, diffusion.entropy_loss(
            policy, u_states, u_actions, hyper.ent_coeff, stats, rng))
    if not np.isfinite(loss.value):
        raise NonFiniteGradient("actor loss is not finite: %r"
                                % float(loss.value))
    opt.zero_grad()
    ad.backward(loss)
    opt.step()
    return float(loss.value)


class QagobTrainer:
    def __init__(self, env, hyper=None, seed=None):
        self.env = env
        self.hyper = hyper or Hyper()
        self.seed = env.seed if seed is None else int(seed)
        self.rng = SeededRng(self.seed)
        net_rng = self.rng.stream("net-init")
        schedule = diffusion.VarianceSchedule.linear(
            self.hyper.n_denoise, self.hyper.beta_start, self.hyper.beta_end)
        self.policy = diffusion.DiffusionPolicy(
            env.state_dim, env.action_dim, self.hyper.actor_widths,
            schedule, net_rng)
        self.policy_target = diffusion.DiffusionPolicy(
            env.state_dim, env.action_dim, self.hyper.actor_widths,
            schedule, None)
        self.policy_target.denoiser.set_arrays(self.policy.denoiser.get_arrays())
        self.critics = TwinCritics(env.state_dim, env.action_dim,
                                   self.hyper.critic_widths, net_rng)
        self.opt_actor = Adam(self.policy.params, self.hyper.lr_actor)
        self.opt_q1 = Adam(self.critics.q1.params, self.hyper.lr_critic)
        self.opt_q2 = Adam(self.critics.q2.params, self.hyper.lr_critic)
        self.replay = RingBuffer(self.hyper.replay_capacity)
        self.diff_buffer = RingBuffer(self.hyper.diffusion_capacity)
        self.total_steps = 0
        self.critic_updates = 0

    def select_action(self, state, policy=None, critics_fn=None, rng=None):
        policy = policy or self.policy
        rng = rng or self.rng.stream("policy-noise")

        def q_fn(states, acts):
            return self.critics.min_q(states, acts) if critics_fn is None \
                else critics_fn(states, acts)
        return diffusion.behavior_select(policy, state, q_fn,
                                         self.hyper.behavior_samples, rng)

    def _batch_arrays(self, rows):
        states = np.stack([r[0] for r in rows])
        acts = np.stack([r[1] for r in rows])
        rewards = np.array([r[2] for r in rows], dtype=np.float64)
        next_states = np.stack([r[3] for r in rows])
        dones = np.array([float(r[4]) for r in rows])
        return states, acts, rewards, next_states, dones

    def update(self):
        """One gradient phase; returns (critic_loss_mean, actor_loss or None)."""
        h = self.hyper
        t_rng = self.rng.stream("trainer")
        batch = self._batch_arrays(self.replay.sample(h.batch_size, t_rng))
        targets = td_targets(batch, self.critics, self.policy_target,
                             h.gamma, h.target_samples, t_rng)
        closses = critic_update(batch, targets, self.critics,
                                self.opt_q1, self.opt_q2)
        self.critic_updates += 1
        aloss = None
        if (self.critic_updates % h.actor_every == 0
                and len(self.diff_buffer) >= h.n_policy_samples):
            diff_batch = self.diff_buffer.sample(h.n_policy_samples, t_rng)
            aloss = actor_update(self.policy, self.critics, diff_batch,
                                 h, t_rng, self.opt_actor)
            soft_update(self.policy.denoiser, self.policy_target.denoiser,
                        h.soft_rate)
        soft_update(self.critics.q1, self.critics.q1_target, h.soft_rate)
        soft_update(self.critics.q2, self.critics.q2_target, h.soft_rate)
        return sum(closses) / 2.0, aloss

    def run_episode(self):
        """One environment episode with per-step updates after warmup."""
        h = self.hyper
        env = self.env
        state = env.reset()
        ep_reward = 0.0
        closs_sum, closs_n = 0.0, 0
        aloss_sum, aloss_n = 0.0, 0
        done = False
        while not done:
            action = self.select_action(state)
            next_state, reward, done, _ = env.step(action)
            self.replay.push((state, action, reward, next_state, done))
            self.diff_buffer.push((state, action))
            self.total_steps += 1
            if (self.total_steps > h.warmup_steps
                    and self.total_steps % h.update_every == 0
                    and len(self.replay) >= h.batch_size):
                closs, aloss = self.update()
                closs_sum += closs
                closs_n += 1
                if aloss is not None:
                    aloss_sum += aloss
                    aloss_n += 1
            state = next_state
            ep_reward += reward
        critic_loss = closs_sum / closs_n if closs_n else float("nan")
        actor_loss = aloss_sum / aloss_n if aloss_n else float("nan")
        return ep_reward, critic_loss, actor_loss

    def checkpoint(self, path, meta=None):
        nets = {
            "actor": self.policy.denoiser,
            "actor_target": self.policy_target.denoiser,
            "q1": self.critics.q1,
            "q2": self.critics.q2,
            "q1_target": self.critics.q1_target,
            "q2_target": self.critics.q2_target,
        }
        base = {"seed": self.seed, "total_steps": self.total_steps,
                "betas": list(self.policy.schedule.betas),
                "arch": {"actor_widths": list(self.hyper.actor_widths),
                         "critic_widths": list(self.hyper.critic_widths),
                         "n_denoise": int(self.hyper.n_denoise),
                         "beta_start": float(self.hyper.beta_start),
                         "beta_end": float(self.hyper.beta_end)}}
        base.update(meta or {})
        save_checkpoint(path, nets, base)


def train(scenario, hyper=None, seed=None, on_episode=None, ckpt_dir=None,
          log_records=None, progress=True):
    """Run the full training loop; returns the per-episode report rows.

    on_episode(row) fires after each episode so callers can stream the
    report; rows written so far survive a mid-run crash.  log_records, when
    a list, receives (episode, records) tuples for event export.
    """
    from .runio import episode_metrics  # local import to avoid a cycle

    hyper = hyper or Hyper()
    env = SaginEnv(scenario, seed)
    trainer = QagobTrainer(env, hyper, seed)
    rows = []
    start = time.time()
    for episode in range(hyper.episodes):
        ep_reward, closs, aloss = trainer.run_episode()
        row = episode_metrics(env, episode, ep_reward)
        row["critic_loss"] = closs
        row["actor_loss"] = aloss
        rows.append(row)
        if log_records is not None:
            log_records.append((episode, env.records))
        if on_episode is not None:
            on_episode(row)
        if progress:
            print("episode %d/%d reward %.3f (%.1fs)" % (
                episode + 1, hyper.episodes, ep_reward, time.time() - start),
                flush=True)
        if ckpt_dir and hyper.checkpoint_every > 0 \
                and (episode + 1) % hyper.checkpoint_every == 0:
            trainer.checkpoint(os.path.join(
                ckpt_dir, "ep%05d.npz" % (episode + 1)),
                {"episode": episode + 1})
    if ckpt_dir:
        trainer.checkpoint(os.path.join(ckpt_dir, "final.npz"),
                           {"episode": hyper.episodes})
    return rows, trainer
