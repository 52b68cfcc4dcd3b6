"""Denoising diffusion policy over the raw action space.

Actions are generated by reverse diffusion: start from a standard normal
vector, run N denoising steps conditioned on the state, and squash the
result with tanh into [-1, 1]^dim.  The denoiser is an MLP that eats
[noisy action | state | n / N] and predicts the injected noise.

Training uses the weighted denoising objective: for a batch of (state,
action, weight) rows, draw a uniform step n and fresh noise, form the
forward-diffused action, and regress the predicted noise onto the true
noise with the per-row weight.  Weights come from positive Q advantages,
so only actions better than the policy average pull probability mass.
"""

import dataclasses

import numpy as np

from .errors import InvalidWeight, SamplerDiverged
from .nets import autodiff as ad
from .nets.mlp import Mlp


@dataclasses.dataclass
class VarianceSchedule:
    """Forward-process noise schedule, steps indexed 1..n_steps."""
    betas: np.ndarray

    def __post_init__(self):
        self.betas = np.asarray(self.betas, dtype=np.float64)
        if self.betas.ndim != 1 or len(self.betas) < 1:
            raise ValueError("need a 1-D beta schedule")
        if np.any(self.betas <= 0.0) or np.any(self.betas >= 1.0):
            raise ValueError("betas must sit strictly inside (0, 1)")
        if np.any(np.diff(self.betas) < 0.0):
            raise ValueError("betas must be nondecreasing")
        self.alphas = 1.0 - self.betas
        self.alpha_bars = np.cumprod(self.alphas)

    @classmethod
    def linear(cls, n_steps=10, beta_start=1.0e-4, beta_end=0.02):
        return cls(np.linspace(beta_start, beta_end, n_steps))

    @property
    def n_steps(self):
        return len(self.betas)

    def beta(self, n):
        return float(self.betas[n - 1])

    def alpha(self, n):
        return float(self.alphas[n - 1])

    def alpha_bar(self, n):
        """Cumulative signal retention; alpha_bar(0) == 1 by convention."""
        if n == 0:
            return 1.0
        return float(self.alpha_bars[n - 1])


def forward_diffuse(actions, steps, noise, schedule):
    """x_n = sqrt(abar_n) a0 + sqrt(1 - abar_n) eps, rows independent."""
    actions = np.asarray(actions, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    steps = np.asarray(steps)
    abar = np.array([schedule.alpha_bar(int(n)) for n in np.atleast_1d(steps)])
    if actions.ndim == 1:
        abar = abar[0]
    else:
        abar = abar[:, None]
    return np.sqrt(abar) * actions + np.sqrt(1.0 - abar) * noise


class DiffusionPolicy:
    def __init__(self, state_dim, action_dim, hidden_widths, schedule, rng):
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.schedule = schedule
        widths = [action_dim + state_dim + 1] + list(hidden_widths) + [action_dim]
        self.denoiser = Mlp(widths, rng)

    @property
    def params(self):
        return self.denoiser.params

    def _inputs(self, noisy, states, steps):
        noisy = np.atleast_2d(np.asarray(noisy, dtype=np.float64))
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        steps = np.atleast_1d(np.asarray(steps, dtype=np.float64))
        if len(steps) == 1 and len(noisy) > 1:
            steps = np.full(len(noisy), steps[0])
        frac = (steps / self.schedule.n_steps)[:, None]
        return np.concatenate([noisy, states, frac], axis=1)

    def predict_noise(self, noisy, states, steps):
        return self.denoiser.forward(self._inputs(noisy, states, steps))

    def predict_noise_tape(self, noisy, states, steps):
        return self.denoiser.forward_tape(self._inputs(noisy, states, steps))

    def sample_batch(self, states, rng, squash=True):
        """Reverse diffusion for a batch of states; (batch, action_dim)."""
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        batch = len(states)
        x = rng.standard_normal((batch, self.action_dim))
        for n in range(self.schedule.n_steps, 0, -1):
            eps = self.predict_noise(x, states, n)
            beta = self.schedule.beta(n)
            abar = self.schedule.alpha_bar(n)
            mean = (x - beta / np.sqrt(1.0 - abar) * eps) \
                / np.sqrt(self.schedule.alpha(n))
            if n > 1:
                x = mean + np.sqrt(beta) * rng.standard_normal(x.shape)
            else:
                x = mean
            if not np.all(np.isfinite(x)):
                raise SamplerDiverged("non-finite sample at step %d" % n)
        return np.tanh(x) if squash else x

    def sample(self, state, rng, squash=True):
        return self.sample_batch(np.asarray(state)[None, :], rng, squash)[0]


def _check_weights(weights, batch):
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (batch,):
        raise InvalidWeight("expected %d weights, got %s" % (batch, weights.shape))
    if not np.all(np.isfinite(weights)) or np.any(weights < 0.0):
        raise InvalidWeight("weights must be finite and nonnegative")
    return weights


def weighted_denoise_loss(policy, states, actions, weights, rng):
    """Mean over rows of weight * ||eps - eps_theta(x_n, s, n)||^2."""
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    batch = len(states)
    weights = _check_weights(weights, batch)
    steps = rng.integers(1, policy.schedule.n_steps + 1, size=batch)
    noise = rng.standard_normal(actions.shape)
    noisy = forward_diffuse(actions, steps, noise, policy.schedule)
    pred = policy.predict_noise_tape(noisy, states, steps)
    resid = ad.sub(noise, pred)
    per_row = ad.sum_(ad.square(resid), axis=1)
    return ad.mean(ad.mul(weights, per_row))


def vlb_loss(policy, states, actions, weights, rng):
    """Advantage-weighted denoising loss over replayed actions."""
    return weighted_denoise_loss(policy, states, actions, weights, rng)


def entropy_loss(policy, states, uniform_actions, ent_coeff, eq_stats, rng):
    """Exploration term: denoising loss toward uniform random actions.

    eq_stats: per-row advantage statistics of the paired states; the row
    weight is ent_coeff * stat so exploration pressure scales with how much
    better than average the batch looks.
    """
    weights = ent_coeff * np.asarray(eq_stats, dtype=np.float64)
    return weighted_denoise_loss(policy, states, uniform_actions, weights, rng)


def q_weights(q_values, v_estimates):
    """Positive-part advantage max(Q - V, 0), elementwise."""
    q_values = np.asarray(q_values, dtype=np.float64)
    v_estimates = np.asarray(v_estimates, dtype=np.float64)
    return np.maximum(q_values - v_estimates, 0.0)


def behavior_select(policy, state, q_fn, count, rng):
    """Sample `count` candidate actions and return the Q-argmax.

    q_fn(states, actions) -> (count,) values.  Ties resolve to the first
    (lowest sample index) candidate.
    """
    if count < 1:
        raise ValueError("need at least one candidate")
    states = np.repeat(np.asarray(state, dtype=np.float64)[None, :], count, axis=0)
    candidates = policy.sample_batch(states, rng)
    values = np.asarray(q_fn(states, candidates), dtype=np.float64)
    return candidates[int(np.argmax(values))]
