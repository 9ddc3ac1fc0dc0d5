"""Denoising diffusion over standardized discontinuity rows.

Forward kernel ``q(x_t | x_{t-1}) = N(sqrt(1 - beta_t) x_{t-1}, beta_t I)``,
used through its closed form ``x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps``.
The network predicts ``eps`` from ``(x_t, embed(t))`` and is trained on the
mean squared noise error. Sampling runs the ancestral chain from
``x_T ~ N(0, I)`` with mean

    mu(x_t, t) = (x_t - beta_t / sqrt(1 - abar_t) * eps_hat) / sqrt(alpha_t)

and variance ``beta_t`` (no noise on the final step).

Time embedding: ``t / T`` mapped to ``[sin(2**k * pi * t/T), cos(2**k * pi * t/T)]``
for ``k = 0..7``, i.e. 16 extra input columns.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .core_data import DiscontinuitySet, Source
from .errors import NonFiniteGradient, StepOutOfRange
from .features import Standardizer, batches
from .nn import AdamState, Mlp, adam_step
from .rng import Prng
from .stat_generators import fill_rows_with_rejection

N_FREQUENCIES = 8
EMBED_WIDTH = 2 * N_FREQUENCIES
DATA_WIDTH = 3


class NoiseSchedule:
    """``beta_1 .. beta_T`` with ``alpha_t = 1 - beta_t`` and ``abar_t = prod alpha_s``.

    Arrays are indexed by step, with index 0 unused so that ``betas[t]`` is
    ``beta_t``.
    """

    def __init__(self, betas, strict: bool = True):
        b = np.asarray(betas, dtype=float).ravel()
        if b.size < 1:
            raise ValueError("schedule needs at least one step")
        if strict:
            if not np.all((b > 0.0) & (b < 1.0)):
                raise ValueError("every beta must lie in (0, 1)")
            if np.any(np.diff(b) < 0.0):
                raise ValueError("betas must be non-decreasing")
        self.T = int(b.size)
        self.betas = np.concatenate([[0.0], b])
        self.alphas = 1.0 - self.betas
        self.alpha_bars = np.cumprod(self.alphas)

    @classmethod
    def linear(cls, T: int = 200, beta_start: float = 1e-4, beta_end: float = 0.02):
        return cls(np.linspace(beta_start, beta_end, T))

    def check_step(self, t):
        t = np.asarray(t)
        if np.any(t < 1) or np.any(t > self.T):
            raise StepOutOfRange(f"step must lie in 1..{self.T}")

    def to_dict(self) -> dict:
        return {"T": self.T, "betas": self.betas[1:].tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSchedule":
        return cls(d["betas"])


def time_embedding(t, T: int) -> np.ndarray:
    t = np.asarray(t, dtype=float).reshape(-1, 1)
    phase = np.pi * (t / T) * (2.0 ** np.arange(N_FREQUENCIES))
    return np.concatenate([np.sin(phase), np.cos(phase)], axis=1)


def forward_diffuse(x0, t, noise, schedule: NoiseSchedule) -> np.ndarray:
    """Jump straight to step ``t``: ``sqrt(abar_t) x0 + sqrt(1 - abar_t) noise``.

    ``t`` may be a scalar or one step per row of ``x0``.
    """
    schedule.check_step(t)
    ab = schedule.alpha_bars[np.asarray(t)]
    x0 = np.asarray(x0, dtype=float)
    if ab.ndim == 1 and x0.ndim == 2:
        ab = ab[:, None]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * np.asarray(noise, dtype=float)


def compose_noise(step_noises, t: int, schedule: NoiseSchedule) -> np.ndarray:
    """The single noise draw equivalent to ``t`` successive per-step draws.

    Iterating the one-step kernel with noises ``e_1..e_t`` gives
    ``x_t = sqrt(abar_t) x0 + sum_s sqrt(beta_s) * prod_{r>s} sqrt(alpha_r) * e_s``;
    this returns that sum divided by ``sqrt(1 - abar_t)``.
    """
    schedule.check_step(t)
    acc = 0.0
    for s in range(1, t + 1):
        tail = np.prod(schedule.alphas[s + 1:t + 1])
        acc = acc + np.sqrt(schedule.betas[s] * tail) * np.asarray(step_noises[s - 1], dtype=float)
    return acc / np.sqrt(1.0 - schedule.alpha_bars[t])


@dataclass
class DdpmTrainConfig:
    epochs: int = 4000
    lr: float = 1e-3
    hidden: tuple = (128, 128, 128)
    T: int = 200
    beta_start: float = 1e-4
    beta_end: float = 0.02
    batch_size: int = 512
    log_every: int = 1

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.epochs < 0 or self.T < 1 or self.batch_size < 1 or self.lr <= 0:
            raise ValueError("invalid DDPM configuration")


@dataclass
class DdpmModel:
    network: Mlp
    schedule: NoiseSchedule
    scaler: Standardizer
    seed: int
    config: DdpmTrainConfig = field(default_factory=DdpmTrainConfig)
    losses: list = field(default_factory=list)

    def __post_init__(self):
        if self.network.widths[0] != DATA_WIDTH + EMBED_WIDTH:
            raise ValueError("network input width must be 3 + embedding width")

    def predict_noise(self, x_t, t) -> np.ndarray:
        t = np.broadcast_to(np.asarray(t), (x_t.shape[0],))
        return self.network.forward(np.hstack([x_t, time_embedding(t, self.schedule.T)]))

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["hidden"] = list(cfg["hidden"])
        return {
            "engine": "ddpm",
            "seed": self.seed,
            "config": cfg,
            "schedule": self.schedule.to_dict(),
            "embedding": {"kind": "sinusoidal-t/T", "frequencies": N_FREQUENCIES,
                          "width": EMBED_WIDTH},
            "standardization": self.scaler.to_dict(),
            "network": self.network.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DdpmModel":
        return cls(Mlp.from_dict(d["network"]), NoiseSchedule.from_dict(d["schedule"]),
                   Standardizer.from_dict(d["standardization"]), int(d["seed"]),
                   DdpmTrainConfig(**d["config"]))


def ddpm_loss(model, x0, t=None, eps=None, prng: Prng | None = None) -> float:
    """Mean over rows of ``||eps - eps_hat(x_t, t)||^2``.

    Missing ``t`` (uniform on 1..T) and ``eps`` (standard normal) are drawn
    from ``prng``.
    """
    x0 = np.asarray(x0, dtype=float)
    b = x0.shape[0]
    if b == 0:
        raise ValueError("empty batch")
    if t is None:
        t = 1 + prng.integers(model.schedule.T, b)
    if eps is None:
        eps = prng.normal(x0.shape)
    x_t = forward_diffuse(x0, t, eps, model.schedule)
    err = eps - model.predict_noise(x_t, t)
    return float(np.mean(np.sum(err * err, axis=1)))


def init_ddpm(data: DiscontinuitySet, cfg: DdpmTrainConfig, seed: int) -> DdpmModel:
    net = Mlp.initialise([DATA_WIDTH + EMBED_WIDTH, *cfg.hidden, DATA_WIDTH],
                         Prng(seed).spawn("network"), "relu", "identity")
    schedule = NoiseSchedule.linear(cfg.T, cfg.beta_start, cfg.beta_end)
    return DdpmModel(net, schedule, Standardizer.fit(data), int(seed), cfg)


def train_ddpm(data: DiscontinuitySet, cfg: DdpmTrainConfig | None = None,
               seed: int = 0) -> DdpmModel:
    """Fit the noise predictor with Adam; ``model.losses`` holds the per-step loss."""
    cfg = cfg or DdpmTrainConfig()
    if data.n < 2:
        raise ValueError("DDPM training needs at least 2 records")
    model = init_ddpm(data, cfg, seed)
    x_all = model.scaler.transform(data)
    prng = Prng(seed).spawn("train")
    net = model.network
    opt = AdamState.for_params(net.params, lr=cfg.lr)
    T = model.schedule.T
    for step in range(1, cfg.epochs + 1):
        x0 = x_all[batches(prng, data.n, cfg.batch_size)]
        b = x0.shape[0]
        t = 1 + prng.integers(T, b)
        eps = prng.normal(x0.shape)
        x_t = forward_diffuse(x0, t, eps, model.schedule)
        pred, cache = net.forward_cache(np.hstack([x_t, time_embedding(t, T)]))
        err = pred - eps
        loss = float(np.mean(np.sum(err * err, axis=1)))
        if not np.isfinite(loss):
            raise NonFiniteGradient(f"step {step}: loss is not finite")
        grads, _ = net.backward(cache, 2.0 * err / b)
        new, opt = adam_step(net.params, grads, opt)
        net = net.with_params(new)
        if step % cfg.log_every == 0:
            model.losses.append(loss)
    model.network = net
    return model


def reverse_chain(model, x_T: np.ndarray, prng: Prng) -> np.ndarray:
    """Run the ancestral sampler from ``x_T`` down to ``x_0`` in standardized space."""
    s = model.schedule
    x = x_T
    for t in range(s.T, 0, -1):
        eps_hat = model.predict_noise(x, t)
        x = (x - s.betas[t] / np.sqrt(1.0 - s.alpha_bars[t]) * eps_hat) / np.sqrt(s.alphas[t])
        if t > 1:
            x = x + np.sqrt(s.betas[t]) * prng.normal(x.shape)
    return x


def ddpm_sample(model: DdpmModel, n: int, seed: int | None = None,
                name: str = "ddpm") -> DiscontinuitySet:
    if n < 1:
        raise ValueError("n must be >= 1")
    seed = model.seed if seed is None else seed
    prng = Prng(seed).spawn("sample")

    def draw(k):
        z = reverse_chain(model, prng.normal((k, DATA_WIDTH)), prng)
        return model.scaler.inverse(z)

    rows = fill_rows_with_rejection(draw, n)
    return DiscontinuitySet(name, rows, source=Source.generated("ddpm", seed))
