"""Tabular GAN over (dip direction, dip angle, log trace length).

The discriminator ascends the empirical adversarial value

    V(D, G) = mean(log D(x)) + mean(log(1 - D(G(z))))

with the generator frozen; the generator then takes one step. By default the
generator maximises ``log D(G(z))`` (non-saturating form); set
``GanTrainConfig.saturating`` to minimise ``log(1 - D(G(z)))`` literally.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit, log_expit

from .core_data import DiscontinuitySet, Source
from .errors import DivergenceDetected, NonFiniteGradient, ProbabilityOutOfRange
from .features import Standardizer, batches
from .nn import AdamState, Mlp, adam_step
from .rng import Prng
from .stat_generators import fill_rows_with_rejection


def gan_value(d_real, d_fake) -> float:
    """Empirical ``V(D, G)`` from discriminator probabilities in (0, 1)."""
    d_real = np.asarray(d_real, dtype=float)
    d_fake = np.asarray(d_fake, dtype=float)
    for arr in (d_real, d_fake):
        if arr.size == 0 or not np.all((arr > 0.0) & (arr < 1.0)):
            raise ProbabilityOutOfRange("discriminator outputs must lie strictly inside (0, 1)")
    return float(np.mean(np.log(d_real)) + np.mean(np.log1p(-d_fake)))


@dataclass
class GanTrainConfig:
    epochs: int = 3000
    d_steps: int = 1
    lr_d: float = 1e-3
    lr_g: float = 1e-3
    beta1: float = 0.5
    z_dim: int = 8
    hidden: tuple = (32, 32)
    batch_size: int = 512
    log_every: int = 50
    saturating: bool = False
    divergence_limit: float = 50.0

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.epochs < 0 or min(self.d_steps, self.z_dim, self.batch_size, self.log_every) < 1:
            raise ValueError("GAN configuration values must be positive")
        if self.lr_d <= 0 or self.lr_g <= 0:
            raise ValueError("learning rates must be positive")


@dataclass
class GanModel:
    generator: Mlp
    discriminator: Mlp
    z_dim: int
    scaler: Standardizer
    seed: int
    config: GanTrainConfig = field(default_factory=GanTrainConfig)
    log: list = field(default_factory=list)

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["hidden"] = list(cfg["hidden"])
        return {
            "engine": "gan",
            "seed": self.seed,
            "z_dim": self.z_dim,
            "config": cfg,
            "standardization": self.scaler.to_dict(),
            "generator": self.generator.to_dict(),
            "discriminator": self.discriminator.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GanModel":
        return cls(Mlp.from_dict(d["generator"]), Mlp.from_dict(d["discriminator"]),
                   int(d["z_dim"]), Standardizer.from_dict(d["standardization"]),
                   int(d["seed"]), GanTrainConfig(**d["config"]))


def init_gan(data: DiscontinuitySet, cfg: GanTrainConfig, seed: int) -> GanModel:
    root = Prng(seed)
    g = Mlp.initialise([cfg.z_dim, *cfg.hidden, 3], root.spawn("generator"), "relu", "identity")
    d = Mlp.initialise([3, *cfg.hidden, 1], root.spawn("discriminator"), "relu", "sigmoid")
    return GanModel(g, d, cfg.z_dim, Standardizer.fit(data), int(seed), cfg)


def train_gan(data: DiscontinuitySet, cfg: GanTrainConfig | None = None, seed: int = 0) -> GanModel:
    """Alternate discriminator ascent on V with generator updates.

    The returned model carries a training log: every ``log_every`` epochs
    (and at the last one) the value V and the mean discriminator output on
    the real and generated batches.
    """
    cfg = cfg or GanTrainConfig()
    if data.n < 2:
        raise ValueError("GAN training needs at least 2 records")
    model = init_gan(data, cfg, seed)
    x_all = model.scaler.transform(data)
    prng = Prng(seed).spawn("train")
    G, D = model.generator, model.discriminator
    opt_g = AdamState.for_params(G.params, lr=cfg.lr_g, beta1=cfg.beta1)
    opt_d = AdamState.for_params(D.params, lr=cfg.lr_d, beta1=cfg.beta1)

    for epoch in range(1, cfg.epochs + 1):
        for _ in range(cfg.d_steps):
            real = x_all[batches(prng, data.n, cfg.batch_size)]
            m = real.shape[0]
            fake = G.forward(prng.normal((m, cfg.z_dim)))
            lr_out, cache_r = D.forward_cache(real)
            lf_out, cache_f = D.forward_cache(fake)
            l_real, l_fake = cache_r[1][-1], cache_f[1][-1]
            value = float(np.mean(log_expit(l_real)) + np.mean(log_expit(-l_fake)))
            # descend -V; gradients taken w.r.t. the logits
            g_r, _ = D.backward(cache_r, -(1.0 - lr_out) / m, wrt_logits=True)
            g_f, _ = D.backward(cache_f, lf_out / m, wrt_logits=True)
            new, opt_d = adam_step(D.params, [a + b for a, b in zip(g_r, g_f)], opt_d)
            D = D.with_params(new)
        if not np.isfinite(value) or abs(value) > cfg.divergence_limit:
            raise DivergenceDetected(f"epoch {epoch}: V = {value}")

        z = prng.normal((m, cfg.z_dim))
        fake, cache_g = G.forward_cache(z)
        d_out, cache_d = D.forward_cache(fake)
        if cfg.saturating:
            upstream = -d_out / m  # d/dlogit of mean log(1 - D)
        else:
            upstream = -(1.0 - d_out) / m  # d/dlogit of -mean log D
        _, g_in = D.backward(cache_d, upstream, wrt_logits=True)
        grads, _ = G.backward(cache_g, g_in)
        new, opt_g = adam_step(G.params, grads, opt_g)
        G = G.with_params(new)

        if epoch % cfg.log_every == 0 or epoch == cfg.epochs:
            model.log.append({
                "epoch": epoch,
                "value": value,
                "d_real": float(np.mean(lr_out)),
                "d_fake": float(np.mean(lf_out)),
            })
    for p in G.params + D.params:
        if not np.isfinite(p).all():
            raise NonFiniteGradient("training produced non-finite weights")
    model.generator, model.discriminator = G, D
    return model


def gan_generate(model: GanModel, n: int, seed: int | None = None,
                 name: str = "gan") -> DiscontinuitySet:
    """Push standard-normal latents through the generator and map back to natural units."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seed = model.seed if seed is None else seed
    prng = Prng(seed).spawn("generate")

    def draw(k):
        return model.scaler.inverse(model.generator.forward(prng.normal((k, model.z_dim))))

    rows = fill_rows_with_rejection(draw, n)
    return DiscontinuitySet(name, rows, source=Source.generated("gan", seed))


def discriminator_prob(model: GanModel, dset: DiscontinuitySet) -> np.ndarray:
    return expit(model.discriminator.logits(model.scaler.transform(dset)))[:, 0]
