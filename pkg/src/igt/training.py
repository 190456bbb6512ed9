"""Smoothness objective, projection on the constraint set and layer-wise training."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .budgets import FEAS_TOL, ConstraintBudgets, constraint_budgets
from .fourier import SpectralFourier
from .graph import as_batch
from .transform import AveragingOp, FilterBank, IGTModel, energy_profile, layer_forward

log = logging.getLogger(__name__)

PAPER_MILESTONES = (500, 1000, 1500)


@dataclass
class TrainConfig:
    filters_per_layer: list[int] = field(default_factory=lambda: [16])
    batch_size: int = 64
    lr0: float = 1.0
    milestones: list[int] | None = None  # None: derived from the run length
    lr_decay: float = 0.1
    epochs: int = 5
    seed: int = 0
    mod_eps: float = 1e-8

    def __post_init__(self):
        if not self.lr0 > 0:
            raise ValueError("lr0 must be positive")
        if not 0 < self.lr_decay < 1:
            raise ValueError("lr_decay must lie in (0, 1)")
        if self.milestones is not None and list(self.milestones) != sorted(self.milestones):
            raise ValueError("milestones must be ascending")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")
        if any(k < 1 for k in self.filters_per_layer):
            raise ValueError("every layer needs at least one filter")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown TrainConfig keys: {sorted(unknown)}")
        return cls(**known)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def schedule(self, total_iters: int) -> list[int]:
        """Iterations at which the step size is multiplied by ``lr_decay``.

        Long runs keep the fixed image-classification drops; shorter runs
        drop at one and two thirds of their length.
        """
        if self.milestones is not None:
            return list(self.milestones)
        if total_iters >= PAPER_MILESTONES[-1]:
            return list(PAPER_MILESTONES)
        return sorted({max(1, total_iters // 3), max(1, 2 * total_iters // 3)})

    def lr_at(self, t: int, milestones) -> float:
        drops = sum(1 for m in milestones if t >= m)
        return self.lr0 * self.lr_decay ** drops


def budgets(bank: FilterBank, avg: AveragingOp, fourier: SpectralFourier) -> ConstraintBudgets:
    return constraint_budgets(bank.spectra, avg.spectral_magnitudes, fourier.conj_of)


def project_spectra(spectra, avg: AveragingOp, fourier: SpectralFourier) -> np.ndarray:
    b = constraint_budgets(spectra, avg.spectral_magnitudes, fourier.conj_of)
    return spectra * b.scale


def project_onto_constraint(bank: FilterBank, avg: AveragingOp,
                            fourier: SpectralFourier) -> FilterBank:
    """Radial projection of every frequency group onto its energy ball."""
    return FilterBank(project_spectra(bank.spectra, avg, fourier), bank.layer_index,
                      bank.tightness_eps)


def _rows(batch, n):
    x = as_batch(batch, n)
    return x.reshape(-1, n)


def _loss_terms(spectra, avg, fourier, Z, zhat=None):
    zhat = fourier.analyze(Z) if zhat is None else zhat
    Y = (zhat[:, None, :] * spectra) @ fourier.columns.T
    R = np.abs(Y)
    first = float(np.sum(avg.complement_energy(Z)))
    second = float(np.sum(avg.energy(R)))
    return first - second, Y, R


def empirical_loss(bank: FilterBank, avg: AveragingOp, fourier: SpectralFourier, batch) -> float:
    """Sum over samples and channels of ``|(I-A)z|^2 - |A|Wz||^2``."""
    Z = _rows(batch, fourier.n)
    return _loss_terms(bank.spectra, avg, fourier, Z)[0]


def loss_and_gradient(spectra, avg: AveragingOp, fourier: SpectralFourier, batch,
                      mod_eps: float = 1e-8):
    """Loss and its gradient w.r.t. the spectra.

    The gradient is returned as a complex array whose real and imaginary parts
    are the partial derivatives along the real and imaginary parts of each
    coefficient. Moduli below ``mod_eps * |z|`` contribute no gradient.
    """
    Z = _rows(batch, fourier.n)
    zhat = fourier.analyze(Z)
    loss, Y, R = _loss_terms(spectra, avg, fourier, Z, zhat)
    S = -2.0 * avg.gram(R)
    cut = mod_eps * np.linalg.norm(Z, axis=1)[:, None, None]
    live = R > cut
    phase = np.divide(Y, np.where(live, R, 1.0)) * live
    H = fourier.analyze(S * phase)
    grad = np.einsum("pi,pki->ki", zhat.conj(), H)
    return loss, grad


def loss_gradient(bank: FilterBank, avg: AveragingOp, fourier: SpectralFourier, batch,
                  mod_eps: float = 1e-8) -> np.ndarray:
    return loss_and_gradient(bank.spectra, avg, fourier, batch, mod_eps)[1]


def _rng(seed: int, layer: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, layer])))


def train_layer(inputs, fourier: SpectralFourier, avg: AveragingOp, K: int,
                cfg: TrainConfig, layer_index: int = 1, history: list | None = None) -> FilterBank:
    """Projected stochastic gradient descent on one layer's filter bank."""
    x = as_batch(inputs, fourier.n)
    N, n = x.shape[0], fourier.n
    if N == 0:
        raise ValueError("cannot train on an empty dataset")
    if K < 1:
        raise ValueError("K must be at least 1")
    rng = _rng(cfg.seed, layer_index)
    noise = rng.standard_normal((K, n)) + 1j * rng.standard_normal((K, n))
    spectra = project_spectra(noise * math.sqrt(0.5 / n), avg, fourier)

    per_epoch = -(-N // cfg.batch_size)
    total = per_epoch * cfg.epochs
    milestones = cfg.schedule(total)
    t = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(N)
        for s in range(0, N, cfg.batch_size):
            lr = cfg.lr_at(t, milestones)
            loss, grad = loss_and_gradient(spectra, avg, fourier, x[order[s:s + cfg.batch_size]],
                                           cfg.mod_eps)
            spectra = project_spectra(spectra - lr * grad, avg, fourier)
            if history is not None:
                b = constraint_budgets(spectra, avg.spectral_magnitudes, fourier.conj_of)
                history.append({"layer": layer_index, "iteration": t, "epoch": epoch,
                                "loss": loss, "lr": lr, "feasibility": b.violation})
            t += 1
        log.debug("layer %d epoch %d done (%d iterations)", layer_index, epoch, t)
    return FilterBank(spectra, layer_index).measured(fourier, avg)


def greedy_train(data, fourier: SpectralFourier, avg: AveragingOp, cfg: TrainConfig,
                 history: list | None = None) -> IGTModel:
    """Train each layer on the previous layer's modulus outputs."""
    if not cfg.filters_per_layer:
        raise ValueError("filters_per_layer must be non-empty")
    x = as_batch(data, fourier.n)
    banks = []
    inputs = x
    for layer, K in enumerate(cfg.filters_per_layer, start=1):
        bank = train_layer(inputs, fourier, avg, K, cfg, layer, history)
        banks.append(bank)
        model = IGTModel(fourier, avg, tuple(banks))
        if history is not None:
            prof = energy_profile(model, x)
            history.append({"layer": layer, "event": "energy",
                            "fractions": list(prof.fractions), "residual": prof.residual,
                            "tightness_eps": bank.tightness_eps})
        if layer < len(cfg.filters_per_layer):
            inputs = layer_forward(bank, fourier, inputs)
    return IGTModel(fourier, avg, tuple(banks), {"config": json.loads(cfg.to_json())})


def feasible(bank: FilterBank, avg: AveragingOp, fourier: SpectralFourier,
             tol: float = FEAS_TOL) -> bool:
    b = budgets(bank, avg, fourier)
    return bool(np.all(b.gamma <= b.lam + tol))
