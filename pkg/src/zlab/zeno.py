"""Zeno generator, the three product formulae and the time-dependent projection variant."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BranchCut, RankChange, TauOutOfRange
from .operators import (
    HermitianOperator,
    OrthogonalProjection,
    apply_function,
    as_state,
    clamped_eigenvalues,
    operator_norm,
    psd_sqrt,
    unitary_propagator,
)
from .sweep import SweepResult


class ZenoVariant(enum.Enum):
    SYMMETRIC = "symmetric"  # (P U P)^n
    RIGHT = "right"  # (U P)^n
    LEFT = "left"  # (P U)^n

    @classmethod
    def parse(cls, name: str) -> "ZenoVariant":
        return cls(name.lower())


class ProjectionFamily:
    """A norm-continuous path ``tau -> P(tau)`` of projections with ``P(0) = P``.

    ``func`` is called for ``0 < tau <= tau_max``; ``at(0)`` always returns the
    base projection itself. Rank is checked on a geometric grid at construction.
    """

    def __init__(
        self,
        base: OrthogonalProjection,
        func: Callable[[float], OrthogonalProjection] | None = None,
        tau_max: float = math.inf,
        n_check: int = 16,
    ):
        if tau_max <= 0:
            raise ValueError("tau_max must be positive")
        self.base = base
        self.func = func
        self.tau_max = tau_max
        self.constant = func is None
        if not self.constant:
            top = tau_max if math.isfinite(tau_max) else 1.0
            for k in range(n_check):
                p = func(top * 2.0**-k)
                if p.rank != base.rank:
                    raise RankChange(
                        f"rank {p.rank} at tau={top * 2.0**-k:g} differs from base rank {base.rank}"
                    )

    @classmethod
    def constant_family(cls, p: OrthogonalProjection) -> "ProjectionFamily":
        return cls(p)

    def at(self, tau: float) -> OrthogonalProjection:
        if tau < 0 or tau > self.tau_max:
            raise TauOutOfRange(f"tau={tau!r} outside [0, {self.tau_max!r}]")
        if tau == 0 or self.constant:
            return self.base
        return self.func(tau)

    def continuity_profile(self, taus: Sequence[float]) -> list[float]:
        """``||P(tau) - P(0)||`` on the given grid."""
        p0 = self.base.matrix
        return [operator_norm(self.at(tau).matrix - p0) for tau in taus]

    def check_continuity(self, taus: Sequence[float], slack: float = 1e-12) -> bool:
        """Monotone-envelope test: distance to ``P(0)`` never grows as tau shrinks."""
        order = sorted(taus, reverse=True)
        prof = self.continuity_profile(order)
        running = math.inf
        for d in prof:
            if d > running + slack:
                return False
            running = min(running, d)
        return True


def _as_family(p) -> ProjectionFamily:
    if isinstance(p, ProjectionFamily):
        return p
    if not isinstance(p, OrthogonalProjection):
        p = OrthogonalProjection(p)
    return ProjectionFamily.constant_family(p)


def zeno_generator(h: HermitianOperator, p: OrthogonalProjection) -> HermitianOperator:
    """``(H^{1/2} P)^* (H^{1/2} P)``."""
    root = psd_sqrt(h).matrix @ p.matrix
    return HermitianOperator(root.conj().T @ root)


def zeno_step(
    h: HermitianOperator,
    p: OrthogonalProjection,
    t: float,
    n: int,
    eps: int = 1,
    variant: ZenoVariant = ZenoVariant.SYMMETRIC,
) -> np.ndarray:
    """A single factor of the product formula, built with ``U = exp(-i eps t H / n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = unitary_propagator(h, eps * t / n)
    pm = p.matrix
    if variant is ZenoVariant.SYMMETRIC:
        return pm @ u @ pm
    if variant is ZenoVariant.RIGHT:
        return u @ pm
    return pm @ u


def zeno_evolve(
    h: HermitianOperator,
    family,
    t: float,
    n: int,
    eps: int,
    variant: ZenoVariant,
    f,
) -> np.ndarray:
    """n-th power of the step built with ``P(1/n)``, applied to ``f`` by repeated matvecs."""
    fam = _as_family(family)
    step = zeno_step(h, fam.at(1.0 / n), t, n, eps, variant)
    psi = as_state(f).copy()
    for _ in range(n):
        psi = step @ psi
    return psi


def zeno_limit(h: HermitianOperator, p: OrthogonalProjection, t: float, eps: int, f) -> np.ndarray:
    """``exp(-i eps t H_P) P f``."""
    hp = zeno_generator(h, p)
    return unitary_propagator(hp, eps * t) @ (p.matrix @ as_state(f))


@dataclass
class ZenoSweep:
    variant: ZenoVariant
    t: float
    epsilon: int
    rows: list[tuple[int, float]] = field(default_factory=list)

    @property
    def ns(self) -> list[int]:
        return [r[0] for r in self.rows]

    @property
    def errors(self) -> list[float]:
        return [r[1] for r in self.rows]

    def error_at(self, n: int) -> float:
        return dict(self.rows)[n]


def zeno_error_sweep(
    h: HermitianOperator,
    family,
    t: float,
    eps: int,
    variant: ZenoVariant,
    f,
    ns: Sequence[int],
) -> ZenoSweep:
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("ns must be strictly increasing")
    fam = _as_family(family)
    target = zeno_limit(h, fam.at(0), t, eps, f)
    sweep = ZenoSweep(variant, t, eps)
    for n in ns:
        out = zeno_evolve(h, fam, t, n, eps, variant, f)
        sweep.rows.append((int(n), float(np.linalg.norm(out - target))))
    return sweep


def hypothesis_symbol_root(lam: np.ndarray, t: float, tau: float) -> np.ndarray:
    """Principal square root of ``(1 - exp(-i t tau lam)) / tau``."""
    z = -np.expm1(-1j * t * tau * lam) / tau
    on_cut = (np.abs(z.imag) <= 1e-14) & (z.real < -1e-14)
    if np.any(on_cut):
        raise BranchCut("symbol lies on the negative real axis")
    return np.sqrt(z)


def hypothesis_check(
    h: HermitianOperator,
    family,
    t: float,
    v,
    taus: Sequence[float],
) -> SweepResult:
    """Distance between ``[(I - e^{-it tau H})/tau]^{1/2} P(tau) v`` and ``e^{i pi/4} (tH)^{1/2} P v``.

    Negative ``t`` is accepted and evaluated with the principal branch of
    ``(t lam)^{1/2}``; only ``t > 0`` carries the convergence claim.
    """
    fam = _as_family(family)
    v = as_state(v)
    lam = clamped_eigenvalues(h)
    rhs_root = np.exp(1j * np.pi / 4) * np.sqrt((t * lam).astype(complex))
    target = apply_function(h, lambda _: rhs_root) @ (fam.at(0).matrix @ v)
    res = SweepResult(("tau", "error"))
    for tau in taus:
        if tau <= 0:
            raise TauOutOfRange("tau must be positive")
        root = hypothesis_symbol_root(lam, t, tau)
        lhs = apply_function(h, lambda _: root) @ (fam.at(tau).matrix @ v)
        res.add(float(tau), float(np.linalg.norm(lhs - target)))
    return res


def zeno_leakage(h: HermitianOperator, p: OrthogonalProjection, t: float, n: int, f) -> tuple[np.ndarray, float]:
    """Symmetric-ordering evolution plus ``||(I - P) psi||`` just before the last projection."""
    u = unitary_propagator(h, t / n)
    pm = p.matrix
    psi = pm @ as_state(f)
    pre = psi
    for _ in range(n):
        pre = u @ psi
        psi = pm @ pre
    return psi, float(np.linalg.norm(pre - psi))
