"""Resolvent-side machinery behind the Zeno limit.

Everything here works with the operators

    F(it; tau) = P(tau) exp(-i t tau H) P(tau),    S(it; tau) = (I - F(it; tau)) / tau,

their resolvents ``(I + S)^{-1}``, the split ``K(kappa) = (I - exp(-i kappa H)) / kappa
= G(kappa) + i H(kappa)`` and the factorization of resolvent differences used
for equicontinuity estimates.  Quantities that should agree are computed along
two independent routes wherever possible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DualPathMismatch, NotContraction, SignMismatch, SingularBlock
from .operators import (
    HermitianOperator,
    OrthogonalProjection,
    apply_function,
    as_state,
    clamped_eigenvalues,
    expm_general,
    operator_norm,
    psd_sqrt,
    unitary_propagator,
)
from .sweep import SweepResult
from .zeno import ProjectionFamily, _as_family, zeno_generator

BLOCK_COND_MAX = 1e14
DUAL_PATH_TOL = 1e-9


# --------------------------------------------------------------------------
# K(kappa) = G(kappa) + i H(kappa) and its band decomposition
# --------------------------------------------------------------------------

def band_mask(lam: np.ndarray, kappa: float) -> np.ndarray:
    """True where ``lam`` lies in some ``[2m pi/kappa, (2m+1) pi/kappa)``, m >= 0."""
    x = np.round(np.asarray(lam) * kappa / np.pi, 12)
    return (x >= 0) & (np.floor(x) % 2 == 0)


def g_symbol(lam, kappa):
    # 2 sin^2(x/2) avoids the cancellation in 1 - cos x
    return 2.0 * np.sin(0.5 * kappa * lam) ** 2 / kappa


def h_symbol(lam, kappa):
    return np.sin(kappa * lam) / kappa


@dataclass
class KappaSplit:
    kappa: float
    G: HermitianOperator
    Hk: HermitianOperator
    Eplus: OrthogonalProjection
    Eminus: OrthogonalProjection
    Hplus: HermitianOperator
    Hminus: HermitianOperator
    abs_K: HermitianOperator

    @property
    def K(self) -> np.ndarray:
        return self.G.matrix + 1j * self.Hk.matrix

    def residuals(self, h: HermitianOperator) -> dict[str, float]:
        """Invariant residuals, each against an independently built counterpart."""
        n = h.dim
        ident = np.eye(n)
        k_direct = (ident - unitary_propagator(h, self.kappa)) / self.kappa
        g_direct = 0.5 * (k_direct + k_direct.conj().T)
        h_direct = (k_direct - k_direct.conj().T) / 2j
        g, hk = self.G.matrix, self.Hk.matrix
        abs_k_direct = psd_sqrt(HermitianOperator(g @ g + hk @ hk)).matrix
        abs_i_k = psd_sqrt(HermitianOperator((ident + self.K).conj().T @ (ident + self.K))).matrix
        abs_i_k_closed = apply_function(
            h, lambda lam: np.sqrt(1.0 + (1.0 + self.kappa) * (np.sin(0.5 * self.kappa * lam) / (0.5 * self.kappa)) ** 2)
        )
        abs_hk = psd_sqrt(HermitianOperator(hk @ hk)).matrix
        hp, hm = self.Hplus.matrix, self.Hminus.matrix
        return {
            "G": operator_norm(g - g_direct),
            "Hk": operator_norm(hk - h_direct),
            "E_sum": operator_norm(self.Eplus.matrix + self.Eminus.matrix - ident),
            "Hplus": operator_norm(hp - hk @ self.Eplus.matrix),
            "Hminus": operator_norm(hm + hk @ self.Eminus.matrix),
            "Hplus_psd": max(0.0, -float(np.linalg.eigvalsh(hp)[0])),
            "Hminus_psd": max(0.0, -float(np.linalg.eigvalsh(hm)[0])),
            "abs_K": operator_norm(self.abs_K.matrix - abs_k_direct),
            "abs_I_plus_K": operator_norm(abs_i_k - abs_i_k_closed),
            "H_diff": operator_norm(hk - (hp - hm)),
            "H_abs": operator_norm(abs_hk - (hp + hm)),
        }


def kappa_split(h: HermitianOperator, kappa: float) -> KappaSplit:
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    dec = h.spectrum
    lam = dec.eigenvalues
    plus = band_mask(lam, kappa)
    s = h_symbol(lam, kappa)

    def herm(vals):
        return HermitianOperator(apply_function(dec, lambda _: vals))

    def proj(mask):
        return OrthogonalProjection(apply_function(dec, lambda _: mask.astype(float)))

    return KappaSplit(
        kappa=kappa,
        G=herm(g_symbol(lam, kappa)),
        Hk=herm(s),
        Eplus=proj(plus),
        Eminus=proj(~plus),
        Hplus=herm(np.where(plus, s, 0.0)),
        Hminus=herm(np.where(plus, 0.0, -s)),
        abs_K=herm(np.abs(np.sin(0.5 * kappa * lam)) / (0.5 * kappa)),
    )


def scaled_K(h: HermitianOperator, t: float, tau: float) -> np.ndarray:
    """``t K(t tau) = t G(t tau) + i t H(t tau)`` assembled from the kappa split at ``|t| tau``."""
    if t == 0:
        return np.zeros((h.dim, h.dim), dtype=complex)
    ks = kappa_split(h, abs(t) * tau)
    return abs(t) * ks.G.matrix + 1j * math.copysign(abs(t), t) * ks.Hk.matrix


# --------------------------------------------------------------------------
# F, S and the resolvent
# --------------------------------------------------------------------------

def F_op(h: HermitianOperator, family, t: float, tau: float) -> np.ndarray:
    if not tau > 0:
        raise ValueError("tau must be positive")
    p = _as_family(family).at(tau).matrix
    return p @ unitary_propagator(h, t * tau) @ p


def S_op(h: HermitianOperator, family, t: float, tau: float) -> np.ndarray:
    return (np.eye(h.dim) - F_op(h, family, t, tau)) / tau


def s_block_residual(h: HermitianOperator, family, t: float, tau: float) -> float:
    """Residual of ``I + S = (1 + 1/tau)(I - P) + P (I + t K(t tau)) P``."""
    p = _as_family(family).at(tau).matrix
    ident = np.eye(h.dim)
    block = (1.0 + 1.0 / tau) * (ident - p) + p @ (ident + scaled_K(h, t, tau)) @ p
    return operator_norm(ident + S_op(h, family, t, tau) - block)


def accretivity_min(s: np.ndarray) -> float:
    """``min Re<f, S f> / ||f||^2``, i.e. the bottom of the Hermitian part of S."""
    return float(np.linalg.eigvalsh(0.5 * (s + s.conj().T))[0])


def compressed_inverse(p: OrthogonalProjection, m: np.ndarray) -> np.ndarray:
    """Inverse of ``P m P`` on ran P, extended by zero to the whole space."""
    q = p.range_basis
    n = p.dim
    if q.shape[1] == 0:
        return np.zeros((n, n), dtype=complex)
    block = q.conj().T @ m @ q
    if np.linalg.cond(block) > BLOCK_COND_MAX:
        raise SingularBlock("compressed block is numerically singular")
    return q @ np.linalg.solve(block, q.conj().T)


def resolvent_paths(h: HermitianOperator, family, t: float, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """``(I + S(it; tau))^{-1}`` by a direct solve and by the block formula."""
    fam = _as_family(family)
    p = fam.at(tau)
    ident = np.eye(h.dim)
    direct = np.linalg.solve(ident + S_op(h, fam, t, tau), ident.astype(complex))
    inner = compressed_inverse(p, ident + scaled_K(h, t, tau))
    block = (ident - p.matrix) / (1.0 + 1.0 / tau) + inner
    return direct, block


def resolvent_S(h: HermitianOperator, family, t: float, tau: float) -> np.ndarray:
    direct, block = resolvent_paths(h, family, t, tau)
    if operator_norm(direct - block) > DUAL_PATH_TOL * max(1.0, operator_norm(direct)):
        raise DualPathMismatch("direct and block resolvents disagree")
    return direct


def u_tau(h: HermitianOperator, family, t: float, tau: float, f) -> np.ndarray:
    f = as_state(f)
    return np.linalg.solve(np.eye(h.dim) + S_op(h, family, t, tau), f)


def chernoff_target(h: HermitianOperator, p: OrthogonalProjection, t: float, f) -> np.ndarray:
    """``(I + i t H_P)^{-1} P f``."""
    hp = zeno_generator(h, p)
    return apply_function(hp, lambda lam: 1.0 / (1.0 + 1j * t * lam)) @ (p.matrix @ as_state(f))


def chernoff_error(h: HermitianOperator, family, t: float, tau: float, f) -> float:
    fam = _as_family(family)
    target = chernoff_target(h, fam.at(0), t, f)
    return float(np.linalg.norm(u_tau(h, fam, t, tau, f) - target))


def inner_identity_check(h: HermitianOperator, family, t: float, tau: float, f) -> dict[str, float]:
    """Absolute residuals of the inner-product identities satisfied by ``u_tau(t)``.

    Keys: ``complement_re/_im`` for ``<(I-P)u, f> = (1 + 1/tau)||(I-P)u||^2``,
    ``range_re/_im`` for the expansion of ``<P u, f>``, and ``adjoint_re/_im`` for
    the same expansion of ``<u, P f>``.
    """
    fam = _as_family(family)
    f = as_state(f)
    p = fam.at(tau).matrix
    u = u_tau(h, fam, t, tau, f)
    pu = p @ u
    qu = u - pu

    lhs_c = np.vdot(qu, f)
    rhs_c = (1.0 + 1.0 / tau) * np.vdot(qu, qu).real

    if t == 0:
        g_term = plus_term = minus_term = 0.0
    else:
        kappa = abs(t) * tau
        lam = h.spectrum.eigenvalues
        mask = band_mask(lam, kappa)
        sym = h_symbol(lam, kappa)

        def sq(vals):
            w = apply_function(h, lambda _: np.sqrt(np.maximum(abs(t) * vals, 0.0))) @ pu
            return float(np.vdot(w, w).real)

        g_term = sq(g_symbol(lam, kappa))
        plus_term = sq(np.where(mask, sym, 0.0))
        minus_term = sq(np.where(mask, 0.0, -sym))
        if t < 0:
            # sin(t tau H) = -sin(|t| tau H): the bands swap roles
            plus_term, minus_term = minus_term, plus_term

    rhs_re = float(np.vdot(pu, pu).real) + g_term
    rhs_im = plus_term - minus_term
    lhs_r = np.vdot(pu, f)
    lhs_s = np.vdot(u, p @ f)
    return {
        "complement_re": abs(lhs_c.real - rhs_c),
        "complement_im": abs(lhs_c.imag),
        "range_re": abs(lhs_r.real - rhs_re),
        "range_im": abs(lhs_r.imag - rhs_im),
        "adjoint_re": abs(lhs_s.real - rhs_re),
        "adjoint_im": abs(lhs_s.imag - rhs_im),
    }


def semigroup_compare(h: HermitianOperator, family, t: float, tau: float, theta: float, f) -> float:
    """``||exp(-theta S(it; tau)) f - exp(-i theta t H_P) P f||``."""
    fam = _as_family(family)
    f = as_state(f)
    p = fam.at(0)
    semi = expm_general(-theta * S_op(h, fam, t, tau)) @ f
    target = unitary_propagator(zeno_generator(h, p), theta * t) @ (p.matrix @ f)
    return float(np.linalg.norm(semi - target))


def sqrt_n_bound_check(fm: np.ndarray, g, n: int) -> tuple[float, float]:
    """Both sides of ``||F^n g - exp(-n(I - F)) g|| <= sqrt(n) ||(I - F) g||``."""
    fm = np.asarray(fm, dtype=complex)
    if operator_norm(fm) > 1.0 + 1e-12:
        raise NotContraction("matrix is not a contraction")
    g = as_state(g)
    ident = np.eye(fm.shape[0])
    power = g.copy()
    for _ in range(n):
        power = fm @ power
    semi = expm_general(-n * (ident - fm)) @ g
    lhs = float(np.linalg.norm(power - semi))
    rhs = math.sqrt(n) * float(np.linalg.norm(g - fm @ g))
    return lhs, rhs


def diag_trick_check(h: HermitianOperator, family, t: float, f, ns: Sequence[int]) -> SweepResult:
    """``||(I + n^{-1/2} S(it; 1/n))^{-1} f - P f||`` for each n."""
    fam = _as_family(family)
    f = as_state(f)
    pf = fam.at(0).matrix @ f
    ident = np.eye(h.dim)
    res = SweepResult(("n", "error"))
    for n in ns:
        s = S_op(h, fam, t, 1.0 / n)
        g = np.linalg.solve(ident + s / math.sqrt(n), f)
        res.add(int(n), float(np.linalg.norm(g - pf)))
    return res


def split_root_sweep(h: HermitianOperator, u, kappas: Sequence[float]) -> SweepResult:
    """Convergence of the square roots of G, H^+, H^- and |H| as kappa shrinks.

    Columns: ``||G^{1/2} u||``, ``||H+^{1/2} u - H^{1/2} u||``, ``||H-^{1/2} u||``,
    ``||H(kappa)|^{1/2} u - H^{1/2} u||``.
    """
    u = as_state(u)
    lam = clamped_eigenvalues(h)
    root_h = np.sqrt(lam)
    res = SweepResult(("kappa", "g_root", "plus_root_gap", "minus_root", "abs_root_gap"))
    for kappa in kappas:
        mask = band_mask(lam, kappa)
        s = h_symbol(lam, kappa)
        cols = (
            np.sqrt(g_symbol(lam, kappa)),
            np.sqrt(np.where(mask, np.maximum(s, 0.0), 0.0)) - root_h,
            np.sqrt(np.where(mask, 0.0, np.maximum(-s, 0.0))),
            np.sqrt(np.abs(s)) - root_h,
        )
        norms = [float(np.linalg.norm(apply_function(h, lambda _: c) @ u)) for c in cols]
        res.add(float(kappa), *norms)
    return res


# --------------------------------------------------------------------------
# Factorization of resolvent differences
# --------------------------------------------------------------------------

def phi_symbol(t: float, s: float, tau: float, lam):
    """Scalar symbol of ``(s K(s tau) - t K(t tau)) (I + |s| H_tau)^{-1}``, in product form."""
    if not t * s > 0:
        raise SignMismatch("t and s must be nonzero with the same sign")
    lam = np.asarray(lam, dtype=float)
    half_diff = 0.5 * (t - s) * tau * lam
    half_sum = 0.5 * (t + s) * tau * lam
    den = 1.0 + abs(s) * lam / (1.0 + tau * lam)
    return -(2.0 / tau) * np.sin(half_diff) * (np.sin(half_sum) + 1j * np.cos(half_sum)) / den


def phi_modulus(t: float, s: float, tau: float, lam):
    lam = np.asarray(lam, dtype=float)
    return np.abs((2.0 / tau) * np.sin(0.5 * (t - s) * tau * lam)) / (1.0 + abs(s) * lam / (1.0 + tau * lam))


@dataclass
class FactorSplit:
    t: float
    s: float
    tau: float
    T1: np.ndarray
    T2: np.ndarray
    T3: np.ndarray
    D: np.ndarray
    Htau: HermitianOperator
    residuals: dict[str, float] = field(default_factory=dict)


def factor_split(h: HermitianOperator, family, t: float, s: float, tau: float) -> FactorSplit:
    """Split ``(I+S(it))^{-1} - (I+S(is))^{-1}`` as ``T1 T2 T3`` and record consistency residuals."""
    if not t * s > 0:
        raise SignMismatch("t and s must be nonzero with the same sign")
    fam = _as_family(family)
    p = fam.at(tau)
    ident = np.eye(h.dim)
    lam = h.spectrum.eigenvalues
    htau = HermitianOperator(apply_function(h, lambda _: lam / (1.0 + tau * lam)))
    tk = scaled_K(h, t, tau)
    sk = scaled_K(h, s, tau)
    lift = ident + abs(s) * htau.matrix

    t1 = compressed_inverse(p, ident + tk)
    t2 = (sk - tk) @ np.linalg.inv(lift)
    t3 = lift @ p.matrix @ compressed_inverse(p, ident + sk)
    d = t1 @ t2 @ t3

    direct_t, _ = resolvent_paths(h, fam, t, tau)
    direct_s, _ = resolvent_paths(h, fam, s, tau)
    d_direct = direct_t - direct_s
    scale = max(1.0, operator_norm(d_direct))

    # sum/difference forms of tH(t tau) - sH(s tau) and tG(t tau) - sG(s tau)
    sin_diff = apply_function(h, lambda _: np.sin(0.5 * (t - s) * tau * lam))
    cos_sum = apply_function(h, lambda _: np.cos(0.5 * (t + s) * tau * lam))
    sin_sum = apply_function(h, lambda _: np.sin(0.5 * (t + s) * tau * lam))
    h_diff = apply_function(h, lambda _: (np.sin(t * tau * lam) - np.sin(s * tau * lam)) / tau)
    g_diff = apply_function(h, lambda _: (np.cos(s * tau * lam) - np.cos(t * tau * lam)) / tau)
    h_diff_k = ((tk - tk.conj().T) - (sk - sk.conj().T)) / 2j
    g_diff_k = ((tk + tk.conj().T) - (sk + sk.conj().T)) / 2

    t2_symbol = apply_function(h, lambda _: phi_symbol(t, s, tau, lam))
    residuals = {
        "product": operator_norm(d - t1 @ t2 @ t3) / scale,
        "resolvent_difference": operator_norm(d - d_direct) / scale,
        "htau": operator_norm(htau.matrix @ (ident + tau * h.matrix) - h.matrix),
        "trig_h": max(
            operator_norm(h_diff - (2.0 / tau) * cos_sum @ sin_diff),
            operator_norm(h_diff - h_diff_k),
        ),
        "trig_g": max(
            operator_norm(g_diff - (2.0 / tau) * sin_sum @ sin_diff),
            operator_norm(g_diff - g_diff_k),
        ),
        "phi_symbol": operator_norm(t2_symbol - t2),
    }
    return FactorSplit(t, s, tau, t1, t2, t3, d, htau, residuals)


def t2_operator(h: HermitianOperator, t: float, s: float, tau: float) -> np.ndarray:
    lam = h.spectrum.eigenvalues
    return apply_function(h, lambda _: phi_symbol(t, s, tau, lam))


# --------------------------------------------------------------------------
# T0 / T3 probes and equicontinuity
# --------------------------------------------------------------------------

@dataclass
class T0T3Report:
    s: float
    compressed: list[float]
    uncompressed: list[float]
    t3_norm: float
    taus: list[float]
    t3_tau_norms: list[float]
    t3_strong_errors: list[float]
    sample_norms: list[float]

    @property
    def t3_tau_sup(self) -> float:
        return max(self.t3_tau_norms) if self.t3_tau_norms else float("nan")

    @property
    def compressed_ok(self) -> bool:
        return all(c <= 1e-9 * max(g, 1e-300) or c == 0.0
                   for c, g in zip(self.compressed, self.sample_norms))

    @property
    def t3_convergence_ok(self) -> bool:
        """Error at the smallest tau is within 10x of a first-order extrapolation."""
        e, tau = self.t3_strong_errors, self.taus
        if len(e) < 2:
            return True
        return e[-1] <= max(10.0 * e[-2] * tau[-1] / tau[-2], 1e-12)


def t0_t3_probe(h: HermitianOperator, p: OrthogonalProjection, s: float,
                taus: Sequence[float], samples: Sequence) -> T0T3Report:
    if s == 0:
        raise ValueError("s must be nonzero")
    hp = zeno_generator(h, p)
    ident = np.eye(h.dim)
    pm = p.matrix
    res_p = np.linalg.solve(ident + hp.matrix, pm)  # (I + H_P)^{-1} P
    t0 = (ident + h.matrix) @ res_p
    t3 = (ident + abs(s) * h.matrix) @ np.linalg.solve(ident + 1j * s * hp.matrix, pm)

    gs = [as_state(g) for g in samples]
    compressed = [float(np.linalg.norm(pm @ (t0 @ g) - pm @ g)) for g in gs]
    uncompressed = [float(np.linalg.norm(t0 @ g - pm @ g)) for g in gs]

    taus = sorted(taus, reverse=True)
    lam = h.spectrum.eigenvalues
    fam = ProjectionFamily.constant_family(p)
    norms, errors = [], []
    for tau in taus:
        lift = ident + abs(s) * apply_function(h, lambda _: lam / (1.0 + tau * lam))
        t3_tau = lift @ pm @ compressed_inverse(fam.at(tau), ident + scaled_K(h, s, tau))
        norms.append(operator_norm(t3_tau))
        errors.append(max(
            (float(np.linalg.norm(t3_tau @ g - t3 @ g) / np.linalg.norm(g)) for g in gs if np.linalg.norm(g) > 0),
            default=0.0,
        ))
    return T0T3Report(s, compressed, uncompressed, operator_norm(t3), list(taus), norms, errors,
                      [float(np.linalg.norm(g)) for g in gs])


def equicontinuity_probe(h: HermitianOperator, family, f, t_grid: Sequence[float],
                         tau_grid: Sequence[float]) -> SweepResult:
    """Empirical modulus of continuity of ``t -> u_tau(t)``, uniform over the tau grid.

    One row per adjacent pair ``(t, s)`` of ``t_grid``.
    """
    fam = _as_family(family)
    f = as_state(f)
    res = SweepResult(("t", "s", "delta", "omega_u", "omega_T2"))
    for t, s in zip(t_grid, t_grid[1:]):
        if not t * s > 0:
            raise SignMismatch("grid points must be nonzero with the same sign")
        w_u = w_t2 = 0.0
        for tau in tau_grid:
            d = u_tau(h, fam, t, tau, f) - u_tau(h, fam, s, tau, f)
            w_u = max(w_u, float(np.linalg.norm(d)))
            w_t2 = max(w_t2, float(np.linalg.norm(t2_operator(h, t, s, tau) @ f)))
        res.add(float(t), float(s), abs(t - s), w_u, w_t2)
    return res


def envelope_nonincreasing(deltas: Sequence[float], values: Sequence[float], slack: float = 1e-12) -> bool:
    """True if ``values`` never increase as ``deltas`` shrink (within ``slack``)."""
    pairs = sorted(zip(deltas, values), key=lambda dv: -dv[0])
    return all(b <= a + slack for (_, a), (_, b) in zip(pairs, pairs[1:]))
