"""Command-line front end: ``zlab <subcommand> [flags] --out PATH [--check]``.

Exit codes: 0 success (or checks off), 1 usage/config error, 2 failed check.
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from . import chernoff as ch
from .errors import ZlabError
from .models import (
    Grid1D,
    RegionMask,
    SeededGenerator,
    dirichlet_laplacian,
    gaussian_packet,
    indicator_projection,
    periodic_laplacian_1d,
    random_hermitian,
    random_projection,
    random_psd,
    random_state,
    rotating_family,
)
from .operators import (
    HermitianOperator,
    OrthogonalProjection,
    operator_norm,
    read_matrix,
    unitary_propagator,
)
from .sweep import SweepResult
from .zeno import (
    ProjectionFamily,
    ZenoVariant,
    hypothesis_check,
    zeno_error_sweep,
    zeno_leakage,
)

SUBCOMMANDS = ("converge", "chernoff", "box", "probes", "hypothesis")

# Errors below this are treated as converged; ratio checks on round-off are meaningless.
ERROR_FLOOR = 1e-12

EPILOG = """\
check thresholds: --check compares the finest sweep point with the point 4x coarser.
converge/chernoff/box require a ratio <= 0.3 and hypothesis <= 0.6.  These encode
"roughly first order under 4x refinement, with slack"; they are regression guards,
not proven rates.  Errors below 1e-12 always pass.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class ExperimentConfig:
    subcommand: str
    out: str
    check: bool
    instance: str
    dim: int
    rank: int
    seed: int
    norm_cap: float
    h_file: str | None
    p_file: str | None
    family: str
    rotation_norm: float
    t: float
    epsilon: int
    variant: str
    theta: float
    s: float
    samples: int
    n_min: int
    n_max: int
    n_factor: int
    tau_max: float
    tau_min: float
    tau_factor: float
    grid_n: int
    omega_lo: int
    omega_hi: int
    spacing: float
    sigma: float
    k0: float

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "ExperimentConfig":
        return cls(**{f.name: getattr(ns, f.name) for f in fields(cls)})

    @property
    def ns(self) -> list[int]:
        if self.n_min < 1 or self.n_factor < 2 or self.n_max < self.n_min:
            raise UsageError("need 1 <= n_min <= n_max and n_factor >= 2")
        out, n = [], self.n_min
        while n <= self.n_max:
            out.append(n)
            n *= self.n_factor
        return out

    @property
    def taus(self) -> list[float]:
        """Descending geometric tau grid from tau_max down to tau_min."""
        if not (0 < self.tau_min <= self.tau_max) or self.tau_factor <= 1:
            raise UsageError("need 0 < tau_min <= tau_max and tau_factor > 1")
        out, k = [], 0
        while True:
            tau = self.tau_max / self.tau_factor**k
            if tau < self.tau_min * (1 - 1e-9):
                break
            out.append(tau)
            k += 1
        return out

    @property
    def variants(self) -> list[ZenoVariant]:
        if self.variant == "all":
            return list(ZenoVariant)
        return [ZenoVariant.parse(self.variant)]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, help="output CSV path ('-' for stdout)")
    p.add_argument("--check", action="store_true", help="assert the subcommand's acceptance predicates")
    p.add_argument("--config", help="optional 'key = value' file; flags override it")
    g = p.add_argument_group("instance")
    g.add_argument("--instance", choices=("random", "canonical", "commuting", "zero"), default="random")
    g.add_argument("--dim", type=int, default=8)
    g.add_argument("--rank", type=int, default=3)
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("--norm-cap", type=float, default=1.0)
    g.add_argument("--h-file", help="Hamiltonian in zlab-matrix format (overrides --instance H)")
    g.add_argument("--p-file", help="projection in zlab-matrix format (overrides --instance P)")
    g.add_argument("--family", choices=("constant", "rotating"), default="constant")
    g.add_argument("--rotation-norm", type=float, default=1.0)
    d = p.add_argument_group("dynamics")
    d.add_argument("--t", type=float, default=1.0)
    d.add_argument("--epsilon", type=int, choices=(1, -1), default=1)
    d.add_argument("--variant", choices=("all", "symmetric", "right", "left"), default="all")
    d.add_argument("--theta", type=float, default=1.0)
    d.add_argument("--s", type=float, default=1.0, help="second time for T0/T3 probes")
    d.add_argument("--samples", type=int, default=4, help="probe vectors for T0/T3")
    w = p.add_argument_group("sweeps")
    w.add_argument("--n-min", type=int, default=16)
    w.add_argument("--n-max", type=int, default=4096)
    w.add_argument("--n-factor", type=int, default=4)
    w.add_argument("--tau-max", type=float, default=0.1)
    w.add_argument("--tau-min", type=float, default=6.25e-3)
    w.add_argument("--tau-factor", type=float, default=4.0)
    b = p.add_argument_group("box")
    b.add_argument("--grid-n", type=int, default=128)
    b.add_argument("--omega-lo", type=int, default=32)
    b.add_argument("--omega-hi", type=int, default=95)
    b.add_argument("--spacing", type=float, default=1.0)
    b.add_argument("--sigma", type=float, default=4.0)
    b.add_argument("--k0", type=float, default=0.5)


def build_parser() -> _Parser:
    parser = _Parser(prog="zlab", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter, epilog=EPILOG)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    helps = {
        "converge": "product-formula error sweep over n (all three orderings)",
        "chernoff": "resolvent, accretivity, semigroup and L2loc sweep over tau",
        "box": "Dirichlet confinement of a wave packet on a 1D grid",
        "probes": "identity and bound probes of the resolvent machinery",
        "hypothesis": "square-root symbol convergence for a moving projection",
    }
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=helps[name], epilog=EPILOG,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_common(sp)
    sub.choices["box"].set_defaults(n_max=1024)
    return parser


def _read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for i, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{i}: expected 'key = value'")
            key, value = (x.strip() for x in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def parse_config(argv: Sequence[str]) -> ExperimentConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.config:
        sp = parser._subparsers._group_actions[0].choices[ns.subcommand]
        actions = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, value in _read_config_file(ns.config).items():
            if key not in actions or key in ("config", "help"):
                raise UsageError(f"unknown config key {key!r}")
            if isinstance(actions[key], argparse._StoreTrueAction):
                defaults[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = value
        sp.set_defaults(**defaults)
        ns = parser.parse_args(argv)
    return ExperimentConfig.from_namespace(ns)


# --------------------------------------------------------------------------
# instance construction
# --------------------------------------------------------------------------

@dataclass
class Instance:
    h: HermitianOperator
    p: OrthogonalProjection
    f: np.ndarray
    family: ProjectionFamily
    gen: SeededGenerator


def build_instance(cfg: ExperimentConfig) -> Instance:
    gen = SeededGenerator(cfg.seed)
    dim, rank = cfg.dim, cfg.rank
    if cfg.instance == "canonical":
        h = HermitianOperator([[1.0, 1.0], [1.0, 1.0]])
        p = OrthogonalProjection(np.diag([1.0, 0.0]))
        f = np.array([1.0, 0.0], dtype=complex)
    else:
        if dim < 2 or not 1 <= rank < dim:
            raise UsageError("need dim >= 2 and 1 <= rank < dim")
        f = random_state(dim, gen)
        if cfg.instance == "random":
            h = random_psd(dim, gen, cfg.norm_cap)
            p = random_projection(dim, rank, gen)
        elif cfg.instance == "commuting":
            h = HermitianOperator(np.diag(np.linspace(0.0, cfg.norm_cap, dim)))
            p = OrthogonalProjection(np.diag([1.0] * rank + [0.0] * (dim - rank)))
        else:
            h = HermitianOperator(np.zeros((dim, dim)))
            p = random_projection(dim, rank, gen)
    if cfg.h_file:
        h = HermitianOperator(read_matrix(cfg.h_file))
    if cfg.p_file:
        p = OrthogonalProjection(read_matrix(cfg.p_file))
    if h.dim != p.dim:
        raise UsageError("H and P dimensions differ")
    if len(f) != h.dim:
        f = random_state(h.dim, gen)
    if not h.is_psd:
        raise UsageError("H must be positive semidefinite")
    if cfg.family == "rotating":
        a = random_hermitian(h.dim, gen, cfg.rotation_norm, tag="rotation")
        family = rotating_family(p, a)
    else:
        family = ProjectionFamily.constant_family(p)
    return Instance(h, p, f, family, gen)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _ratio_ok(fine: float, coarse: float, ratio: float) -> bool:
    return fine <= max(ratio * coarse, ERROR_FLOOR)


def _refinement_pair(values: Sequence, factor: float) -> tuple:
    """Indices of the finest sweep point and the one ``factor`` times coarser."""
    finest = values[-1]
    for k, v in enumerate(values):
        if math.isclose(v, finest * factor, rel_tol=1e-9) or math.isclose(v * factor, finest, rel_tol=1e-9):
            if k != len(values) - 1:
                return k, len(values) - 1
    raise UsageError(f"--check needs a sweep point {factor:g}x coarser than the finest")


def _ordered_map(fn, items) -> list:
    """Evaluate rows concurrently; results come back in input order."""
    items = list(items)
    with ThreadPoolExecutor(max_workers=min(4, max(1, len(items)))) as pool:
        return list(pool.map(fn, items))


def _trapezoid(y, x) -> float:
    integ = getattr(np, "trapezoid", None) or np.trapz
    return float(integ(y, x))


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_converge(cfg: ExperimentConfig) -> tuple[list[str], list[str]]:
    inst = build_instance(cfg)
    ns = cfg.ns
    t_grid = np.linspace(0.5 * cfg.t, 1.5 * cfg.t, 9)
    res = SweepResult(("variant", "t", "epsilon", "n", "error", "uniform_error"))
    failures = []
    for variant in cfg.variants:
        sweeps = _ordered_map(
            lambda tt: zeno_error_sweep(inst.h, inst.family, tt, cfg.epsilon, variant, inst.f, ns),
            [float(cfg.t)] + [float(x) for x in t_grid],
        )
        sweep = sweeps[0]
        uniform = np.max([sw.errors for sw in sweeps[1:]], axis=0)
        for (n, err), u in zip(sweep.rows, uniform):
            res.add(variant.value, float(cfg.t), int(cfg.epsilon), n, err, float(u))
        if cfg.check:
            i, j = _refinement_pair(ns, 4)
            e = sweep.errors
            if not _ratio_ok(e[j], e[i], 0.3):
                failures.append(f"converge: variant={variant.value} row n={ns[j]}: "
                                f"error {e[j]:.3e} > 0.3 * error(n={ns[i]}) = {0.3 * e[i]:.3e}")
    return res.to_csv_lines(), failures


def cmd_chernoff(cfg: ExperimentConfig) -> tuple[list[str], list[str]]:
    inst = build_instance(cfg)
    h, fam, f, t = inst.h, inst.family, inst.f, cfg.t
    p0 = fam.at(0)
    nodes = np.linspace(0.0, 2.0 * t, 33)
    targets = [ch.chernoff_target(h, p0, float(x), f) for x in nodes]
    res = SweepResult(("tau", "resolvent_error", "accretivity_min", "contraction_norm",
                       "semigroup_error", "l2loc_error"))
    failures = []

    def row(tau):
        s = ch.S_op(h, fam, t, tau)
        resolvent = ch.resolvent_S(h, fam, t, tau)
        integrand = [float(np.linalg.norm(ch.u_tau(h, fam, float(x), tau, f) - y)) ** 2
                     for x, y in zip(nodes, targets)]
        return (float(tau), ch.chernoff_error(h, fam, t, tau, f), ch.accretivity_min(s),
                operator_norm(resolvent), ch.semigroup_compare(h, fam, t, tau, cfg.theta, f),
                _trapezoid(integrand, nodes))

    for values in _ordered_map(row, cfg.taus):
        res.add(*values)
        tau, _, acc, con, _, _ = values
        if cfg.check:
            if acc < -1e-12:
                failures.append(f"chernoff: row tau={tau:g}: accretivity_min {acc:.3e} < -1e-12")
            if con > 1 + 1e-12:
                failures.append(f"chernoff: row tau={tau:g}: contraction_norm {con!r} > 1+1e-12")
    if cfg.check:
        taus = cfg.taus
        i, j = _refinement_pair(taus, 0.25)
        for col in ("resolvent_error", "l2loc_error"):
            v = res.column(col)
            if not _ratio_ok(v[j], v[i], 0.3):
                failures.append(f"chernoff: {col} row tau={taus[j]:g}: {v[j]:.3e} > 0.3 * {v[i]:.3e}")
    return res.to_csv_lines(), failures


def cmd_box(cfg: ExperimentConfig) -> tuple[list[str], list[str]]:
    if cfg.grid_n > 1024:
        raise UsageError("grid_n must be <= 1024")
    grid = Grid1D(cfg.grid_n, cfg.spacing)
    if not 0 <= cfg.omega_lo <= cfg.omega_hi < cfg.grid_n:
        raise UsageError("region bounds must satisfy 0 <= lo <= hi < grid_n")
    mask = RegionMask.interval(grid, cfg.omega_lo, cfg.omega_hi)
    h = periodic_laplacian_1d(grid)
    p = indicator_projection(mask)
    hd = dirichlet_laplacian(mask)
    idx = mask.indices
    compressed = (p.matrix @ h.matrix @ p.matrix)[np.ix_(idx, idx)]
    diff = float(np.max(np.abs(compressed - hd.matrix[np.ix_(idx, idx)])))

    x0 = 0.5 * (cfg.omega_lo + cfg.omega_hi) * cfg.spacing
    psi = p.matrix @ gaussian_packet(grid, x0, cfg.sigma * cfg.spacing, cfg.k0)
    psi = psi / np.linalg.norm(psi)
    target = unitary_propagator(hd, cfg.t) @ psi

    lines = ["# phase: stencil"]
    stencil = SweepResult(("max_abs_diff",))
    stencil.add(diff)
    lines += stencil.to_csv_lines()
    dyn = SweepResult(("n", "error", "leakage"))
    ns = cfg.ns
    for n in ns:
        out, leak = zeno_leakage(h, p, cfg.t, n, psi)
        dyn.add(n, float(np.linalg.norm(out - target)), leak)
    lines.append("# phase: dynamics")
    lines += dyn.to_csv_lines()

    failures = []
    if cfg.check:
        if diff > 1e-13:
            failures.append(f"box: phase stencil row 0: max_abs_diff {diff:.3e} > 1e-13")
        i, j = _refinement_pair(ns, 4)
        e, leak = dyn.column("error"), dyn.column("leakage")
        if not _ratio_ok(e[j], e[i], 0.3):
            failures.append(f"box: phase dynamics row n={ns[j]}: error {e[j]:.3e} > 0.3 * {e[i]:.3e}")
        if leak[-1] > leak[0] + ERROR_FLOOR:
            failures.append(f"box: phase dynamics row n={ns[-1]}: leakage {leak[-1]:.3e} > leakage(n={ns[0]})")
    return lines, failures


def cmd_probes(cfg: ExperimentConfig) -> tuple[list[str], list[str]]:
    inst = build_instance(cfg)
    h, fam, f, t, p = inst.h, inst.family, inst.f, cfg.t, inst.p
    taus, ns = cfg.taus, cfg.ns
    fnorm2 = float(np.linalg.norm(f)) ** 2
    lines: list[str] = []
    failures: list[str] = []

    def section(name: str, res: SweepResult, notes: Sequence[str] = ()):
        lines.append(f"# probe: {name}")
        lines.extend(f"# note: {n}" for n in notes)
        lines.extend(res.to_csv_lines())

    # square roots of the kappa split
    kappas = [10.0**-k for k in range(1, 5)]
    lam_max = h.norm()
    res = ch.split_root_sweep(h, f, kappas)
    section("split_roots", res)
    for kappa, minus in zip(kappas, res.column("minus_root")):
        if lam_max * kappa < math.pi and minus != 0.0 and cfg.check:
            failures.append(f"probes: split_roots row kappa={kappa:g}: minus_root {minus!r} != 0")

    # inner-product identities
    keys = ("complement_re", "complement_im", "range_re", "range_im", "adjoint_re", "adjoint_im")
    res = SweepResult(("tau",) + keys)
    for tau in taus:
        r = ch.inner_identity_check(h, fam, t, tau, f)
        res.add(float(tau), *(r[k] for k in keys))
        worst = max(r.values())
        if cfg.check and worst > 1e-9 * (1 + fnorm2):
            failures.append(f"probes: inner_identities row tau={tau:g}: residual {worst:.3e}")
    section("inner_identities", res)

    # block inverse vs direct solve
    res = SweepResult(("tau", "dual_path_residual", "contraction_norm", "block_identity_residual"))
    for tau in taus:
        direct, block = ch.resolvent_paths(h, fam, t, tau)
        rel = operator_norm(direct - block) / max(1.0, operator_norm(direct))
        con = operator_norm(direct)
        blk = ch.s_block_residual(h, fam, t, tau)
        res.add(float(tau), rel, con, blk)
        if cfg.check and (rel > 1e-9 or con > 1 + 1e-12 or blk > 1e-9):
            failures.append(f"probes: resolvent_dual_path row tau={tau:g}: "
                            f"residual {rel:.3e}, norm {con!r}, block {blk:.3e}")
    section("resolvent_dual_path", res)

    # sqrt(n) bound for F(it; 1/n)
    res = SweepResult(("n", "lhs", "rhs"))
    for n in (1, 2, 4, 8, 16, 32, 64):
        fm = ch.F_op(h, fam, t, 1.0 / n)
        lhs, rhs = ch.sqrt_n_bound_check(fm, f, n)
        res.add(n, lhs, rhs)
        if cfg.check and lhs > rhs + 1e-9:
            failures.append(f"probes: sqrt_n_bound row n={n}: {lhs:.3e} > {rhs:.3e}")
    section("sqrt_n_bound", res)

    section("diag_trick", ch.diag_trick_check(h, fam, t, f, ns))

    # factorization of resolvent differences at (t, t/2)
    rkeys = ("product", "resolvent_difference", "htau", "trig_h", "trig_g", "phi_symbol")
    res = SweepResult(("t", "s", "tau") + rkeys)
    if t != 0:
        for tau in taus:
            fs = ch.factor_split(h, fam, t, 0.5 * t, tau)
            res.add(float(t), 0.5 * t, float(tau), *(fs.residuals[k] for k in rkeys))
            worst = max(fs.residuals.values())
            if cfg.check and worst > 1e-9:
                failures.append(f"probes: factor_split row tau={tau:g}: residual {worst:.3e}")
    section("factor_split", res)

    # T0 and T3
    samples = [f] + [random_state(h.dim, inst.gen, tag=f"sample{k}") for k in range(cfg.samples - 1)]
    rep = ch.t0_t3_probe(h, p, cfg.s, taus, samples)
    res = SweepResult(("sample", "g_norm", "compressed", "uncompressed"))
    for k, (gn, c, u) in enumerate(zip(rep.sample_norms, rep.compressed, rep.uncompressed)):
        res.add(k, gn, c, u)
        if cfg.check and c > 1e-9 * gn:
            failures.append(f"probes: t0 row sample={k}: compressed residual {c:.3e}")
    section("t0", res, ["uncompressed column is reported only; it need not vanish in finite dimension"])
    res = SweepResult(("s", "tau", "t3_norm", "strong_error"))
    res.add(float(cfg.s), 0.0, rep.t3_norm, 0.0)
    for tau, nrm, err in zip(rep.taus, rep.t3_tau_norms, rep.t3_strong_errors):
        res.add(float(cfg.s), float(tau), nrm, err)
    section("t3", res, [
        "tau=0 row is the limit operator (I+|s|H)(I+isH_P)^{-1}P",
        f"sqrt(2) bound on the limit norm is reported, not asserted; observed {rep.t3_norm:.16e}",
    ])

    # equicontinuity moduli
    if t != 0:
        t_grid = [t * (1 + 2.0**-k) for k in range(0, 9)]
        section("equicontinuity", ch.equicontinuity_probe(h, fam, f, t_grid, taus))
    return lines, failures


def cmd_hypothesis(cfg: ExperimentConfig) -> tuple[list[str], list[str]]:
    if cfg.check and cfg.t <= 0:
        raise UsageError("--check requires t > 0")
    inst = build_instance(cfg)
    taus = cfg.taus
    res = hypothesis_check(inst.h, inst.family, cfg.t, inst.f, taus)
    failures = []
    if cfg.check:
        i, j = _refinement_pair(taus, 0.25)
        e = res.column("error")
        if not _ratio_ok(e[j], e[i], 0.6):
            failures.append(f"hypothesis: row tau={taus[j]:g}: error {e[j]:.3e} > 0.6 * {e[i]:.3e}")
    return res.to_csv_lines(), failures


COMMANDS = {
    "converge": cmd_converge,
    "chernoff": cmd_chernoff,
    "box": cmd_box,
    "probes": cmd_probes,
    "hypothesis": cmd_hypothesis,
}


def run(cfg: ExperimentConfig) -> int:
    lines, failures = COMMANDS[cfg.subcommand](cfg)
    text = "\n".join(lines) + "\n"
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", newline="\n") as fh:
            fh.write(text)
    for msg in failures:
        print(f"CHECK FAILED {msg}", file=sys.stderr)
    return 2 if failures else 0


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except UsageError as exc:
        print(f"zlab: error: {exc}", file=sys.stderr)
        return 1
    except (ZlabError, ValueError, OSError) as exc:
        print(f"zlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
