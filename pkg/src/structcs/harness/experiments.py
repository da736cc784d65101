"""Experiment drivers. Each instance derives its seeds from the master seed
and its grid coordinates only, so any thread count yields the same table."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .. import __version__
from ..chaos import chaos_profile, decoupling_check, decoupling_check_gaussian, empirical_chaos_supremum
from ..ensembles import (
    GeneratorSpec,
    Kind,
    MeasurementOperator,
    family_for,
    gabor_from_generator,
    partial_circulant,
    random_omega,
    random_sparse,
    strided_omega,
    subgaussian_dense,
)
from ..jl import PointSet, distortion, jl_embed
from ..recovery import SUCCESS_TOL, relative_error, solve
from ..rip import rip_exact, rip_monte_carlo
from ..seeding import (
    STREAM_CHAOS_FAMILY,
    STREAM_JL_PHI,
    STREAM_JL_SIGN,
    STREAM_OPERATOR_DRAW,
    STREAM_POINTS,
    STREAM_SIGNAL,
    derive_seed,
    rng_for,
)
from .config import ExperimentConfig
from .table import ResultTable, now_utc


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


def _seed(master: int, stream: int, *coords: int) -> int:
    seed = derive_seed(master, stream, 0)
    for c in coords:
        seed = derive_seed(seed, stream, c)
    return seed


def columns_for(kind: Kind, n: int, m: int) -> int:
    return m * m if kind is Kind.GABOR_SYNTHESIS else n


def build_operator(kind: Kind | str, n: int, m: int, distribution: str, seed: int,
                   omega_mode: str = "random") -> MeasurementOperator:
    """One draw of an ensemble. Gabor ignores ``n`` (it has m^2 columns)."""
    kind = Kind(kind)
    if kind is Kind.PARTIAL_CIRCULANT:
        if omega_mode == "random":
            omega = random_omega(n, m, seed)
        elif omega_mode == "first":
            omega = np.arange(m)
        else:
            omega = strided_omega(n, m)
        return partial_circulant(n, omega, GeneratorSpec(distribution, seed, n))
    if kind is Kind.GABOR_SYNTHESIS:
        return gabor_from_generator(m, GeneratorSpec(distribution, seed, m))
    if kind is Kind.SUBGAUSSIAN_DENSE:
        return subgaussian_dense(m, n, GeneratorSpec(distribution, seed, m * n))
    raise ValueError(f"cannot build ensemble {kind.value}")


def _provenance(cfg: ExperimentConfig) -> dict:
    return {
        "config_hash": cfg.config_hash(),
        "master_seed": cfg.master_seed,
        "code_version": __version__,
        "experiment": cfg.experiment,
        "timestamp": now_utc(),
        "config": {k: v for k, v in cfg.to_dict().items() if k not in ("out_dir", "threads")},
    }


# ---------------------------------------------------------------------------


def rip_table(cfg: ExperimentConfig) -> ResultTable:
    kind = Kind(cfg.ensemble)
    table = ResultTable(
        [("ensemble", "str"), ("n", "int"), ("m", "int"), ("s", "int"), ("trial", "int"),
         ("method", "str"), ("delta", "float"), ("supports_checked", "int")],
        provenance=_provenance(cfg),
    )
    cells = [(m, t) for m in cfg.m_grid for t in range(cfg.trials)]

    def run_cell(cell):
        m, t = cell
        seed = _seed(cfg.master_seed, STREAM_OPERATOR_DRAW, m, t)
        op = build_operator(kind, cfg.n, m, cfg.distribution, seed, cfg.omega)
        rows = []
        for s in cfg.s_grid:
            if cfg.rip_method == "exact":
                rep = rip_exact(op, s, budget=cfg.rip_budget, keep_records=False)
            else:
                rep = rip_monte_carlo(op, s, cfg.mc_trials, seed=seed, keep_records=False)
            rows.append([kind.value, op.n_cols, m, s, t, rep.method.value, rep.delta, rep.supports_checked])
        return rows

    for rows in _pmap(run_cell, cells, cfg.threads):
        for r in rows:
            table.append(r)
    return table


def m_star(ms: Sequence[int], freqs: Sequence[float], level: float = 0.9) -> int:
    """Smallest m whose success frequency reaches ``level`` (-1 if none)."""
    for m, f in sorted(zip(ms, freqs)):
        if f >= level:
            return int(m)
    return -1


def phase_transition(cfg: ExperimentConfig) -> ResultTable:
    kind = Kind(cfg.ensemble)
    table = ResultTable(
        [("solver", "str"), ("ensemble", "str"), ("n", "int"), ("s", "int"), ("m", "int"),
         ("trials", "int"), ("successes", "int"), ("frequency", "float"), ("m_star", "int")],
        provenance=_provenance(cfg),
    )
    complex_values = kind is Kind.GABOR_SYNTHESIS
    instances = [(sv, s, m, t) for sv in cfg.solvers for s in cfg.s_grid for m in cfg.m_grid
                 for t in range(cfg.trials)]

    def run_instance(inst):
        solver, s, m, t = inst
        op = build_operator(kind, cfg.n, m, cfg.distribution,
                            _seed(cfg.master_seed, STREAM_OPERATOR_DRAW, m, t), cfg.omega)
        rng = rng_for(_seed(cfg.master_seed, STREAM_SIGNAL, s, t, op.n_cols), STREAM_SIGNAL)
        x = random_sparse(op.n_cols, s, rng, complex_values=complex_values, unit=False).to_dense()
        if s > op.n_rows:
            return False
        kw = {} if solver == "omp" else {"max_iters": cfg.solver_max_iters}
        res = solve(solver, op, op.forward(x), s, **kw)
        return relative_error(res.estimate, x) <= SUCCESS_TOL

    outcomes = dict(zip(instances, _pmap(run_instance, instances, cfg.threads)))
    stars = {}
    for solver in cfg.solvers:
        for s in cfg.s_grid:
            hits = [sum(bool(outcomes[(solver, s, m, t)]) for t in range(cfg.trials)) for m in cfg.m_grid]
            freqs = [h / cfg.trials for h in hits]
            star = stars[f"{solver}:{s}"] = m_star(cfg.m_grid, freqs)
            for m, h, f in zip(cfg.m_grid, hits, freqs):
                table.append([solver, kind.value, columns_for(kind, cfg.n, m), s, m, cfg.trials, h, f, star])
    table.extras["m_star"] = stars
    table.extras["success_tolerance"] = SUCCESS_TOL
    return table


def chaos_table(cfg: ExperimentConfig) -> ResultTable:
    kind = Kind(cfg.ensemble)
    table = ResultTable(
        [("ensemble", "str"), ("n", "int"), ("m", "int"), ("s", "int"), ("d_F", "float"),
         ("d_op", "float"), ("gamma2_dudley", "float"), ("E", "float"), ("V", "float"),
         ("U", "float"), ("empirical_mean", "float"), ("empirical_max", "float")],
        provenance=_provenance(cfg),
    )
    cells = [(s, m) for s in cfg.s_grid for m in cfg.m_grid]

    def run_cell(cell):
        s, m = cell
        ref = build_operator(kind, cfg.n, m, cfg.distribution,
                             _seed(cfg.master_seed, STREAM_OPERATOR_DRAW, m, 0), cfg.omega)
        rng = rng_for(_seed(cfg.master_seed, STREAM_CHAOS_FAMILY, s, m), STREAM_CHAOS_FAMILY)
        fam = [family_for(ref, random_sparse(ref.n_cols, s, rng, complex_values=kind is Kind.GABOR_SYNTHESIS))
               for _ in range(cfg.family_size)]
        spec = GeneratorSpec(cfg.distribution, _seed(cfg.master_seed, STREAM_OPERATOR_DRAW, m, 1), fam[0].n_in)
        samples = empirical_chaos_supremum(fam, spec, cfg.draws)
        prof = chaos_profile(kind, s, m, n=ref.n_cols, samples=samples)
        return [kind.value, ref.n_cols, m, s, prof.d_f, prof.d_op, prof.gamma2_dudley, prof.E, prof.V,
                prof.U, float(np.mean(samples)), float(np.max(samples))]

    for row in _pmap(run_cell, cells, cfg.threads):
        table.append(row)
    return table


def random_hermitian_family(n: int, count: int, seed: int, zero_diagonal: bool = True) -> list[np.ndarray]:
    rng = rng_for(seed, STREAM_CHAOS_FAMILY)
    out = []
    for _ in range(count):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = (a + a.conj().T) / 2.0
        if zero_diagonal:
            np.fill_diagonal(h, 0.0)
        out.append(h / np.linalg.norm(h))
    return out


def decoupling_table(cfg: ExperimentConfig) -> ResultTable:
    table = ResultTable(
        [("variant", "str"), ("n", "int"), ("family_size", "int"), ("trials", "int"),
         ("lhs", "float"), ("rhs", "float"), ("se_lhs", "float"), ("se_rhs", "float"), ("pass", "bool")],
        provenance=_provenance(cfg),
    )
    trials = max(cfg.trials, 1000)
    fam = random_hermitian_family(cfg.n, cfg.family_size, cfg.master_seed)
    herm = random_hermitian_family(cfg.n, cfg.family_size, cfg.master_seed + 1, zero_diagonal=False)
    jobs = [
        (f"offdiag_{cfg.distribution}", lambda: decoupling_check(fam, cfg.distribution, trials, seed=cfg.master_seed)),
        ("gaussian_p1", lambda: decoupling_check_gaussian(herm, trials, p=1, seed=cfg.master_seed)),
        ("gaussian_p2", lambda: decoupling_check_gaussian(herm, trials, p=2, seed=cfg.master_seed)),
    ]
    results = _pmap(lambda job: job[1](), jobs, cfg.threads)
    for (name, _), res in zip(jobs, results):
        table.append([name, cfg.n, cfg.family_size, trials, float(res.lhs), float(res.rhs),
                      float(res.se_lhs), float(res.se_rhs), bool(res.passed)])
    return table


def inversions(values: Sequence[float], increasing: bool = True) -> int:
    """Number of adjacent steps violating a monotone trend.

    With ``increasing`` the trend is nondecreasing and decreases are counted;
    otherwise the trend is nonincreasing and increases are counted.
    """
    sign = 1.0 if increasing else -1.0
    return sum(1 for a, b in zip(values, values[1:]) if sign * (b - a) < 0)


def jl_sweep(cfg: ExperimentConfig) -> ResultTable:
    table = ResultTable(
        [("n", "int"), ("p", "int"), ("m", "int"), ("trial", "int"), ("max_distortion", "float")],
        provenance=_provenance(cfg),
    )
    cells = [(m, t) for m in cfg.m_grid for t in range(cfg.trials)]

    def cloud(t):
        rng = rng_for(_seed(cfg.master_seed, STREAM_POINTS, t), STREAM_POINTS)
        return PointSet(rng.standard_normal((cfg.points, cfg.n)))

    clouds = {t: cloud(t) for t in range(cfg.trials)}

    def run_cell(cell):
        m, t = cell
        # paired seeds: the same (Phi, eps') generators for every m at trial t
        emb = jl_embed(clouds[t], m, _seed(cfg.master_seed, STREAM_JL_PHI, t),
                       _seed(cfg.master_seed, STREAM_JL_SIGN, t))
        return distortion(clouds[t], emb)

    for (m, t), d in zip(cells, _pmap(run_cell, cells, cfg.threads)):
        table.append([cfg.n, cfg.points, m, t, float(d)])
    medians = {}
    for m in cfg.m_grid:
        medians[str(m)] = float(np.median([r[4] for r in table.rows if r[2] == m]))
    table.extras["median_max_distortion"] = medians
    table.extras["inversions"] = inversions([medians[str(m)] for m in sorted(cfg.m_grid)], increasing=False)
    return table


RUNNERS = {
    "rip_table": rip_table,
    "phase_transition": phase_transition,
    "chaos_profile": chaos_table,
    "decoupling": decoupling_table,
    "jl_sweep": jl_sweep,
}


def run(cfg: ExperimentConfig, write: bool = True) -> ResultTable:
    """Validate, execute and (optionally) write ``<out_dir>/<experiment>.{csv,json}``."""
    cfg.validate()
    table = RUNNERS[cfg.experiment](cfg)
    if write:
        table.write(cfg.out_dir, cfg.experiment)
    return table
