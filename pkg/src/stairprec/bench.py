"""Sweep harness: PCG iterations and condition numbers over weights and m.

For every generated LQR instance, every preset ``(a, b)`` and every ``m``,
the harness solves ``num_rhs`` systems with PCG and, optionally, computes
the exact condition number of ``M_m^{-1} A`` through the dense oracle.
Means are taken over all converged (matrix, rhs) pairs; condition numbers
are averaged over matrices and normalized by the ``DiagonalOnly``, ``m=1``
mean.

The condition number reported is ``kappa(L^T A L)`` with ``L L^T = M_m^{-1}``.
"""

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .krylov import PcgConfig, pcg_solve_batch
from .ocpgen import GeneratorConfig, generate_instance, random_rhs, write_instance
from .precond import DIAGONAL_ONLY, EQUAL_WEIGHTS, OPTIMAL, STAIRS_ONLY, PolyPreconditioner, SplittingWeights
from .spectral import spectrum_of_preconditioned
from .splitting import factorize

PRESETS = {
    "diag": ("DiagonalOnly", DIAGONAL_ONLY),
    "stairs": ("StairsOnly", STAIRS_ONLY),
    "equal": ("EqualWeights", EQUAL_WEIGHTS),
    "optimal": ("Optimal", OPTIMAL),
}
BASELINE = ("DiagonalOnly", 1)
SPECTRA_MAX_SIZE = 600
CSV_HEADER = ["preset", "m", "mean_iterations", "mean_cond", "mean_cond_normalized", "num_failures"]


def _default_presets():
    return [PRESETS[k] for k in ("diag", "stairs", "equal", "optimal")]


@dataclass
class ExperimentConfig:
    N: int = 20
    n: int = 15
    num_matrices: int = 50
    num_rhs: int = 100
    m_list: tuple = (1, 2, 3, 4)
    presets: list = field(default_factory=_default_presets)
    tol: float = 1e-6
    seed: int = 0
    with_spectra: bool = False
    generator: dict = field(default_factory=dict)  # extra GeneratorConfig fields
    dump_dir: Optional[str] = None
    threads: Optional[int] = None  # None -> BENCH_THREADS, 0 -> auto

    def __post_init__(self):
        if self.num_matrices < 1 or self.num_rhs < 1:
            raise ValueError("num_matrices and num_rhs must be >= 1")
        if not self.m_list or any(m < 1 for m in self.m_list):
            raise ValueError("m_list must hold positive integers")
        for label, w in self.presets:
            if not isinstance(w, SplittingWeights):
                raise TypeError(f"preset {label!r} must carry SplittingWeights")

    def generator_config(self):
        return GeneratorConfig(seed=self.seed, N=self.N, n=self.n, **self.generator)


@dataclass
class ExperimentRow:
    preset: str
    m: int
    mean_iterations: float
    mean_cond: Optional[float]
    mean_cond_normalized: Optional[float]
    num_failures: int


def _run_instance(cfg, k):
    """All (preset, m) measurements on instance ``k``."""
    A, used, spd_failures = generate_instance(cfg.generator_config().for_instance(k))
    if cfg.dump_dir:
        write_instance(A, used, cfg.dump_dir, f"instance_{k:04d}")
    B = np.stack(random_rhs(used, cfg.num_rhs), axis=1)
    F = factorize(A)
    pcg_cfg = PcgConfig(tol_abs=cfg.tol)
    spectra = cfg.with_spectra and A.shape[0] <= SPECTRA_MAX_SIZE
    out = {}
    for label, w in cfg.presets:
        for m in cfg.m_list:
            P = PolyPreconditioner.from_factorization(F, w, m, unsafe=not w.in_C_g)
            res = pcg_solve_batch(A, B, P.apply, pcg_cfg)
            ok = res.converged & ~res.breakdown
            cond = spectrum_of_preconditioned(A, P).cond if spectra else None
            out[(label, m)] = (res.iterations[ok].tolist(), int((~ok).sum()), cond)
    return out, spd_failures


def _workers(cfg):
    threads = cfg.threads
    if threads is None:
        threads = int(os.environ.get("BENCH_THREADS", "0") or 0)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return max(1, min(threads, cfg.num_matrices))


def run_experiment(cfg, return_spd_failures=False):
    """Run the sweep; rows are ordered by preset, then ``m``.

    With ``return_spd_failures`` the number of generated instances that
    failed s.p.d. validation (and were resampled) is returned as well.
    """
    ks = range(cfg.num_matrices)
    workers = _workers(cfg)
    if workers == 1:
        results = [_run_instance(cfg, k) for k in ks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map() preserves order, so the reduction below is schedule independent
            results = list(pool.map(_run_instance, [cfg] * len(ks), ks))

    rows = []
    for label, _ in cfg.presets:
        for m in cfg.m_list:
            iters, failures, conds = [], 0, []
            for per_instance, _ in results:
                it, fail, cond = per_instance[(label, m)]
                iters.extend(it)
                failures += fail
                if cond is not None:
                    conds.append(cond)
            mean_it = float(np.mean(iters)) if iters else float("nan")
            mean_cond = float(np.mean(conds)) if conds else None
            rows.append(ExperimentRow(label, m, mean_it, mean_cond, None, failures))

    base = next((r for r in rows if (r.preset, r.m) == BASELINE), None)
    if base is not None and base.mean_cond is not None:
        for r in rows:
            if r.mean_cond is not None:
                r.mean_cond_normalized = r.mean_cond / base.mean_cond
    spd_failures = sum(f for _, f in results)
    if return_spd_failures:
        return rows, spd_failures
    return rows


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".6g")


def write_csv(rows, path):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in rows:
                w.writerow([r.preset, r.m, _fmt(r.mean_iterations), _fmt(r.mean_cond),
                            _fmt(r.mean_cond_normalized), r.num_failures])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_csv(path):
    def num(s):
        return float(s) if s else None

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            ExperimentRow(d["preset"], int(d["m"]), float(d["mean_iterations"]), num(d["mean_cond"]),
                          num(d["mean_cond_normalized"]), int(d["num_failures"]))
            for d in reader
        ]


def _parse_presets(text, custom_a):
    presets = []
    for key in filter(None, (t.strip() for t in text.split(","))):
        if key not in PRESETS:
            raise argparse.ArgumentTypeError(f"unknown preset {key!r}; choose from {', '.join(PRESETS)}")
        presets.append(PRESETS[key])
    if custom_a is not None:
        presets.append((f"Custom(a={custom_a:g})", SplittingWeights.from_a(custom_a)))
    return presets


def build_parser():
    p = argparse.ArgumentParser(prog="bench", description=__doc__.split("\n\n")[0])
    p.add_argument("--N", type=int, default=20, help="number of diagonal blocks")
    p.add_argument("--n", type=int, default=15, help="block size")
    p.add_argument("--matrices", type=int, default=50)
    p.add_argument("--rhs", type=int, default=100)
    p.add_argument("--m", default="1,2,3,4", help="comma-separated polynomial orders")
    p.add_argument("--presets", default="diag,stairs,equal,optimal")
    p.add_argument("--custom-a", type=float, default=None, help="extra preset with b = 1 - 2a")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spectra", action="store_true", help="compute exact condition numbers")
    p.add_argument("--out", default="results.csv")
    p.add_argument("--dump-instances", default=None, metavar="DIR")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        m_list = tuple(int(x) for x in args.m.split(",") if x.strip())
        presets = _parse_presets(args.presets, args.custom_a)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"bench: {exc}", file=sys.stderr)
        return 1
    cfg = ExperimentConfig(
        N=args.N, n=args.n, num_matrices=args.matrices, num_rhs=args.rhs, m_list=m_list,
        presets=presets, tol=args.tol, seed=args.seed, with_spectra=args.spectra,
        dump_dir=args.dump_instances,
    )
    rows, spd_failures = run_experiment(cfg, return_spd_failures=True)
    write_csv(rows, args.out)
    for r in rows:
        print(f"{r.preset:>14s} m={r.m}  iters={_fmt(r.mean_iterations):>8s}  "
              f"cond={_fmt(r.mean_cond_normalized) or '-':>8s}  failures={r.num_failures}")
    if spd_failures:
        print(f"bench: {spd_failures} generated instance(s) failed s.p.d. validation", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
