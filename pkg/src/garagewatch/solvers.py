"""Dense linear solvers (Gauss elimination, Jacobi, Gauss-Seidel) and a timing harness.

All solvers take a :class:`LinearSystem` and return a :class:`SolveResult`.
The iterative methods start from the zero vector and stop once the Euclidean
residual ``||A x - y||`` drops to ``tol``.
"""

from __future__ import annotations

import json
import logging
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionError, SingularMatrixError, ZeroDiagonalError

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-12
METHODS = ("gauss", "jacobi", "gauss-seidel")

# Jacobi matvecs are always evaluated in blocks of this many rows, whatever the
# worker count, so every row sees the same BLAS call shape.
_JACOBI_BLOCK = 64


@dataclass(frozen=True)
class LinearSystem:
    a: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionError(f"coefficient matrix must be 2-D and non-empty, got shape {a.shape}")
        if y.shape[0] != a.shape[0]:
            raise DimensionError(f"right-hand side has {y.shape[0]} entries for {a.shape[0]} rows")
        if not (np.isfinite(a).all() and np.isfinite(y).all()):
            raise DimensionError("system contains NaN or Inf")
        a.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)

    @property
    def shape(self):
        return self.a.shape

    @property
    def is_square(self):
        return self.a.shape[0] == self.a.shape[1]

    def residual_norm(self, x):
        return float(np.linalg.norm(self.a @ x - self.y))


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool


def _require_square(system):
    if not system.is_square:
        raise DimensionError(f"square system required, got {system.shape[0]}x{system.shape[1]}")


def _diagonal(system):
    d = np.diag(system.a).copy()
    zero = np.flatnonzero(d == 0.0)
    if zero.size:
        raise ZeroDiagonalError(f"zero diagonal entry at row {int(zero[0])}")
    return d


def _chunks(lo, hi, parts):
    """Split ``range(lo, hi)`` into at most `parts` contiguous (start, stop) spans."""
    total = hi - lo
    parts = max(1, min(parts, total))
    step, extra = divmod(total, parts)
    spans, start = [], lo
    for p in range(parts):
        stop = start + step + (1 if p < extra else 0)
        spans.append((start, stop))
        start = stop
    return spans


def is_diagonally_dominant(system: LinearSystem) -> bool:
    """True when every row has ``|a_ii| >= sum_{j != i} |a_ij|`` and at least one row is strict."""
    _require_square(system)
    absa = np.abs(system.a)
    diag = np.diag(absa)
    off = absa.sum(axis=1) - diag
    return bool(np.all(diag >= off) and np.any(diag > off))


def gauss_eliminate(system: LinearSystem, workers: int = 1) -> SolveResult:
    """Solve a square system by Gaussian elimination with partial pivoting.

    With ``workers > 1`` the row updates below each pivot are split across a
    thread pool; every row is updated by the same elementwise expression, so
    the answer does not depend on the worker count.

    Raises
    ------
    SingularMatrixError
        If the best available pivot is smaller than 1e-12 in magnitude.
    """
    _require_square(system)
    if workers < 1:
        raise ConfigurationError("workers must be >= 1")
    n = system.a.shape[0]
    aug = np.empty((n, n + 1))
    aug[:, :n] = system.a
    aug[:, n] = system.y

    def eliminate(k, lo, hi):
        factors = aug[lo:hi, k] / aug[k, k]
        aug[lo:hi, k:] -= factors[:, None] * aug[k, k:]

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for k in range(n):
            p = k + int(np.argmax(np.abs(aug[k:, k])))
            if abs(aug[p, k]) < PIVOT_TOL:
                raise SingularMatrixError(f"pivot {aug[p, k]:.3g} below {PIVOT_TOL:g} in column {k}")
            if p != k:
                aug[[k, p]] = aug[[p, k]]
            if k + 1 == n:
                break
            if pool is None or n - k - 1 < 2 * workers:
                eliminate(k, k + 1, n)
            else:
                futures = [pool.submit(eliminate, k, lo, hi) for lo, hi in _chunks(k + 1, n, workers)]
                for f in futures:
                    f.result()
    finally:
        if pool is not None:
            pool.shutdown()

    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        x[k] = (aug[k, n] - aug[k, k + 1:n] @ x[k + 1:]) / aug[k, k]
    return SolveResult(x=x, residual_norm=system.residual_norm(x), iterations=0, converged=True)


def _check_iterative_args(tol, max_iter):
    if not tol > 0:
        raise ConfigurationError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ConfigurationError(f"max_iter must be >= 1, got {max_iter}")


def jacobi(system: LinearSystem, tol: float = 1e-10, max_iter: int = 10_000,
           workers: int = 1) -> SolveResult:
    """Jacobi iteration from ``x = 0``.

    Each sweep only reads the previous iterate, so the residual blocks can be
    computed by independent workers; the result is bit-identical for any
    `workers`. Convergence is only guaranteed for diagonally dominant systems.
    """
    _require_square(system)
    _check_iterative_args(tol, max_iter)
    if workers < 1:
        raise ConfigurationError("workers must be >= 1")
    d = _diagonal(system)
    a, y = system.a, system.y
    n = a.shape[0]
    blocks = [(lo, min(lo + _JACOBI_BLOCK, n)) for lo in range(0, n, _JACOBI_BLOCK)]
    groups = [blocks[i::workers] for i in range(min(workers, len(blocks)))]
    x = np.zeros(n)
    r = np.empty(n)

    def residual_blocks(group):
        for lo, hi in group:
            r[lo:hi] = a[lo:hi] @ x - y[lo:hi]

    pool = ThreadPoolExecutor(max_workers=len(groups)) if len(groups) > 1 else None
    try:
        iterations = 0
        while True:
            if pool is None:
                residual_blocks(blocks)
            else:
                for f in [pool.submit(residual_blocks, g) for g in groups]:
                    f.result()
            rnorm = float(np.linalg.norm(r))
            if rnorm <= tol or iterations == max_iter or not math.isfinite(rnorm):
                break
            # (y_i - sum_{j!=i} a_ij x_j) / a_ii == x_i - r_i / a_ii
            x = x - r / d
            iterations += 1
    finally:
        if pool is not None:
            pool.shutdown()
    return SolveResult(x=x, residual_norm=rnorm, iterations=iterations, converged=rnorm <= tol)


def gauss_seidel(system: LinearSystem, tol: float = 1e-10, max_iter: int = 10_000) -> SolveResult:
    """Gauss-Seidel iteration from ``x = 0`` with ascending, strictly sequential sweeps."""
    _require_square(system)
    _check_iterative_args(tol, max_iter)
    d = _diagonal(system)
    a, y = system.a, system.y
    n = a.shape[0]
    x = np.zeros(n)
    iterations = 0
    while True:
        rnorm = float(np.linalg.norm(a @ x - y))
        if rnorm <= tol or iterations == max_iter or not math.isfinite(rnorm):
            break
        for i in range(n):
            x[i] += (y[i] - a[i] @ x) / d[i]
        iterations += 1
    return SolveResult(x=x, residual_norm=rnorm, iterations=iterations, converged=rnorm <= tol)


def make_dominant_system(n: int, rng: np.random.Generator) -> LinearSystem:
    """Benchmark family: ``a_ii = n``, off-diagonals uniform in [0, 1), ``y`` uniform in [-1, 1)."""
    a = rng.random((n, n))
    np.fill_diagonal(a, float(n))
    y = rng.uniform(-1.0, 1.0, n)
    return LinearSystem(a, y)


@dataclass(frozen=True)
class BenchConfig:
    method: str
    n: int
    workers: int = 1
    trials: int = 100
    seed: int = 0
    tol: float = 1e-10
    max_iter: int = 10_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        if self.n < 2:
            raise ConfigurationError("n must be >= 2")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")


@dataclass(frozen=True)
class TimingEntry:
    method: str
    n: int
    workers: int
    mean_s: float
    stddev_s: float
    mean_residual: float
    # last solution of the run, kept for determinism checks; not serialized
    last_x: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def key(self):
        return (self.method, self.n, self.workers)

    def as_dict(self):
        return {
            "method": self.method,
            "n": self.n,
            "workers": self.workers,
            "mean_s": self.mean_s,
            "stddev_s": self.stddev_s,
            "mean_residual": self.mean_residual,
        }


@dataclass
class TimingReport:
    entries: dict = field(default_factory=dict)

    def add(self, entry: TimingEntry):
        if entry.key in self.entries:
            raise ConfigurationError(f"duplicate timing entry {entry.key}")
        self.entries[entry.key] = entry

    def merge(self, other: "TimingReport") -> "TimingReport":
        for entry in other.entries.values():
            self.add(entry)
        return self

    def __getitem__(self, key):
        return self.entries[key]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.values())

    def to_jsonl(self):
        return "".join(json.dumps(e.as_dict()) + "\n" for e in self)

    def to_table(self):
        header = f"{'method':<14}{'n':>7}{'workers':>9}{'mean_s':>14}{'stddev_s':>14}{'mean_residual':>15}"
        lines = [header, "-" * len(header)]
        for e in self:
            lines.append(f"{e.method:<14}{e.n:>7}{e.workers:>9}{e.mean_s:>14.6g}"
                         f"{e.stddev_s:>14.6g}{e.mean_residual:>15.3e}")
        return "\n".join(lines) + "\n"


def bench_solve(config: BenchConfig) -> TimingReport:
    """Monte-Carlo timing of one solver on `trials` freshly drawn systems."""
    workers = config.workers
    if config.method == "gauss-seidel" and workers > 1:
        log.warning("gauss-seidel sweeps are strictly sequential; timing with 1 worker instead of %d", workers)
        workers = 1

    rng = np.random.default_rng(config.seed)
    times, residuals = [], []
    x = None
    for _ in range(config.trials):
        system = make_dominant_system(config.n, rng)
        t0 = time.perf_counter()
        if config.method == "gauss":
            res = gauss_eliminate(system, workers=workers)
        elif config.method == "jacobi":
            res = jacobi(system, config.tol, config.max_iter, workers=workers)
        else:
            res = gauss_seidel(system, config.tol, config.max_iter)
        times.append(time.perf_counter() - t0)
        residuals.append(res.residual_norm)
        x = res.x

    report = TimingReport()
    report.add(TimingEntry(
        method=config.method,
        n=config.n,
        workers=workers,
        mean_s=statistics.fmean(times),
        stddev_s=statistics.pstdev(times),
        mean_residual=statistics.fmean(residuals),
        last_x=x,
    ))
    return report
