"""Experiment and audit harness: brute-force oracles, counting wrappers,
seeded trials, and the bit-complexity-independence study.

The brute-force heavy-subspace oracle is an independent implementation
(Fraction-based reduced row echelon, exhaustive span enumeration) sharing no
decision code with the production module, so agreement tests are meaningful.
"""

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import rng
from .dataset import (
    EtaSpec,
    MarginalSpec,
    MassartModel,
    PointSet,
    _draw_gaussian_grid,
    gen_hard_instance,
    massart_draw,
)
from .errors import SizeLimit
from .heavy import HeavySubspaceResult
from .learner import LearnerConfig, ModelOracle, evaluate_classifier, learn_halfspace
from .linalg import span_of

BRUTE_MAX_DIM = 4
BRUTE_MAX_N = 12


# ---------------------------------------------------------------------------
# Brute-force heavy-subspace oracle (independent implementation)
# ---------------------------------------------------------------------------

def _frac_basis(rows):
    """Reduced basis (pivot-normalized Fraction rows) of the given int rows."""
    basis = []
    for r in rows:
        v = [Fraction(int(x)) for x in r]
        for pivot_col, b in basis:
            if v[pivot_col] != 0:
                c = v[pivot_col]
                v = [vi - c * bi for vi, bi in zip(v, b)]
        for j, x in enumerate(v):
            if x != 0:
                inv = x
                v = [vi / inv for vi in v]
                basis.append((j, v))
                break
    return basis


def _frac_in_span(basis, row):
    v = [Fraction(int(x)) for x in row]
    for pivot_col, b in basis:
        if v[pivot_col] != 0:
            c = v[pivot_col]
            v = [vi - c * bi for vi, bi in zip(v, b)]
    return all(x == 0 for x in v)


def brute_force_heavy_subspace(point_set, V=None):
    """Exhaustive heavy-subspace decision for d <= 4, n <= 12.

    Enumerates the spans of all subsets of at most dim(V)-1 points and returns
    a subspace meeting the fraction threshold |S cap W| * dim(V) >= dim(W) * |S|
    (the canonical one by max excess, min dimension, lexicographic members),
    else not-found.  Raises SizeLimit beyond the documented instance size.
    """
    pts = np.asarray(getattr(point_set, "points", point_set), dtype=np.int64)
    n, d = pts.shape
    if d > BRUTE_MAX_DIM or n > BRUTE_MAX_N:
        raise SizeLimit(f"brute force limited to d<={BRUTE_MAX_DIM}, n<={BRUTE_MAX_N}")
    rows = [tuple(int(v) for v in r) for r in pts]
    if V is None:
        V = span_of(pts)
    k = V.dim
    span_rows_basis = _frac_basis(rows)
    if len(span_rows_basis) < k:
        return HeavySubspaceResult(True, span_of(pts), list(range(n)))
    if k == 1:
        return HeavySubspaceResult(False)
    best = None
    seen = set()
    for size in range(1, k):
        for comb in combinations(range(n), size):
            basis = _frac_basis([rows[i] for i in comb])
            kappa = len(basis)
            if kappa != size or kappa >= k:
                continue
            members = tuple(i for i in range(n) if _frac_in_span(basis, rows[i]))
            if members in seen:
                continue
            seen.add(members)
            excess = k * len(members) - n * kappa
            if excess < 0:
                continue
            key = (-excess, kappa, members)
            if best is None or key < best[0]:
                best = (key, members)
    if best is None:
        return HeavySubspaceResult(False)
    (_, _, members) = best[0]
    W = span_of(pts[list(members)])
    return HeavySubspaceResult(True, W, list(best[1]))


# ---------------------------------------------------------------------------
# Seeded generators for audit instances
# ---------------------------------------------------------------------------

TAG_RAND_PTS = 41


def random_point_set(dim, n, coord_bound, seed):
    """Uniform integer points with coordinates in [-coord_bound, coord_bound],
    zero rows nudged to e1."""
    flat = np.arange(n * dim, dtype=np.uint64)
    X = (rng.integers(seed, TAG_RAND_PTS, flat, 2 * coord_bound + 1) - coord_bound)
    X = X.reshape(n, dim).astype(np.int64)
    zero = ~X.any(axis=1)
    X[zero, 0] = 1
    return PointSet(dim, X)


def general_position_model(dim, n_support, eta, seed, bits=10, eta_kind="constant"):
    """Massart model whose marginal is uniform over a random general-position
    integer support (discretized gaussian grid)."""
    idx = np.arange(n_support, dtype=np.uint64)
    X = _draw_gaussian_grid(seed, idx, dim, scale=float(2 ** (bits - 2)), bits=bits)
    support = PointSet(dim, X)
    w = rng.normals(seed, 99, np.arange(1, dtype=np.uint64), cols=dim)[0]
    w /= np.linalg.norm(w)
    spec = EtaSpec(eta_kind, value=eta) if eta_kind == "constant" else EtaSpec(eta_kind)
    return MassartModel(w, eta, spec, MarginalSpec("uniform", support=support))


# ---------------------------------------------------------------------------
# Counting oracle and learning trials
# ---------------------------------------------------------------------------

class CountingOracle:
    """Wraps an oracle and audits the number of examples drawn."""

    def __init__(self, inner):
        self.inner = inner
        self.count = 0

    @property
    def support(self):
        return getattr(self.inner, "support", None)

    def draw(self, n):
        self.count += n
        return self.inner.draw(n)

    def draw_indexed(self, n):
        self.count += n
        return self.inner.draw_indexed(n)

    def labels_for(self, rows, gidx):
        return self.inner.labels_for(rows, gidx)


@dataclass
class TrialReport:
    seed: int
    config: dict
    telemetry: list
    final_error: float
    coverage: float
    sample_count: int
    wall_time: float


def run_learning_trial(model, config, seed, test_n=100_000):
    """One seeded learning run with draw accounting and held-out evaluation.

    The draw count is double-entry audited: the inner oracle advances its own
    counter per example and the wrapper counts independently; the two must
    agree exactly.
    """
    inner = ModelOracle(model, rng.derive_seed(seed, 1))
    oracle = CountingOracle(inner)
    t0 = time.perf_counter()
    classifier, telemetry = learn_halfspace(oracle, config, seed, dim=model.dim)
    wall = time.perf_counter() - t0
    if inner.count != oracle.count:
        raise AssertionError(
            f"draw audit mismatch: oracle consumed {inner.count}, wrapper saw {oracle.count}"
        )
    test = massart_draw(model, test_n, rng.derive_seed(seed, 2))
    report = evaluate_classifier(classifier, test)
    cfg = {
        "eta": config.eta, "eps": config.eps, "delta": config.delta, "C": config.C,
        "transform_delta": config.transform_delta,
    }
    return classifier, TrialReport(
        seed=seed,
        config=cfg,
        telemetry=telemetry,
        final_error=report.total_error,
        coverage=report.coverage,
        sample_count=oracle.count,
        wall_time=wall,
    )


def _thread_count():
    raw = os.environ.get("FDC_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


STUDY_COLUMNS = ("b", "trial", "error", "coverage", "draws", "seconds")


def bit_independence_study(dim, bits_list, eta, eps, trials, seed, delta=0.1,
                           n_support=400, test_n=100_000, config_kwargs=None):
    """Learning error under a fixed (b-independent) sample budget as the bit
    complexity of paired hard instances grows.

    For each b the instance shares its direction seed across the b column, so
    only per-point scales differ; the learner's budget comes from
    LearnerConfig alone.  Returns rows in STUDY_COLUMNS order; trials run on
    up to FDC_THREADS workers (per-trial seeds, merged deterministically).
    """

    def one_cell(b, trial):
        model, _ = gen_hard_instance(dim, n_support, b, eta,
                                     rng.derive_seed(seed, trial))
        config = LearnerConfig(eta=eta, eps=eps, delta=delta,
                               **(config_kwargs or {}))
        t0 = time.perf_counter()
        _, report = run_learning_trial(model, config,
                                       rng.derive_seed(seed, trial, 7),
                                       test_n=test_n)
        return {
            "b": b,
            "trial": trial,
            "error": report.final_error,
            "coverage": report.coverage,
            "draws": report.sample_count,
            "seconds": time.perf_counter() - t0,
        }

    cells = [(b, trial) for b in bits_list for trial in range(trials)]
    workers = min(_thread_count(), max(1, len(cells)))
    if workers == 1:
        return [one_cell(b, t) for b, t in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda bt: one_cell(*bt), cells))


def write_study_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(STUDY_COLUMNS))
        w.writeheader()
        for row in rows:
            w.writerow({c: row[c] for c in STUDY_COLUMNS})
