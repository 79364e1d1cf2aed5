"""Point-set and labeled-sample containers, file ingestion, synthetic data,
and a simulated Massart example oracle.

All randomness is drawn from counter-based substreams (see fdc.rng): a draw is
a pure function of (seed, stream tag, draw index), so any prefix or batch of
draws is reproducible byte for byte and parallel draws match serial draws.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import EmptyInput, NonInteger, ParseError, ZeroPoint

# Stream tags.  Each named purpose owns a tag so draws never alias.
TAG_MARGINAL = 1
TAG_FLIP = 2
TAG_GAUSS = 3
TAG_HARD_DIR = 4
TAG_HARD_SCALE = 5
TAG_HARD_FRAME = 6
TAG_HARD_MIX = 7
TAG_HARD_COMBO = 8
TAG_WSTAR = 9
TAG_MIX_COMP = 10


def sign_pm1(t):
    """sign with sign(0) = +1, the boundary-label convention used throughout."""
    return np.where(np.asarray(t) >= 0, 1, -1).astype(np.int64)


@dataclass
class PointSet:
    """Finite multiset of nonzero integer points in Z^d."""

    dim: int
    points: np.ndarray
    bit_complexity: int = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points)
        if not np.issubdtype(pts.dtype, np.integer):
            raise NonInteger("PointSet coordinates must be integers")
        pts = pts.astype(np.int64)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ParseError(f"points shape {pts.shape} does not match dim {self.dim}")
        if pts.shape[0] == 0:
            raise EmptyInput("PointSet must contain at least one point")
        zero_rows = np.nonzero(~pts.any(axis=1))[0]
        if zero_rows.size:
            raise ZeroPoint(line=int(zero_rows[0]) + 1)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "bit_complexity", int(int(np.max(np.abs(pts))).bit_length()))

    @property
    def n(self):
        return self.points.shape[0]


@dataclass
class LabeledDataset:
    """PointSet plus one label in {-1, +1} per point."""

    base: PointSet
    labels: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.labels).astype(np.int64)
        if y.shape != (self.base.n,):
            raise ParseError(f"labels shape {y.shape} vs {self.base.n} points")
        if not np.all(np.isin(y, (-1, 1))):
            raise ParseError("labels must be -1 or +1")
        y.flags.writeable = False
        object.__setattr__(self, "labels", y)

    @property
    def n(self):
        return self.base.n


@dataclass
class MarginalSpec:
    """Distribution over integer points.

    kind = "uniform": uniform over ``support`` (a PointSet).
    kind = "gaussian": N(0, scale^2 I) rounded to the integer grid, bounded by
        2^bits; zero roundings are redrawn from the draw's own substream.
    kind = "mixture": mixture of gaussian components [(weight, scale), ...],
        discretized the same way.
    """

    kind: str
    support: PointSet = None
    scale: float = 64.0
    bits: int = 12
    components: tuple = ()

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian", "mixture"):
            raise ValueError(f"unknown marginal kind {self.kind!r}")
        if self.kind == "uniform" and self.support is None:
            raise ValueError("uniform marginal needs a support PointSet")


@dataclass
class EtaSpec:
    """Per-point flip-rate function, always bounded by the model's eta_bound.

    kind = "constant": eta(x) = value.
    kind = "margin_inverse": eta(x) = bound / (1 + |w*.x| / (s * ||x||)),
        larger flip rate close to the separator.
    kind = "table": explicit per-point rates keyed by coordinate tuple, with
        ``default`` elsewhere.
    """

    kind: str = "constant"
    value: float = 0.0
    margin_scale: float = 0.1
    table: dict = None
    default: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "margin_inverse", "table"):
            raise ValueError(f"unknown eta kind {self.kind!r}")


@dataclass
class MassartModel:
    """Ground truth: unit weight vector, flip-rate spec, and marginal."""

    w_star: np.ndarray
    eta_bound: float
    eta: EtaSpec
    marginal: MarginalSpec

    def __post_init__(self):
        w = np.asarray(self.w_star, dtype=np.float64)
        if abs(np.linalg.norm(w) - 1.0) > 1e-12:
            raise ValueError("w_star must be a unit vector (within 1e-12)")
        w.flags.writeable = False
        object.__setattr__(self, "w_star", w)
        if not (0.0 <= self.eta_bound < 0.5):
            raise ValueError("eta_bound must lie in [0, 1/2)")

    @property
    def dim(self):
        return self.w_star.shape[0]


def eta_values(model, X):
    """Vector of flip rates eta(x) for the rows of X; all <= eta_bound."""
    spec = model.eta
    n = np.asarray(X).shape[0]
    if spec.kind == "constant":
        vals = np.full(n, spec.value, dtype=np.float64)
    elif spec.kind == "margin_inverse":
        Xf = np.asarray(X, dtype=np.float64)
        norms = np.linalg.norm(Xf, axis=1)
        margins = np.abs(Xf @ model.w_star) / np.maximum(norms, 1e-300)
        vals = model.eta_bound / (1.0 + margins / spec.margin_scale)
    else:
        table = spec.table or {}
        vals = np.array(
            [table.get(tuple(int(v) for v in row), spec.default) for row in np.asarray(X)],
            dtype=np.float64,
        )
    if np.any(vals > model.eta_bound + 1e-12):
        raise ValueError("eta(x) exceeds eta_bound")
    return np.minimum(vals, model.eta_bound)


def _draw_gaussian_grid(seed, indices, dim, scale, bits, tag=TAG_GAUSS):
    """Discretized-gaussian draws: round(scale * N(0, I)) clipped to |c| < 2^bits.

    Zero roundings are redrawn deterministically from the same per-index
    substream (bounded retries, then a fixed unit vector).
    """
    idx = np.asarray(indices, dtype=np.uint64)
    lim = 2 ** int(bits) - 1
    X = np.zeros((idx.size, dim), dtype=np.int64)
    todo = np.arange(idx.size)
    for attempt in range(8):
        if todo.size == 0:
            break
        z = rng.normals(seed, tag + 16 * attempt, idx[todo], cols=dim)
        cand = np.clip(np.rint(z * scale), -lim, lim).astype(np.int64)
        ok = cand.any(axis=1)
        X[todo[ok]] = cand[ok]
        todo = todo[~ok]
    if todo.size:
        X[todo, 0] = 1
    return X


def draw_marginal(marginal, n, seed, start_index=0):
    """n points from the marginal, draws indexed start_index..start_index+n-1."""
    idx = np.arange(start_index, start_index + n, dtype=np.uint64)
    if marginal.kind == "uniform":
        rows = rng.integers(seed, TAG_MARGINAL, idx, marginal.support.n)
        return marginal.support.points[rows]
    if marginal.kind == "gaussian":
        dim = marginal.support.dim if marginal.support is not None else None
        if dim is None:
            raise ValueError("gaussian marginal needs dim via a support template")
        return _draw_gaussian_grid(seed, idx, dim, marginal.scale, marginal.bits)
    # mixture
    comps = marginal.components
    weights = np.array([w for w, _ in comps], dtype=np.float64)
    weights = np.cumsum(weights / weights.sum())
    u = rng.uniform01(seed, TAG_MIX_COMP, idx)
    comp = np.searchsorted(weights, u)
    dim = marginal.support.dim
    X = np.zeros((n, dim), dtype=np.int64)
    for c, (_, scale) in enumerate(comps):
        sel = comp == c
        if sel.any():
            X[sel] = _draw_gaussian_grid(seed, idx[sel], dim, scale, marginal.bits,
                                         tag=TAG_GAUSS + 256 * (c + 1))
    return X


def massart_draw(model, n, seed, start_index=0):
    """n i.i.d. labeled examples from the Massart oracle.

    x ~ marginal; y = sign(w*.x) flipped independently with probability eta(x);
    sign(0) = +1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    X = draw_marginal(model.marginal, n, seed, start_index=start_index)
    idx = np.arange(start_index, start_index + n, dtype=np.uint64)
    clean = sign_pm1(X.astype(np.float64) @ model.w_star)
    flips = rng.uniform01(seed, TAG_FLIP, idx) < eta_values(model, X)
    y = np.where(flips, -clean, clean)
    return LabeledDataset(PointSet(model.dim, X), y)


def _hard_directions(dim, n, bits, seed):
    """Integer direction vectors, independent of ``bits`` once bits >= 8.

    Half the directions are small random integer vectors; the other half are
    integer combinations of a low-dimensional frame plus +-1 noise, so they
    hug a low-dimensional subspace without lying in it exactly.
    """
    dir_range = 8
    i_all = np.arange(n, dtype=np.uint64)
    flat = np.arange(n * dim, dtype=np.uint64)
    dirs = (rng.integers(seed, TAG_HARD_DIR, flat, 2 * dir_range + 1) - dir_range).reshape(n, dim)
    if bits >= 8 and dim >= 2:
        kappa = max(1, dim // 3)
        fflat = np.arange(kappa * dim, dtype=np.uint64)
        frame = (rng.integers(seed, TAG_HARD_FRAME, fflat, 7) - 3).reshape(kappa, dim)
        for r in range(kappa):
            if not frame[r].any():
                frame[r, r % dim] = 1
        near = rng.uniform01(seed, TAG_HARD_MIX, i_all) < 0.5
        cflat = np.arange(n * kappa, dtype=np.uint64)
        combo = (rng.integers(seed, TAG_HARD_COMBO, cflat, 7) - 3).reshape(n, kappa)
        noise_flat = np.arange(n * dim, dtype=np.uint64)
        noise = (rng.integers(seed, TAG_HARD_COMBO + 1, noise_flat, 3) - 1).reshape(n, dim)
        near_dirs = 4 * (combo @ frame) + noise
        dirs = np.where(near[:, None], near_dirs, dirs)
    zero = ~dirs.any(axis=1)
    dirs[zero, 0] = 1
    return dirs


def gen_hard_instance(dim, n, bits, eta, seed, eta_kind="constant"):
    """Hard bit-complexity instance: common directions, per-point power-of-two
    scales spread up to 2^bits.

    Direction vectors, the target w*, and all labels depend only on
    (dim, n, seed), never on bits, so paired instances across bit budgets have
    identical direction sets and identical labels.
    """
    if bits < 4:
        raise ValueError("bits must be >= 4")
    if bits > 62:
        raise ValueError("bits above 62 would overflow int64 coordinates")
    dirs = _hard_directions(dim, n, bits, seed)
    b_dir = int(int(np.max(np.abs(dirs))).bit_length())
    head = max(0, bits - b_dir)
    i_all = np.arange(n, dtype=np.uint64)
    s = np.floor(rng.uniform01(seed, TAG_HARD_SCALE, i_all) * (head + 1)).astype(np.int64)
    s = np.minimum(s, head)
    points = dirs * (np.int64(1) << s)[:, None]

    w = rng.normals(seed, TAG_WSTAR, np.arange(1, dtype=np.uint64), cols=dim)[0]
    w = w / np.linalg.norm(w)

    base = PointSet(dim, points)
    if eta_kind == "constant":
        spec = EtaSpec("constant", value=eta)
    else:
        spec = EtaSpec(eta_kind)
    model = MassartModel(w, eta, spec, MarginalSpec("uniform", support=base))

    clean = sign_pm1(dirs.astype(np.float64) @ w)
    flips = rng.uniform01(seed, TAG_FLIP, i_all) < eta_values(model, dirs)
    y = np.where(flips, -clean, clean)
    return model, LabeledDataset(base, y)


# ---------------------------------------------------------------------------
# File ingestion / serialization
# ---------------------------------------------------------------------------

def _parse_int(token, line_no):
    t = token.strip()
    try:
        return int(t)
    except ValueError:
        raise NonInteger(f"coordinate {t!r} is not an integer", line=line_no) from None


def _read_csv_rows(path):
    """Raw rows with 1-based line numbers; detects and skips a header row."""
    rows = []
    with open(path, newline="") as fh:
        for line_no, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            rows.append((line_no, [c.strip() for c in rec]))
    if rows:
        first = rows[0][1][0]
        try:
            int(first)
        except ValueError:
            rows = rows[1:]
    return rows


def _rows_to_array(rows, labeled):
    if not rows:
        raise ParseError("no data rows")
    width = len(rows[0][1])
    if labeled and width < 2:
        raise ParseError("labeled file needs at least 2 columns", line=rows[0][0])
    pts, labels = [], []
    for line_no, rec in rows:
        if len(rec) != width:
            raise ParseError(f"expected {width} columns, got {len(rec)}", line=line_no)
        vals = [_parse_int(tok, line_no) for tok in rec]
        if labeled:
            if vals[-1] not in (-1, 1):
                raise ParseError(f"label must be -1 or 1, got {vals[-1]}", line=line_no)
            labels.append(vals[-1])
            vals = vals[:-1]
        if not any(vals):
            raise ZeroPoint(line=line_no)
        pts.append(vals)
    X = np.array(pts, dtype=np.int64)
    return X, (np.array(labels, dtype=np.int64) if labeled else None)


def load_points(path, format=None):
    """PointSet from a CSV or JSON file; every column is a coordinate."""
    fmt = format or ("json" if str(path).endswith(".json") else "csv")
    if fmt == "csv":
        X, _ = _rows_to_array(_read_csv_rows(path), labeled=False)
        return PointSet(X.shape[1], X)
    with open(path) as fh:
        doc = json.load(fh)
    pts = doc["points"]
    for i, row in enumerate(pts):
        for v in row:
            if not isinstance(v, int):
                raise NonInteger(f"coordinate {v!r} is not an integer", line=i + 1)
        if not any(row):
            raise ZeroPoint(line=i + 1)
    X = np.array(pts, dtype=np.int64)
    return PointSet(int(doc.get("dim", X.shape[1])), X)


def load_labeled(path, format=None):
    """LabeledDataset from CSV (last column = label) or JSON."""
    fmt = format or ("json" if str(path).endswith(".json") else "csv")
    if fmt == "csv":
        X, y = _rows_to_array(_read_csv_rows(path), labeled=True)
        return LabeledDataset(PointSet(X.shape[1], X), y)
    with open(path) as fh:
        doc = json.load(fh)
    X = np.array(doc["points"], dtype=np.int64)
    y = np.array(doc["labels"], dtype=np.int64)
    return LabeledDataset(PointSet(int(doc.get("dim", X.shape[1])), X), y)


def save_points_csv(path, point_set):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in point_set.points:
            w.writerow([int(v) for v in row])


def save_labeled_csv(path, dataset, header=False):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"x{i}" for i in range(dataset.base.dim)] + ["y"])
        for row, label in zip(dataset.base.points, dataset.labels):
            w.writerow([int(v) for v in row] + [int(label)])
