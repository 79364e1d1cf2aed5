"""Halfspace learning under Massart noise with Forster preprocessing.

The driver loop conditions on the region the current partial classifier
abstains on, Forster-transforms a conditioned sample (so the mapped points are
unit-norm with second moment pinned near I/k, hence no large outliers), runs
the weak learner there, and chains the resulting one-band stages until the
abstention mass drops below eps/3.  Residual abstentions resolve to +1; the
proof charges them wholesale, so the resolved label is immaterial.

The weak learner minimizes the leaky surrogate
    L(w) = E[ max(lambda * m, (1 - lambda) * m) ],   m = -y (w . x),
(leak lambda = eta + eps'/4) by projected subgradient descent over the unit
ball, then picks the widest score band whose validation conditional error
clears eta + eps' - eps'/8.

Every point the learner touches is first reduced to its primitive direction
(divided by the gcd of its coordinates, sign kept).  Labels of homogeneous
halfspaces and every stage decision are invariant under positive rescaling,
so this is semantics-free, and it makes runs on inputs that differ only in
per-point scales bit-identical.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .dataset import PointSet, sign_pm1
from .errors import (
    CoverageFailure,
    DegenerateSecondMoment,
    IterationCapExceeded,
)
from .exact import membership_mask
from .linalg import Subspace
from .transform import forster_transform, mapped_unit_rows

TAG_LEARN = 101


def canonicalize(X):
    """Primitive directions: each row divided by the gcd of its coordinates."""
    X = np.asarray(X, dtype=np.int64)
    g = np.gcd.reduce(np.abs(X), axis=1)
    np.maximum(g, 1, out=g)
    return X // g[:, None]


@dataclass
class OutlierBound:
    gamma: float

    def __post_init__(self):
        if not self.gamma >= 1.0 - 1e-9:
            raise ValueError("gamma must be >= 1")


def outlier_bound(vectors):
    """Smallest Gamma such that no input is a Gamma-outlier.

    Equals max_x sqrt(x^T Sigma^{-1} x) with Sigma the empirical second-moment
    matrix: the definitional supremum over directions v of |v.x| /
    sqrt(E|v.X|^2) is attained at v = Sigma^{-1} x (Rayleigh quotient).
    """
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DegenerateSecondMoment("need a nonempty 2-d array of vectors")
    sigma = (X.T @ X) / X.shape[0]
    eigvals = np.linalg.eigvalsh(sigma)
    if eigvals[0] <= 1e-12 * max(eigvals[-1], 1e-300):
        raise DegenerateSecondMoment("second-moment matrix is singular on the span")
    sol = np.linalg.solve(sigma, X.T)
    quad = np.einsum("in,ni->i", X, sol)
    return OutlierBound(float(np.sqrt(quad.max())))


@dataclass
class Stage:
    """One chained band rule: claim x in V with |w . f_A(x)| >= threshold."""

    subspace: Subspace
    transform: np.ndarray
    w: np.ndarray
    threshold: float
    ambient_map: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.asarray(self.transform, dtype=np.float64)
        self.ambient_map = A @ self.subspace.basis.T  # (k, d): x -> A * coords(x)


@dataclass
class PartialClassifier:
    """Chain of stages mapping a point to {-1, *, +1}; * encoded as 0.

    A point is claimed by the first stage j with x in V_j (exact membership)
    and |w_j . f_{A_j}(x)| >= t_j; the claim is sign(w_j . f_{A_j}(x)) with
    sign(0) = +1.  ``predict`` resolves residual * to default_label.
    """

    stages: list
    default_label: int = 1

    def evaluate(self, X):
        Xc = canonicalize(X)
        n, d = Xc.shape
        out = np.zeros(n, dtype=np.int64)
        remaining = np.ones(n, dtype=bool)
        for stage in self.stages:
            if not remaining.any():
                break
            idx = np.nonzero(remaining)[0]
            Xi = Xc[idx]
            if stage.subspace.dim == d:
                member = np.ones(idx.size, dtype=bool)
            else:
                member = membership_mask(
                    stage.subspace.int_rows, Xi, ortho_basis=stage.subspace.basis
                )
            imgs = Xi.astype(np.float64) @ stage.ambient_map.T
            norms = np.linalg.norm(imgs, axis=1)
            scores = imgs @ stage.w
            claim = member & (norms > 0) & (np.abs(scores) >= stage.threshold * norms)
            labels = sign_pm1(scores)
            take = idx[claim]
            out[take] = labels[claim]
            remaining[take] = False
        return out

    def predict(self, X):
        out = self.evaluate(X)
        return np.where(out == 0, self.default_label, out)

    def star_mask(self, X):
        return self.evaluate(X) == 0


@dataclass
class LearnerConfig:
    """Sample sizes and derived parameters; all b-independent by construction."""

    eta: float
    eps: float
    delta: float
    C: float = 64.0
    transform_delta: float = 0.25
    gd_iters: int = 400

    def __post_init__(self):
        if not (0.0 <= self.eta < 0.5):
            raise ValueError("eta must lie in [0, 1/2)")
        if not (0.0 < self.eps < 1.0 and 0.0 < self.delta < 1.0):
            raise ValueError("eps and delta must lie in (0, 1)")

    def check_sample_size(self, d):
        return math.ceil(self.C * math.log(max(d * self.eps / self.delta, 2.0)) / self.eps ** 2)

    def forster_sample_size(self, d):
        return math.ceil(self.C * d ** 4 * math.log(max(1.0 / self.delta, 2.0)))

    def gamma(self, k):
        return 4.0 * k

    @property
    def eps_prime(self):
        return self.eps / 2.0

    def iteration_cap(self, d):
        return math.ceil((48.0 * d / self.eps) * math.log(6.0 / self.eps)) * (
            1 + math.ceil(math.log(1.0 / self.delta))
        )

    def delta_prime(self, d):
        return self.delta / (d * self.iteration_cap(d) * 100.0)

    def weak_sample_size(self, d):
        dp = self.delta_prime(d)
        return math.ceil(4.0 * (d + math.log(1.0 / dp)) / self.eps_prime ** 2)

    @property
    def rejection_budget_per_point(self):
        return math.ceil(12.0 / self.eps)


@dataclass
class WeakStageResult:
    w: np.ndarray
    threshold: float
    val_coverage: float
    val_error: float
    gamma_empirical: float


def _band_select(scores, y, eta, eps_prime, min_claim):
    """Widest prefix of |score|-sorted validation points whose conditional
    error clears the selection threshold; returns (threshold, coverage, error)
    or None."""
    m = scores.shape[0]
    target = eta + eps_prime - eps_prime / 8.0
    absval = np.abs(scores)
    order = np.argsort(-absval, kind="stable")
    pred = sign_pm1(scores[order])
    wrong = (pred != y[order]).astype(np.float64)
    cum_err = np.cumsum(wrong) / np.arange(1, m + 1)
    js = np.arange(1, m + 1)
    admissible = (cum_err < target) & (js >= min_claim)
    if not admissible.any():
        return None
    j = int(np.nonzero(admissible)[0][-1]) + 1  # widest admissible prefix
    if j >= m:
        t = 0.0
    else:
        t = 0.5 * (absval[order][j - 1] + absval[order][j])
        if t >= absval[order][j - 1]:
            t = absval[order][j - 1]
    claimed = absval >= t
    err = float(np.mean(sign_pm1(scores[claimed]) != y[claimed]))
    cov = float(np.mean(claimed))
    if err >= target and j > min_claim:
        # ties dragged extra points in; fall back to the exact prefix value
        t = float(absval[order][j - 1])
        claimed = absval >= t
        err = float(np.mean(sign_pm1(scores[claimed]) != y[claimed]))
        cov = float(np.mean(claimed))
    return float(t), cov, err


def weak_partial_learner(F, y, eta, gamma, eps_prime, delta_prime, seed=0,
                         gd_iters=400):
    """One band-rule partial classifier stage on mapped (unit-norm) samples.

    F: (m, k) float rows with ||f|| = 1; labels follow a homogeneous halfspace
    with Massart noise <= eta and the empirical outlier bound should not
    exceed gamma.  Returns a WeakStageResult whose validation conditional
    error is below eta + eps' - eps'/8 with coverage at least 1e-3, or raises
    CoverageFailure.
    """
    F = np.asarray(F, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    m, k = F.shape
    if m < 8:
        raise CoverageFailure("too few samples for the weak learner")
    half = m // 2
    Ftr, ytr = F[:half], y[:half]
    Fval, yval = F[half:], y[half:]
    try:
        gamma_emp = outlier_bound(Ftr).gamma
    except DegenerateSecondMoment:
        gamma_emp = float("inf")

    lam = min(eta + eps_prime / 4.0, 0.499)
    yx = ytr[:, None] * Ftr
    if yx.shape[0] > 80_000:
        yx = yx[:80_000]
    w0 = yx.mean(axis=0)
    n0 = np.linalg.norm(w0)
    w0 = w0 / n0 if n0 > 0 else np.eye(k)[0]

    w = w0.copy()
    best_w = w0.copy()
    best_loss = np.inf
    for t in range(gd_iters):
        margins = -(yx @ w)
        slope = np.where(margins > 0, 1.0 - lam, lam)
        loss = float(np.mean(np.maximum(lam * margins, (1.0 - lam) * margins)))
        if loss < best_loss:
            best_loss = loss
            best_w = w.copy()
        grad = -(slope[:, None] * yx).mean(axis=0)
        w = w - (0.5 / math.sqrt(t + 1.0)) * grad
        nw = np.linalg.norm(w)
        if nw > 1.0:
            w = w / nw

    candidates = [best_w, w, w0]
    min_claim = max(1, math.ceil(1e-3 * Fval.shape[0]))
    best = None
    for cand in candidates:
        nc = np.linalg.norm(cand)
        if nc == 0:
            continue
        cand = cand / nc
        sel = _band_select(Fval @ cand, yval, eta, eps_prime, min_claim)
        if sel is None:
            continue
        t_band, cov, err = sel
        if best is None or cov > best[2]:
            best = (cand, t_band, cov, err)
    if best is None:
        raise CoverageFailure(
            "no band met the coverage floor at the required conditional error"
        )
    cand, t_band, cov, err = best
    return WeakStageResult(cand, t_band, cov, err, gamma_emp)


class ModelOracle:
    """Sequential example oracle over a MassartModel; single consumer.

    Draw i is a pure function of (seed, i), so the draw sequence is
    reproducible and independent of batching.  For uniform-support marginals
    the indexed interface exposes which support row each draw hit, letting the
    driver evaluate classifiers once per support row instead of once per draw;
    the realized (x, y) stream is bit-identical to ``draw``.
    """

    def __init__(self, model, seed):
        self.model = model
        self.seed = seed
        self.count = 0

    @property
    def support(self):
        if self.model.marginal.kind == "uniform":
            return self.model.marginal.support.points
        return None

    def draw(self, n):
        from .dataset import massart_draw

        ds = massart_draw(self.model, n, self.seed, start_index=self.count)
        self.count += n
        return ds.base.points, ds.labels

    def draw_indexed(self, n):
        from .dataset import TAG_MARGINAL

        if self.support is None:
            raise ValueError("indexed draws need a uniform-support marginal")
        gidx = np.arange(self.count, self.count + n, dtype=np.uint64)
        self.count += n
        rows = rng.integers(self.seed, TAG_MARGINAL, gidx, self.support.shape[0])
        return rows, gidx

    def labels_for(self, rows, gidx):
        from .dataset import TAG_FLIP, eta_values, sign_pm1

        X = self.support[rows]
        clean = sign_pm1(X.astype(np.float64) @ self.model.w_star)
        flips = rng.uniform01(self.seed, TAG_FLIP, gidx) < eta_values(self.model, X)
        return np.where(flips, -clean, clean)


class DatasetOracle:
    """Resamples rows (with replacement) of a fixed labeled dataset."""

    def __init__(self, dataset, seed):
        self.X = dataset.base.points
        self.y = dataset.labels
        self.seed = seed
        self.count = 0

    @property
    def support(self):
        return self.X

    def draw(self, n):
        rows, _ = self.draw_indexed(n)
        return self.X[rows], self.y[rows]

    def draw_indexed(self, n):
        gidx = np.arange(self.count, self.count + n, dtype=np.uint64)
        self.count += n
        rows = rng.integers(self.seed, TAG_LEARN, gidx, self.X.shape[0])
        return rows, gidx

    def labels_for(self, rows, gidx):
        return self.y[rows]


def _rejection_draw(oracle, classifier, need, budget_draws, extra_filter=None):
    """Accumulate ``need`` oracle draws with h(x) = * (and the optional extra
    filter); returns (X, y) or None once budget_draws have been consumed."""
    got_X, got_y = [], []
    got = 0
    used = 0
    while got < need and used < budget_draws:
        batch = int(min(max(65536, need), budget_draws - used))
        X, y = oracle.draw(batch)
        used += batch
        keep = classifier.star_mask(X) if classifier.stages else np.ones(len(y), bool)
        if extra_filter is not None:
            keep &= extra_filter(X)
        got_X.append(X[keep])
        got_y.append(y[keep])
        got += int(keep.sum())
    if got < need:
        return None
    X = np.concatenate(got_X)[:need]
    y = np.concatenate(got_y)[:need]
    return X, y


def _rejection_draw_indexed(oracle, keep_support, need, budget_draws):
    """Indexed-oracle variant: accept draws whose support row passes the
    precomputed mask.  Same batch schedule and draw accounting as the generic
    path; returns (support_rows, draw_indices) or None."""
    rows_acc, gidx_acc = [], []
    got = 0
    used = 0
    while got < need and used < budget_draws:
        batch = int(min(max(65536, need), budget_draws - used))
        rows, gidx = oracle.draw_indexed(batch)
        used += batch
        m = keep_support[rows]
        rows_acc.append(rows[m])
        gidx_acc.append(gidx[m])
        got += int(m.sum())
    if got < need:
        return None
    rows = np.concatenate(rows_acc)[:need]
    gidx = np.concatenate(gidx_acc)[:need]
    return rows, gidx


def learn_halfspace(oracle, config, seed, dim=None):
    """Algorithm-1 driver: returns (PartialClassifier with * -> +1, telemetry).

    Loops while the empirical abstention mass on a fresh check sample exceeds
    eps/3: draws a conditioned sample, Forster-transforms it (certificate
    lambda_min >= 1/(k + transform_delta) > 1/(2k)), runs the weak learner on
    the mapped conditioned distribution with Gamma = 4k, eps' = eps/2, and
    extends the chain.  Rejection-budget exhaustion means the uncovered mass
    collapsed and exits the loop; exceeding the iteration cap raises.
    """
    if dim is None:
        X0, _ = oracle.draw(1)
        dim = X0.shape[1]
    d = dim
    check_n = config.check_sample_size(d)
    forster_n = config.forster_sample_size(d)
    weak_n = 2 * config.weak_sample_size(d)
    cap = config.iteration_cap(d)
    eps = config.eps
    budget_fac = config.rejection_budget_per_point
    support = getattr(oracle, "support", None)
    indexed = support is not None and hasattr(oracle, "draw_indexed")

    classifier = PartialClassifier([], default_label=1)
    telemetry = []
    for it in range(cap):
        if indexed:
            star_support = (
                classifier.star_mask(support)
                if classifier.stages
                else np.ones(support.shape[0], dtype=bool)
            )
            rows_c, _ = oracle.draw_indexed(check_n)
            p_hat = float(np.mean(star_support[rows_c]))
        else:
            Xc, _ = oracle.draw(check_n)
            p_hat = float(np.mean(classifier.star_mask(Xc)))
        record = {"iteration": it, "uncovered": p_hat}
        if p_hat <= eps / 3.0:
            record["exit"] = "covered"
            telemetry.append(record)
            return classifier, telemetry

        if indexed:
            drawn = _rejection_draw_indexed(oracle, star_support, forster_n,
                                            forster_n * budget_fac)
        else:
            drawn = _rejection_draw(oracle, classifier, forster_n,
                                    forster_n * budget_fac)
        if drawn is None:
            record["exit"] = "rejection_budget"
            telemetry.append(record)
            return classifier, telemetry
        if indexed:
            # Compressed multiset: the draw only hit support rows.
            hits = np.bincount(drawn[0], minlength=support.shape[0])
            present = np.nonzero(hits > 0)[0]
            piece = forster_transform(
                PointSet(d, canonicalize(support[present])),
                config.transform_delta, counts=hits[present],
            )
        else:
            piece = forster_transform(PointSet(d, canonicalize(drawn[0])),
                                      config.transform_delta)
        V, A, k = piece.subspace, piece.transform, piece.subspace.dim
        record["piece"] = {
            "dim": k,
            "lambda_min": piece.certificate[0],
            "lambda_max": piece.certificate[1],
        }

        def in_V(X, _V=V):
            return membership_mask(_V.int_rows, canonicalize(X),
                                   ortho_basis=_V.basis)

        if indexed:
            keep = star_support
            if k < d:
                keep = keep & in_V(support)
            pool = _rejection_draw_indexed(oracle, keep, weak_n,
                                           weak_n * budget_fac * 2 * d)
            if pool is not None:
                rows_w, gidx_w = pool
                yw = oracle.labels_for(rows_w, gidx_w)
                sel = np.nonzero(keep)[0]
                F_support = np.zeros((support.shape[0], k))
                F_support[sel] = mapped_unit_rows(
                    A, canonicalize(support[sel]).astype(np.float64) @ V.basis
                )
                F = F_support[rows_w]
        else:
            pool = _rejection_draw(oracle, classifier, weak_n,
                                   weak_n * budget_fac * 2 * d,
                                   extra_filter=None if k == d else in_V)
            if pool is not None:
                Xw, yw = pool
                F = mapped_unit_rows(
                    A, canonicalize(Xw).astype(np.float64) @ V.basis
                )
        if pool is None:
            record["exit"] = "rejection_budget"
            telemetry.append(record)
            return classifier, telemetry
        stage_res = weak_partial_learner(
            F, yw, config.eta, config.gamma(k), config.eps_prime,
            config.delta_prime(d), seed=rng.derive_seed(seed, it),
            gd_iters=config.gd_iters,
        )
        classifier = PartialClassifier(
            classifier.stages + [Stage(V, A, stage_res.w, stage_res.threshold)],
            default_label=1,
        )
        record["stage"] = {
            "coverage": stage_res.val_coverage,
            "conditional_error": stage_res.val_error,
            "gamma_empirical": stage_res.gamma_empirical,
        }
        telemetry.append(record)
    raise IterationCapExceeded(f"loop did not terminate within {cap} iterations")


@dataclass
class EvalReport:
    error_claimed: float
    coverage: float
    total_error: float


def evaluate_classifier(classifier, test):
    """Empirical misclassification on claimed points, claimed fraction, and
    total error with * resolved to the classifier's default label."""
    X, y = test.base.points, test.labels
    partial = classifier.evaluate(X)
    claimed = partial != 0
    coverage = float(np.mean(claimed))
    if claimed.any():
        error_claimed = float(np.mean(partial[claimed] != y[claimed]))
    else:
        error_claimed = 0.0
    resolved = np.where(partial == 0, classifier.default_label, partial)
    total_error = float(np.mean(resolved != y))
    return EvalReport(error_claimed, coverage, total_error)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def classifier_to_dict(classifier, config=None, telemetry=None):
    doc = {
        "default_label": classifier.default_label,
        "stages": [
            {
                "subspace_basis": s.subspace.basis.tolist(),
                "subspace_int_rows": [list(map(int, r)) for r in (s.subspace.int_rows or [])],
                "transform": np.asarray(s.transform).tolist(),
                "w": np.asarray(s.w).tolist(),
                "threshold": float(s.threshold),
            }
            for s in classifier.stages
        ],
    }
    if config is not None:
        doc["config"] = {
            "eta": config.eta, "eps": config.eps, "delta": config.delta,
            "C": config.C, "transform_delta": config.transform_delta,
        }
    if telemetry is not None:
        doc["telemetry"] = telemetry
    return doc


def classifier_from_dict(doc):
    stages = []
    for s in doc["stages"]:
        basis = np.asarray(s["subspace_basis"], dtype=np.float64)
        int_rows = [tuple(r) for r in s.get("subspace_int_rows", [])] or None
        sub = Subspace(basis.shape[0], basis, int_rows=int_rows)
        stages.append(
            Stage(sub, np.asarray(s["transform"], dtype=np.float64),
                  np.asarray(s["w"], dtype=np.float64), float(s["threshold"]))
        )
    return PartialClassifier(stages, default_label=int(doc.get("default_label", 1)))
