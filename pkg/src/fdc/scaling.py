"""Per-point scaling weights putting a point set into radial isotropic position.

The feasibility target, for points x spanning a k-dimensional space V with
multiplicities m(x) summing to M, is the matrix inequality

    c^2(x) x x^T  <=  ((k + delta)/M) * sum_y m(y) c^2(y) y y^T     for all x,

with the normalization c^2 >= 1.  Two solvers are provided: a fixed-point
iteration (fast; its output is only ever trusted after certification) and a
central-cut ellipsoid method driven by the spectral separation oracle
(faithful fallback).  Either way the returned weights pass the same
certificate, so correctness never depends on which solver produced them.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, IterationBudgetExceeded
from .linalg import jacobi_eigh

ELLIPSOID_N_CAP = 24


@dataclass
class ScalingWeights:
    """Certified weights c^2 (min-normalized to 1) at relaxation delta."""

    c_sq: np.ndarray
    delta: float

    def __post_init__(self):
        c = np.asarray(self.c_sq, dtype=np.float64)
        if not np.all(np.isfinite(c)):
            raise ValueError("weights must be finite")
        if c.min() < 1.0 - 1e-9:
            raise ValueError("weights must satisfy c^2 >= 1")
        object.__setattr__(self, "c_sq", c)


@dataclass
class ViolatedConstraint:
    """Witness that the scaling inequality fails at one point.

    The linear constraint (in the c^2 variables) indexed by (point_index, w):
        c^2(x) |w.x|^2 <= ((k+delta)/M) * sum_y m(y) c^2(y) |w.y|^2
    is violated by violation_gap at the candidate weights.
    """

    point_index: int
    witness: np.ndarray
    violation_gap: float


def weighted_second_moment(points, c_sq, mults=None):
    pts = np.asarray(points, dtype=np.float64)
    w = np.asarray(c_sq, dtype=np.float64)
    if mults is not None:
        w = w * np.asarray(mults, dtype=np.float64)
    return (pts * w[:, None]).T @ pts


REL_SLACK = 1e-12


def separation_oracle(points, candidate, mults=None, tau=None):
    """Most-violated spectral constraint at the candidate weights, or None.

    For each x checks M_x = ((k+delta)/M) Sigma_c - c^2(x) x x^T for
    eigenvalues below the slack; returns the most negative one's eigenvector
    as the witness direction.

    With tau=None the slack is per-constraint and purely a round-off
    allowance: REL_SLACK * (tr(scaled Sigma_c) + c^2(x)||x||^2), the natural
    scale of M_x.  A slack proportional to delta * tr(Sigma_c) is unsound once
    the weights span a wide range (it can absorb an order-one violation at a
    weight-1 point), so certification never leans on delta.  An explicit
    scalar ``tau`` is treated as an absolute threshold.
    """
    pts = np.asarray(points, dtype=np.float64)
    n, k = pts.shape
    c = np.asarray(candidate.c_sq, dtype=np.float64)
    m = np.ones(n) if mults is None else np.asarray(mults, dtype=np.float64)
    M = m.sum()
    sigma = weighted_second_moment(pts, c, m)
    scaled = ((k + candidate.delta) / M) * sigma
    mats = scaled[None, :, :] - c[:, None, None] * np.einsum("ni,nj->nij", pts, pts)
    eigvals, eigvecs = jacobi_eigh(mats)
    mins = eigvals[:, -1]
    if tau is None:
        scale = float(np.trace(scaled)) + c * np.einsum("ni,ni->n", pts, pts)
        slack = REL_SLACK * scale
    else:
        slack = np.full(n, float(tau))
    rel = mins + slack
    worst = int(np.argmin(rel))
    if rel[worst] < 0:
        w = eigvecs[worst][:, -1]
        return ViolatedConstraint(worst, w / np.linalg.norm(w), float(-mins[worst]))
    return None


def recheck_certificate(points, weights, mults=None, tol_factor=1e-9):
    """Independent eigenvalue re-check of the scaling inequality.

    Uses LAPACK (np.linalg.eigh), a different eigensolver route from the
    Jacobi-based oracle.  Returns (ok, worst_eigenvalue, threshold).
    """
    pts = np.asarray(points, dtype=np.float64)
    n, k = pts.shape
    c = np.asarray(weights.c_sq, dtype=np.float64)
    m = np.ones(n) if mults is None else np.asarray(mults, dtype=np.float64)
    M = m.sum()
    sigma = weighted_second_moment(pts, c, m)
    scaled = ((k + weights.delta) / M) * sigma
    mats = scaled[None, :, :] - c[:, None, None] * np.einsum("ni,nj->nij", pts, pts)
    mins = np.linalg.eigvalsh(mats)[:, 0]
    threshold = -tol_factor * float(np.trace(sigma))
    return bool(mins.min() >= threshold), float(mins.min()), threshold


def _normalized(c_sq):
    c = np.asarray(c_sq, dtype=np.float64)
    return c / c.min()


# Beyond this intrinsic weight range binary64 cannot resolve the constraint
# slacks (the paper's theoretical weight ceiling n^{poly(b,d)} is far outside
# floating range); solvers refuse to certify past it.
WEIGHT_RANGE_CAP = 1e10


def _unit_rows(points):
    pts = np.asarray(points, dtype=np.float64)
    norms2 = np.einsum("ni,ni->n", pts, pts)
    return pts / np.sqrt(norms2)[:, None], norms2


def fixed_point_scaling(points, delta, max_iters=4000, mults=None, damping=0.0,
                        snapshot_hook=None):
    """Fixed-point accelerator: c <- 1 / ||Sigma^{-1/2} x||, min-normalized.

    Returns certified ScalingWeights or None; None is the only failure channel
    (the caller falls back to the ellipsoid solver).  Internally the points
    are unit-normalized (the problem is invariant under per-point rescaling,
    with the weights absorbing the norms), which keeps the iteration
    well-scaled for inputs whose coordinate magnitudes span many octaves.
    ``snapshot_hook(t, c_sq, sigma_hat)`` is invoked on a sparse schedule so
    callers can inspect the dynamics (used for heavy-subspace candidates).
    """
    raw = np.asarray(points, dtype=np.float64)
    unit, norms2 = _unit_rows(raw)
    n, k = unit.shape
    m = np.ones(n) if mults is None else np.asarray(mults, dtype=np.float64)
    M = m.sum()
    c = np.ones(n)
    snapshots_at = {1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987,
                    1597, 2584}
    check_gap = 10
    last_check = -check_gap
    for t in range(1, max_iters + 1):
        sigma = weighted_second_moment(unit, c, m) / M
        jitter = 1e-30 * max(np.trace(sigma), 1e-300)
        try:
            L = np.linalg.cholesky(sigma + jitter * np.eye(k))
        except np.linalg.LinAlgError:
            if snapshot_hook is not None:
                snapshot_hook(t, c.copy(), sigma)
            return None
        sol = np.linalg.solve(L, unit.T)
        quads = np.einsum("kn,kn->n", sol, sol)
        if not np.all(quads > 0):
            return None
        c_new = 1.0 / quads
        c_new = c_new / c_new.min()
        if damping > 0:
            c_new = np.exp((1 - damping) * np.log(c_new) + damping * np.log(c))
            c_new = c_new / c_new.min()
        rel = np.max(np.abs(c_new - c) / np.maximum(c, 1e-300))
        c = c_new
        if snapshot_hook is not None and (t in snapshots_at or t == max_iters):
            snapshot_hook(t, c.copy(), weighted_second_moment(unit, c, m) / M)
        if c.max() > WEIGHT_RANGE_CAP:
            return None
        if rel < 1e-7 or t - last_check >= check_gap or t == max_iters:
            last_check = t
            cand = ScalingWeights(_normalized(c), delta)
            if separation_oracle(unit, cand, mults=m) is None:
                return ScalingWeights(_normalized(c / norms2), delta)
            if rel < 1e-13:
                # Converged but cannot certify: genuinely obstructed.
                return None
    return None


def _ellipsoid_scaling(points, delta, mults, radius, budget):
    """Central-cut ellipsoid over the c^2 variables inside [1, radius]^n.

    Expects unit-norm rows.  Returns certified weights, or raises Infeasible
    when the ellipsoid volume drops below the guaranteed feasible-box volume,
    or IterationBudgetExceeded.
    """
    pts = np.asarray(points, dtype=np.float64)
    n, k = pts.shape
    m = np.asarray(mults, dtype=np.float64)
    M = m.sum()
    center = np.full(n, 0.5 * (1.0 + radius))
    r0 = 0.5 * (radius - 1.0) * math.sqrt(n) + 1.0
    P = np.eye(n) * r0 * r0
    log_det = 2.0 * n * math.log(r0)
    # Feasible region (when one exists) contains a box of side ~ delta/(2k)
    # around a scaled solution; stop (infeasible) below that volume.
    log_ball = 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0)
    log_vol_min = n * math.log(max(delta, 1e-12) / (4.0 * k))
    last_violation = None
    for it in range(budget):
        if log_ball + 0.5 * log_det <= log_vol_min:
            raise Infeasible("ellipsoid volume exhausted", violation=last_violation)
        # Bound cuts first.
        a = None
        low = np.argmin(center)
        high = np.argmax(center)
        if center[low] < 1.0:
            a = np.zeros(n)
            a[low] = -1.0
        elif center[high] > radius:
            a = np.zeros(n)
            a[high] = 1.0
        else:
            cand = ScalingWeights(center.copy(), delta)
            viol = separation_oracle(pts, cand, mults=m)
            if viol is None:
                return ScalingWeights(_normalized(center), delta)
            last_violation = viol
            proj = pts @ viol.witness
            a = -((k + delta) / M) * m * proj * proj
            a[viol.point_index] += proj[viol.point_index] ** 2
        Pa = P @ a
        aPa = float(a @ Pa)
        if not math.isfinite(aPa):
            raise IterationBudgetExceeded("ellipsoid collapsed numerically")
        # A feasible region contains a box of side ~ delta/(4k); thinner width
        # along a cut normal is an infeasibility verdict at this radius.
        slab2 = (delta / (8.0 * k)) ** 2 * float(a @ a)
        if aPa <= slab2:
            if aPa < -16.0 * slab2:
                raise IterationBudgetExceeded("ellipsoid collapsed numerically")
            raise Infeasible("ellipsoid slab width exhausted", violation=last_violation)
        ga = Pa / math.sqrt(aPa)
        center = center - ga / (n + 1.0)
        P = (n * n / (n * n - 1.0)) * (P - (2.0 / (n + 1.0)) * np.outer(ga, ga))
        P = 0.5 * (P + P.T)
        P *= 1.0 + 1e-12
        log_det += (
            n * math.log(n * n / (n * n - 1.0))
            + math.log(max(1.0 - 2.0 / (n + 1.0), 1e-12))
            + n * 1e-12
        )
        if it % 32 == 31:
            eigs = np.linalg.eigvalsh(P)
            if eigs[0] <= (delta / (8.0 * k)) ** 2:
                raise Infeasible("ellipsoid slab width exhausted",
                                 violation=last_violation)
            log_det = float(np.sum(np.log(eigs)))
    raise IterationBudgetExceeded("ellipsoid budget exhausted without a verdict")


def solve_scaling_sdp(points, delta, mults=None, fp_budget=4000):
    """Certified scaling weights for points (coordinates in V) at relaxation delta.

    Tries the fixed-point accelerator first, then the ellipsoid method for
    small instances.  The returned weights always pass a final separation
    oracle at the tightened slack; failure raises Infeasible carrying the last
    violated constraint (a heavy subspace exists, or numerics failed).
    """
    raw = np.asarray(points, dtype=np.float64)
    n, k = raw.shape
    m = np.ones(n) if mults is None else np.asarray(mults, dtype=np.float64)
    unit, norms2 = _unit_rows(raw)
    if k == 1 or n == 1:
        w = ScalingWeights(np.ones(n), delta)
        if separation_oracle(unit, w, mults=m) is None:
            return w
        raise Infeasible("degenerate instance fails the 1-d constraint")
    for budget, damping in ((fp_budget, 0.0), (4 * fp_budget, 0.5)):
        w = fixed_point_scaling(raw, delta, max_iters=budget, mults=m, damping=damping)
        if w is not None:
            return w
    if n <= ELLIPSOID_N_CAP:
        # Volume-based Infeasible is only conclusive once the search radius is
        # maxed out: a verdict at a small radius merely rules out solutions
        # inside it, so both failure modes escalate the radius (capped at the
        # certifiable weight range).
        last = None
        radius = max(64.0, float(n * k) ** 2)
        radii = []
        while True:
            radii.append(radius)
            if radius >= WEIGHT_RANGE_CAP:
                break
            radius = min(radius * radius, WEIGHT_RANGE_CAP)
        for i, rad in enumerate(radii):
            budget = int(
                8 * n * (n + 1) * (n * (math.log(rad) + math.log(4 * k / max(delta, 1e-12))) + 10)
            )
            try:
                w = _ellipsoid_scaling(unit, delta, m, rad, budget)
                return ScalingWeights(_normalized(w.c_sq / norms2), delta)
            except (Infeasible, IterationBudgetExceeded) as exc:
                last = exc
                if i == len(radii) - 1 and isinstance(exc, Infeasible):
                    raise
        if isinstance(last, Infeasible):
            raise last
    viol = separation_oracle(unit, ScalingWeights(np.ones(n), delta), mults=m)
    raise Infeasible(
        "scaling solvers failed to certify (heavy subspace or numerical failure)",
        violation=viol,
    )
