"""Joint time-independent generator fit across a sequence of snapshots.

A sequence of tomographic snapshots (M_c, t_c) is compatible with
Markovian dynamics only if one fixed generator X reproduces every
snapshot at once: exp(t_c X) must land within epsilon of each M_c.  The
joint program minimizes the summed log-space misfit

    sum_c || t_c X - (L_mc^c)^Gamma ||_F

over hermitian trace-compatible cone-feasible X, with each term also
capped by a trust radius delta, and L_mc^c ranging over logarithm
branches of M_c.  The accepted candidate is the one with the smallest
summed snapshot distance, provided every individual snapshot distance
beats epsilon (the running best starts at q*epsilon, so a candidate must
average below epsilon per snapshot to count at all).

Degenerate snapshots add one wrinkle: a basis repaired on one snapshot
is only usable if the other snapshots' clustered subspaces agree with
it.  ``subspace_compatibility`` quantifies that agreement as a sum of
Frobenius gaps between span projectors, to be compared against a
tolerance budget scaled with the series length and the measurement
noise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import solver
from .channels import is_lindbladian
from .errors import DimensionMismatch, InconsistentClusters, OutOfRange
from .fitting import (
    BranchPolicy,
    FitResult,
    enumerate_branches,
    _branch_targets,
    _checked_log,
    _snapshot_matrix,
)
from .linalg import expm, frobenius, gamma_involution, side_dim
from .nonmarkov import DeltaSweep
from .preprocess import DEFAULT_PRECISION, _cluster_sets

__all__ = [
    "SnapshotSeries",
    "CompatibilityCheck",
    "subspace_compatibility",
    "best_fit_multi",
]

COMPLEX_KIND = "complex"
REAL_KIND = "real"

#: Tolerance of the is-it-really-a-Lindbladian audit on the winner.
VERIFY_TOL = 1e-7


@dataclass(frozen=True)
class SnapshotSeries:
    """Snapshots M_c at strictly increasing positive times t_c.

    A meaningful series has at least two snapshots; a single-snapshot
    series is still accepted and makes the joint driver collapse to the
    plain single-snapshot program (used as a consistency check).
    """

    snapshots: Sequence
    times: Sequence[float]

    @property
    def count(self) -> int:
        return len(self.snapshots)

    def matrix(self, c: int) -> np.ndarray:
        return _snapshot_matrix(self.snapshots[c])

    def validate(self) -> None:
        if self.count < 1:
            raise OutOfRange("a series needs at least one snapshot")
        if len(self.times) != self.count:
            raise DimensionMismatch(
                f"{self.count} snapshots but {len(self.times)} times"
            )
        shape = self.matrix(0).shape
        side_dim(shape[0])
        for c in range(self.count):
            if self.matrix(c).shape != shape:
                raise DimensionMismatch(
                    f"snapshot {c} has shape {self.matrix(c).shape}, "
                    f"expected {shape}"
                )
        t = [float(v) for v in self.times]
        if t[0] <= 0 or any(b <= a for a, b in zip(t, t[1:])):
            raise OutOfRange(
                f"times must be positive and strictly increasing, got {t}"
            )


@dataclass(frozen=True)
class CompatibilityCheck:
    """Budgets for cross-snapshot agreement of clustered subspaces.

    ``sigma_complex`` caps the summed projector gaps of a complex cluster
    and its conjugate partner; ``sigma_real`` caps the single sum for a
    real cluster.  ``from_error_estimate`` sets both to half of
    (series length) x (cluster size) x (per-snapshot error), which keeps
    the per-snapshot, per-dimension allowance at half the noise scale.
    """

    sigma_complex: float
    sigma_real: float

    def validate(self) -> None:
        if self.sigma_complex <= 0 or self.sigma_real <= 0:
            raise OutOfRange(
                "tolerances must be positive, got "
                f"({self.sigma_complex}, {self.sigma_real})"
            )

    @classmethod
    def from_error_estimate(
        cls, count: int, cluster_size: int, error: float
    ) -> "CompatibilityCheck":
        tol = 0.5 * count * cluster_size * error
        return cls(sigma_complex=tol, sigma_real=tol)


def _span_projector(columns: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(columns)
    return q @ q.conj().T


def _projector_rank(projector: np.ndarray) -> int:
    return int(round(float(np.trace(projector).real)))


def _cluster_spans(matrix: np.ndarray, p: float, kind: str) -> list:
    """Span projectors of all size->=2 clusters of the requested class.

    Uses the plain (right) eigendecomposition: subspace extraction does
    not need left eigenvectors and must tolerate exactly degenerate
    spectra, which the simple-spectrum path would reject.
    """
    lam, vecs = np.linalg.eig(matrix)
    pos_sets, neg_sets, cpx_sets, _ = _cluster_sets(lam, p)
    sets = cpx_sets if kind == COMPLEX_KIND else pos_sets + neg_sets
    return [_span_projector(vecs[:, list(s)]) for s in sets]


def _closest_span(spans: list, target: np.ndarray, size: int) -> Optional[float]:
    """Smallest Frobenius gap to ``target`` among spans of rank ``size``."""
    gaps = [
        float(frobenius(s - target))
        for s in spans
        if _projector_rank(s) == size
    ]
    return min(gaps) if gaps else None


def subspace_compatibility(
    series: SnapshotSeries,
    projectors: Sequence[np.ndarray],
    check: CompatibilityCheck,
    kind: str = COMPLEX_KIND,
    precision: float = DEFAULT_PRECISION,
) -> bool:
    """Whether one snapshot's repaired cluster basis fits the whole series.

    ``projectors`` are orthogonal projectors onto the candidate spans: for
    a complex cluster the pair (span of the basis, span of its adjoints);
    for a real cluster any splitting (e.g. pair span, adjoint span,
    self-adjoint span) whose sum projects onto the full cluster subspace.
    Each snapshot contributes the gap between the candidate projector and
    its own closest same-size cluster subspace; the series passes when the
    summed gaps stay within the budget.  A snapshot with no cluster of the
    matching size means the degeneracy pattern is not shared at all.
    """
    series.validate()
    check.validate()
    if kind not in (COMPLEX_KIND, REAL_KIND):
        raise OutOfRange(f"kind must be complex or real, got {kind!r}")
    if kind == COMPLEX_KIND:
        if len(projectors) != 2:
            raise DimensionMismatch(
                "complex clusters need the (span, adjoint span) projector "
                f"pair, got {len(projectors)} projectors"
            )
        targets = [np.asarray(p, dtype=complex) for p in projectors]
        budget = check.sigma_complex
    else:
        if not projectors:
            raise DimensionMismatch("no candidate projectors supplied")
        targets = [sum(np.asarray(p, dtype=complex) for p in projectors)]
        budget = check.sigma_real
    sizes = [_projector_rank(t) for t in targets]

    total = 0.0
    for c in range(series.count):
        spans = _cluster_spans(series.matrix(c), precision, kind)
        for target, size in zip(targets, sizes):
            gap = _closest_span(spans, target, size)
            if gap is None:
                raise InconsistentClusters(
                    f"snapshot {c} shows no {size}-eigenvalue "
                    f"{kind} cluster"
                )
            total += gap
    return total <= budget


def _joint_assignments(
    policy: BranchPolicy, count: int, dim: int, restrict: bool
):
    """Branch vectors per snapshot, enumerated jointly.

    The default keeps the all-zero assignment plus every assignment where
    exactly one snapshot moves to a branch with entries in {-1, 0, 1}; the
    full product grid over per-snapshot enumerations is exponentially
    larger and only worth it when explicitly requested.
    """
    zero = (0,) * dim
    if restrict:
        yield (zero,) * count
        inner = BranchPolicy(
            m_max=min(policy.m_max, 1), max_branches=policy.max_branches
        )
        for c in range(count):
            for m in enumerate_branches(inner, dim):
                if m == zero:
                    continue
                yield tuple(m if cc == c else zero for cc in range(count))
    else:
        per = [list(enumerate_branches(policy, dim)) for _ in range(count)]
        yield from itertools.product(*per)


def best_fit_multi(
    series: SnapshotSeries,
    epsilon: float,
    policy: Optional[BranchPolicy] = None,
    sweep: Optional[DeltaSweep] = None,
    settings: Optional[solver.SolverSettings] = None,
    *,
    delta_step: float = 0.01,
    restrict_branches: bool = True,
) -> Optional[FitResult]:
    """One generator for the whole series, or None when none fits.

    Returns the joint solution with the smallest summed snapshot
    distance among those where every snapshot individually lands within
    epsilon.  The trust radius follows the first snapshot's logarithm
    (the radius-from-epsilon relation does not single out a snapshot;
    reports flag this choice), and the returned distance is the sum over
    the series.  The winning branch assignment is returned flattened,
    snapshot by snapshot, so a single-snapshot series reports the plain
    branch vector.
    """
    if epsilon <= 0:
        raise OutOfRange(f"epsilon must be positive, got {epsilon}")
    series.validate()
    if policy is None:
        policy = BranchPolicy()
    q = series.count
    times = [float(t) for t in series.times]
    mats = [series.matrix(c) for c in range(q)]
    n = mats[0].shape[0]
    d = side_dim(n)

    logs = [_checked_log(m) for m in mats]
    if sweep is None:
        sweep = DeltaSweep.from_epsilon(epsilon, frobenius(logs[0][1]), delta_step)
    deltas = sweep.grid()

    # Per-snapshot branch targets are cached: a restricted assignment
    # reuses the zero-branch target for every snapshot but one.
    target_cache: list[dict] = [{} for _ in range(q)]

    def target(c: int, m: tuple) -> np.ndarray:
        if m not in target_cache[c]:
            spectral, l0 = logs[c]
            branch = np.array([m], dtype=int)
            target_cache[c][m] = _branch_targets(l0, spectral, branch)[0]
        return target_cache[c][m]

    assignments = list(_joint_assignments(policy, q, n, restrict_branches))

    xi = q * epsilon
    best: Optional[FitResult] = None
    for delta in deltas:
        for assignment in assignments:
            targets = [target(c, assignment[c]) for c in range(q)]
            report = solver.solve_joint_fit(
                targets, times, d, float(delta), settings
            )
            if report.status == solver.INFEASIBLE:
                continue
            generator = gamma_involution(report.x_opt)
            exps = expm(np.array(times)[:, None, None] * generator[None])
            dists = [
                float(frobenius(mats[c] - exps[c])) for c in range(q)
            ]
            distance = sum(dists)
            if max(dists) < epsilon and distance < xi:
                if is_lindbladian(generator, tol=VERIFY_TOL).ok:
                    xi = distance
                    best = FitResult(
                        lindbladian=generator,
                        distance=distance,
                        branch=tuple(itertools.chain.from_iterable(assignment)),
                    )
    return best
