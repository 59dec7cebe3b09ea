"""White-noise non-Markovianity: minimal noise rate and Markovianity score.

A snapshot M that admits no Lindbladian log can still be "almost Markovian":
the measure asks for the smallest rate mu such that some logarithm branch,
after adding white noise at rate mu, satisfies all Lindblad conditions while
its exponential stays within epsilon of M.  Operationally this is a sweep
over trust radii delta and logarithm branches; each grid point solves the
noise-minimization program and a candidate is accepted only when the
exponential check against the raw snapshot passes.

The module also carries a closed-form estimate for channels with real,
positive, well-separated spectra (one eigenvalue near 1): filter the
snapshot's eigenvectors down to an exactly hermiticity- and trace-preserving
generator, then read the noise rate straight off the negative part of its
Choi-side compression.  That estimate serves as an independent check on the
sweep and as a cheap epsilon suggestion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.special

from . import solver
from .channels import is_lindbladian
from .errors import NumericalFailure, OutOfRange, PreconditionViolated
from .fitting import (
    BranchPolicy,
    _branch_targets,
    _checked_log,
    _snapshot_matrix,
    enumerate_branches,
)
from .linalg import (
    eig_full,
    expm,
    frobenius,
    gamma_involution,
    herm,
    max_entangled,
    side_dim,
    vec_adjoint,
)

__all__ = [
    "DeltaSweep",
    "MuResult",
    "AnalyticalMu",
    "non_markovianity",
    "markovianity_score",
    "analytical_mu_unital",
]

#: "Initialize it with a high value": candidates must beat this to count.
MU_INIT = 1e9

#: Noise rates below this are zeros up to solver tolerance; ranking treats
#: them as ties resolved by (delta, branch) order.
MU_TIE_TOL = 1e-12

#: Tolerance of the is-the-noisy-generator-a-Lindbladian audit on the winner.
VERIFY_TOL = 1e-6


@dataclass(frozen=True)
class DeltaSweep:
    """Grid of trust radii delta_min + k*delta_step on [delta_min, delta_max).

    The start is included and the end excluded, so the grid always contains
    at least the single point delta_min; a step wider than the whole span
    degenerates to exactly that point, which is how coarse sweeps end up
    returning no result at small epsilon.
    """

    delta_min: float
    delta_max: float
    delta_step: float

    def validate(self) -> None:
        if not (self.delta_min > 0):
            raise OutOfRange(f"delta_min must be positive, got {self.delta_min}")
        if not (self.delta_step > 0):
            raise OutOfRange(f"delta_step must be positive, got {self.delta_step}")
        if self.delta_max < self.delta_min:
            raise OutOfRange(
                f"delta_max {self.delta_max} below delta_min {self.delta_min}"
            )

    @classmethod
    def from_epsilon(
        cls, epsilon: float, l0_norm: float, delta_step: float = 0.01
    ) -> "DeltaSweep":
        """Start the sweep at the delta solving epsilon = exp(delta)*delta*|L0|.

        That delta is exactly W0(epsilon/|L0|) (principal Lambert W), the
        radius below which no log-ball point can move the exponential by
        more than epsilon; the sweep tops out at ten times it.
        """
        if epsilon <= 0:
            raise OutOfRange(f"epsilon must be positive, got {epsilon}")
        if l0_norm <= 0:
            raise OutOfRange(f"norm of the logarithm must be positive, got {l0_norm}")
        delta_min = float(scipy.special.lambertw(epsilon / l0_norm).real)
        sweep = cls(delta_min, 10.0 * delta_min, delta_step)
        sweep.validate()
        return sweep

    def grid(self) -> np.ndarray:
        self.validate()
        span = self.delta_max - self.delta_min
        count = max(1, int(np.ceil(span / self.delta_step - 1e-12)))
        return self.delta_min + self.delta_step * np.arange(count)


@dataclass
class MuResult:
    """Least white noise reconciling a snapshot with Markovian dynamics."""

    generator: np.ndarray
    mu_min: float
    delta_used: float
    branch: tuple[int, ...]
    distance: float


@dataclass
class AnalyticalMu:
    """Closed-form noise estimate for a filtered snapshot."""

    generator: np.ndarray
    mu: float
    epsilon: float


def markovianity_score(mu_min: float, d: int) -> float:
    """Map the noise rate to a score in (0, 1]; 1 means no noise needed."""
    if mu_min < 0:
        raise OutOfRange(f"mu_min must be nonnegative, got {mu_min}")
    return float(np.exp((1 - d * d) * mu_min))


def non_markovianity(
    m_snapshot,
    r: np.ndarray,
    epsilon: float,
    policy: Optional[BranchPolicy] = None,
    sweep: Optional[DeltaSweep] = None,
    settings: Optional[solver.SolverSettings] = None,
    *,
    delta_step: float = 0.01,
    chunk_size: int = 8192,
) -> Optional[MuResult]:
    """Smallest white-noise rate over the (delta, branch) grid, or None.

    A grid point is accepted only when its exponential lands strictly within
    epsilon of the raw snapshot; among accepted points the smallest mu wins,
    with ties broken by smaller delta and then branch enumeration order.
    Most grid points never reach the iterative solver: a delta-ball that
    misses the hermitian trace-zero slice (every branch that breaks
    conjugation symmetry picks up a skew part of order 2*pi) is discarded by
    the solver's feasibility screen.
    """
    if epsilon <= 0:
        raise OutOfRange(f"epsilon must be positive, got {epsilon}")
    if policy is None:
        policy = BranchPolicy()
    m = _snapshot_matrix(m_snapshot)
    r = np.asarray(r, dtype=complex)
    if r.shape != m.shape:
        raise OutOfRange(
            f"snapshot and repaired matrix disagree: {m.shape} vs {r.shape}"
        )
    d = side_dim(r.shape[0])

    spectral, l0 = _checked_log(r)
    if sweep is None:
        sweep = DeltaSweep.from_epsilon(epsilon, frobenius(l0), delta_step)
    deltas = sweep.grid()

    branches = np.array(list(enumerate_branches(policy, r.shape[0])), dtype=int)
    targets = _branch_targets(l0, spectral, branches)
    branch_idx = np.repeat(np.arange(len(branches)), len(deltas))
    delta_idx = np.tile(np.arange(len(deltas)), len(branches))

    # accepted candidates: (ranking key, true mu, solution, distance)
    candidates: list[tuple[tuple[float, float, int], float, np.ndarray, float]] = []
    for start in range(0, branch_idx.size, chunk_size):
        bi = branch_idx[start : start + chunk_size]
        di = delta_idx[start : start + chunk_size]
        reports = solver.min_mu_batch(targets[bi], d, deltas[di], settings)
        solved = [k for k, rep in enumerate(reports) if rep.mu is not None]
        if not solved:
            continue
        x_stack = np.stack([reports[k].x_opt for k in solved])
        exps = expm(gamma_involution(x_stack))
        distances = np.linalg.norm(m[None, :, :] - exps, axis=(-2, -1))
        for pos, k in enumerate(solved):
            mu = float(reports[k].mu)
            dist = float(distances[pos])
            if not (dist < epsilon and mu < MU_INIT):
                continue
            key = (
                mu if mu >= MU_TIE_TOL else 0.0,
                float(deltas[di[k]]),
                int(bi[k]),
            )
            candidates.append((key, mu, x_stack[pos], dist))

    omega_perp = max_entangled(d).omega_perp
    for key, mu, x_opt, dist in sorted(candidates, key=lambda c: c[0]):
        generator = gamma_involution(x_opt)
        if is_lindbladian(generator - mu * omega_perp, tol=VERIFY_TOL).ok:
            return MuResult(
                generator=generator,
                mu_min=mu,
                delta_used=key[1],
                branch=tuple(int(v) for v in branches[key[2]]),
                distance=dist,
            )
    return None


def analytical_mu_unital(m_snapshot) -> AnalyticalMu:
    """Closed-form noise rate for a real, positive, well-separated spectrum.

    Filters the snapshot into an exactly hermiticity- and trace-preserving
    generator: zero the log-eigenvalue that carries the trace (the one whose
    left eigenvector points along the maximally entangled row), symmetrize
    every right eigenvector to its self-adjoint part, and push the kept ones
    orthogonal to that row as biorthogonality demands.  The noise rate is
    then d times the most negative eigenvalue of the generator's compressed
    Choi form, and the returned epsilon is the exponential's distance to the
    snapshot.
    """
    m = _snapshot_matrix(m_snapshot)
    d = side_dim(m.shape[0])
    n = m.shape[0]
    spectral = eig_full(m)
    eigs = spectral.eigenvalues

    if np.max(np.abs(eigs.imag)) > 1e-8:
        raise PreconditionViolated("spectrum is not real")
    lam = eigs.real
    if np.min(lam) <= 0:
        raise PreconditionViolated("spectrum is not strictly positive")
    gaps = np.abs(lam[:, None] - lam[None, :])
    np.fill_diagonal(gaps, np.inf)
    if np.min(gaps) < 1e-6:
        raise PreconditionViolated("eigenvalues are not well separated")
    if np.min(np.abs(lam - 1.0)) > 0.2:
        raise PreconditionViolated("no eigenvalue near one")

    me = max_entangled(d)
    overlap = np.abs(spectral.left_vectors @ me.omega)
    overlap /= np.linalg.norm(spectral.left_vectors, axis=1)
    zeroed = int(np.argmax(overlap))

    # Kept slots stay in descending-eigenvalue order; the zeroed one goes last.
    order = [j for j in range(n) if j != zeroed] + [zeroed]
    log_diag = np.log(lam[order])
    log_diag[-1] = 0.0

    w = spectral.right_vectors[:, order]
    # For a real eigenvalue of a hermiticity-preserving matrix, w and its
    # vec-adjoint span the same line, but the eigensolver's phase convention
    # may have rotated w so that its self-adjoint part (nearly) cancels.
    # Rotating by half the phase of <w, w-adjoint> maximizes that part.
    adj = vec_adjoint(w.T).T
    inner = np.sum(np.conj(w) * adj, axis=0)
    w = w * np.exp(0.5j * np.angle(inner))[None, :]
    tilde = 0.5 * (w + vec_adjoint(w.T).T)
    perp = np.eye(n) - np.outer(me.omega, me.omega.conj())
    basis = np.concatenate([perp @ tilde[:, :-1], tilde[:, -1:]], axis=1)
    try:
        basis_inv = np.linalg.inv(basis)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(
            "symmetrized eigenvector matrix is singular"
        ) from exc
    generator = (basis * log_diag) @ basis_inv

    compressed = herm(me.omega_perp @ gamma_involution(generator) @ me.omega_perp)
    lam_min = float(np.linalg.eigvalsh(compressed)[0])
    mu = d * max(0.0, -lam_min)
    epsilon = frobenius(m - expm(generator))
    return AnalyticalMu(generator=generator, mu=mu, epsilon=epsilon)
