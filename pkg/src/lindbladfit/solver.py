"""Projection solvers for the two convex programs behind the generator fits.

Both programs live in the real vector space of hermitian d²×d² matrices X
(candidate Choi-side variables):

    (P1)  minimize  ‖X − T‖_F
          subject   Tr₁[X] = 0,   ω⊥ X ω⊥ ⪰ 0

    (P2)  minimize  μ
          subject   ‖X − T‖_F ≤ δ,   Tr₁[X] = 0,   ω⊥ X ω⊥ + (μ/d)·1 ⪰ 0

where ω is the normalized maximally entangled vector and ω⊥ the projector
onto its orthogonal complement.  A third program fits one generator to a
snapshot series: minimize Σ_c ‖t_c X − T_c‖_F under a δ-ball per term plus
the same affine/cone constraints.

The solver is consensus ADMM over closed-form projections:

  * affine set  {Tr₁[X] = 0}:  X ↦ X − (1/d)·1⊗Tr₁[X]
  * cone set    {ω⊥Xω⊥ ⪰ 0}:  subtract the negative spectral part of ω⊥Xω⊥
  * ball / distance prox:      radial closed forms (1-D after reduction)

Hermiticity is structural: every projection maps hermitian matrices to
hermitian matrices, and the target is replaced by its hermitian part (the
skew part contributes a constant offset ‖skew‖_F in quadrature, which is
added back to reported objectives and ball radii).  The (P2) epigraph
variable μ is handled by projecting (ω⊥Xω⊥, μ) jointly onto
{(Y, μ) : Y + (μ/d)·1 ⪰ 0, μ ≥ 0} via a spectral shift.

An independent Dykstra alternating-projection solver for (P1) is provided
as a cross-check; it shares only the elementary projections with the ADMM
path, not the iteration.

All solves are deterministic: fixed initialization at the hermitian part
of the target, no randomness, and per-problem arithmetic independent of
how problems are batched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, OutOfRange
from .linalg import side_dim

# ---------------------------------------------------------------------------
# settings / report types
# ---------------------------------------------------------------------------

OPTIMAL = "Optimal"
MAX_ITERS = "MaxIters"
INFEASIBLE = "Infeasible"


@dataclass
class SolverSettings:
    """Tolerances and iteration limits for the projection solvers.

    primal_tol / dual_tol bound the ADMM fixed-point residuals (scaled by
    max(1, ‖target‖_F)); cone_tol bounds the eigenvalue violation of the
    returned iterate.  over_relaxation must lie in (1, 2).
    """

    primal_tol: float = 1e-9
    dual_tol: float = 1e-9
    cone_tol: float = 1e-9
    max_iters: int = 50_000
    over_relaxation: float = 1.6
    rho: float = 1.0
    track_history: bool = False

    def validate(self) -> None:
        if min(self.primal_tol, self.dual_tol, self.cone_tol) <= 0:
            raise OutOfRange("solver tolerances must be positive")
        if self.max_iters < 1:
            raise OutOfRange("max_iters must be at least 1")
        if not 1.0 < self.over_relaxation < 2.0:
            raise OutOfRange("over_relaxation must lie in (1, 2)")
        if self.rho <= 0:
            raise OutOfRange("rho must be positive")


@dataclass
class SolveReport:
    """Outcome of one convex solve.

    x_opt is hermitian.  residuals = (affine, cone, ball) are constraint
    violations of x_opt: entrywise 1-norm of Tr₁[x], eigenvalue deficit of
    the cone constraint, and distance beyond the δ-ball (0.0 when the
    program has no ball).  status is Optimal, MaxIters or Infeasible; on
    Optimal all residuals are within tolerance.  mu is None for (P1).
    """

    x_opt: np.ndarray
    objective: float
    residuals: tuple[float, float, float]
    status: str
    iterations: int
    mu: Optional[float] = None
    history: Optional[list[tuple[int, float, float]]] = None


# ---------------------------------------------------------------------------
# geometry shared by all programs (cached per dimension)
# ---------------------------------------------------------------------------


class _Geometry:
    def __init__(self, d: int):
        n = d * d
        omega = np.zeros(n, dtype=complex)
        omega[:: d + 1] = 1.0 / np.sqrt(d)
        self.d = d
        self.n = n
        self.omega = omega
        self.perp = np.eye(n, dtype=complex) - np.outer(omega, omega.conj())
        self.eye_d = np.eye(d, dtype=complex)

    def trace_first(self, x: np.ndarray) -> np.ndarray:
        """Batched Tr₁: (..., d², d²) → (..., d, d)."""
        d = self.d
        x5 = x.reshape(x.shape[:-2] + (d, d, d, d))
        return np.einsum("...jcjr->...cr", x5)

    def embed_second(self, y: np.ndarray) -> np.ndarray:
        """Batched 1_d ⊗ Y: (..., d, d) → (..., d², d²)."""
        d = self.d
        out = np.einsum("jk,...cr->...jckr", self.eye_d, y)
        return out.reshape(y.shape[:-2] + (d * d, d * d))

    def project_trace_zero(self, x: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto {Tr₁[X] = 0}; keeps hermiticity."""
        return x - self.embed_second(self.trace_first(x)) / self.d

    def compress_eig(self, x: np.ndarray):
        """Eigendecomposition of ω⊥ X ω⊥ (batched).

        The ω-direction contributes one exact-zero eigenvalue that is inert
        in every clip/shift below.
        """
        c = self.perp @ x @ self.perp
        return np.linalg.eigh(_herm(c))

    def project_cone(self, x: np.ndarray) -> np.ndarray:
        """Projection onto {X : ω⊥ X ω⊥ ⪰ 0} (negative-part subtraction)."""
        w, v = self.compress_eig(x)
        neg = np.minimum(w, 0.0)
        if not neg.any():
            return x
        vh = v.conj().swapaxes(-1, -2)
        return x - (v * neg[..., None, :]) @ vh

    def project_cone_shifted(self, x: np.ndarray, mu: np.ndarray):
        """Joint projection of (X, μ) onto {ω⊥Xω⊥ + (μ/d)·1 ⪰ 0, μ ≥ 0}.

        For fixed μ the optimal X lifts eigenvalues of ω⊥Xω⊥ to the floor
        −μ/d, costing Σ relu(−μ/d − λ_i)²; adding (μ − μ₀)² gives a convex
        piecewise-quadratic in μ whose minimizer is found exactly by
        scanning the active-set intervals.
        """
        d = float(self.d)
        w, v = self.compress_eig(x)  # w ascending, shape (B, n)
        b, n = w.shape
        # With the k smallest eigenvalues below the floor, the stationary
        # point of Σ_{i≤k}(μ/d + w_i)² + (μ − μ₀)² is
        #   μ_k = (μ₀ − S_k/d) / (1 + k/d²),
        # valid while exactly those k are active: μ ∈ [−d·w_{k+1}, −d·w_k).
        s = np.concatenate([np.zeros((b, 1)), np.cumsum(w, axis=1)], axis=1)
        k = np.arange(n + 1)
        cand = (mu[:, None] - s / d) / (1.0 + k / d**2)
        upper = np.concatenate([np.full((b, 1), np.inf), -d * w], axis=1)
        lower = np.concatenate([-d * w, np.full((b, 1), -np.inf)], axis=1)
        cand = np.clip(cand, np.maximum(lower, 0.0), np.maximum(upper, 0.0))
        cand = np.concatenate([cand, np.zeros((b, 1))], axis=1)  # always try μ=0
        # evaluate the exact objective at every candidate, take the best
        deficit = np.maximum(0.0, -cand[..., None] / d - w[:, None, :])
        fval = np.sum(deficit**2, axis=-1) + (cand - mu[:, None]) ** 2
        best = np.argmin(fval, axis=1)
        mu_new = np.maximum(0.0, cand[np.arange(b), best])
        floor = -mu_new[:, None] / d
        lift = np.maximum(w, floor) - w
        vh = v.conj().swapaxes(-1, -2)
        x_new = x + (v * lift[..., None, :]) @ vh
        return x_new, mu_new

    def cone_deficit(self, x: np.ndarray, mu: np.ndarray | float = 0.0) -> np.ndarray:
        """max(0, −λ_min(ω⊥Xω⊥) − μ/d), batched."""
        w = np.linalg.eigvalsh(_herm(self.perp @ x @ self.perp))
        return np.maximum(0.0, -w[..., 0] - np.asarray(mu) / self.d)


_GEOMETRY: dict[int, _Geometry] = {}


def _geometry(d: int) -> _Geometry:
    if d not in _GEOMETRY:
        _GEOMETRY[d] = _Geometry(d)
    return _GEOMETRY[d]


def _herm(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + x.conj().swapaxes(-1, -2))


def _fro(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(x) ** 2, axis=(-2, -1)))


def _one_norm(x: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(x), axis=(-2, -1))


def _project_ball(x: np.ndarray, center: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Batched projection onto ‖X − center‖_F ≤ radius (radius shape (B,))."""
    diff = x - center
    dist = _fro(diff)
    scale = np.ones_like(dist)
    over = dist > radius
    scale[over] = radius[over] / dist[over]
    return center + diff * scale[:, None, None]


def _as_batch(target: np.ndarray, d: int) -> np.ndarray:
    t = np.asarray(target, dtype=complex)
    if t.ndim == 2:
        t = t[None]
    if t.shape[-1] != d * d or t.shape[-2] != d * d:
        raise DimensionMismatch(
            f"target must be {d * d}x{d * d} for side dimension {d}, got {t.shape}"
        )
    return t


# ---------------------------------------------------------------------------
# (P1): closest conditionally-CP, trace-annihilating hermitian matrix
# ---------------------------------------------------------------------------


def closest_lindbladian_batch(
    targets: np.ndarray,
    d: int,
    settings: Optional[SolverSettings] = None,
) -> list[SolveReport]:
    """Solve (P1) for a stack of targets in lockstep.

    Returns one SolveReport per target.  Each problem's iterates are
    independent, so results do not depend on the batch composition.
    """
    st = settings or SolverSettings()
    st.validate()
    geo = _geometry(d)
    t_full = _as_batch(targets, d)
    b = t_full.shape[0]
    t_h = _herm(t_full)
    skew_norm = _fro(t_full - t_h)
    scale = np.maximum(1.0, _fro(t_h))

    alpha = st.over_relaxation
    rho = np.full(b, st.rho)
    z = t_h.copy()
    u_a = np.zeros_like(z)
    u_b = np.zeros_like(z)

    active = np.arange(b)
    x_sol = np.empty_like(z)
    iters = np.zeros(b, dtype=int)
    converged = np.zeros(b, dtype=bool)
    history: list[tuple[int, float, float]] = [] if st.track_history else None

    for it in range(1, st.max_iters + 1):
        x_a = geo.project_trace_zero(z - u_a)
        x_b = geo.project_cone(z - u_b)
        xh_a = alpha * x_a + (1 - alpha) * z
        xh_b = alpha * x_b + (1 - alpha) * z
        r3 = rho[:, None, None]
        z_new = (t_h[active] + r3 * (xh_a + u_a + xh_b + u_b)) / (1 + 2 * rho)[:, None, None]
        u_a += xh_a - z_new
        u_b += xh_b - z_new
        primal = np.sqrt(_fro(x_a - z_new) ** 2 + _fro(x_b - z_new) ** 2)
        dual = rho * np.sqrt(2.0) * _fro(z_new - z)
        z = z_new
        if history is not None:
            history.append((it, float(primal.max()), float(dual.max())))

        sc = scale[active]
        done = (primal <= st.primal_tol * sc) & (dual <= st.dual_tol * sc)
        if done.any():
            idx = active[done]
            x_sol[idx] = geo.project_trace_zero(x_b[done])
            iters[idx] = it
            converged[idx] = True
            keep = ~done
            active = active[keep]
            z, u_a, u_b, rho = z[keep], u_a[keep], u_b[keep], rho[keep]
            if not active.size:
                break
        if it % 100 == 0 and active.size:
            # deterministic residual balancing
            grow = primal[~done] > 10 * dual[~done]
            shrink = dual[~done] > 10 * primal[~done]
            rho[grow] *= 2.0
            u_a[grow] /= 2.0
            u_b[grow] /= 2.0
            rho[shrink] /= 2.0
            u_a[shrink] *= 2.0
            u_b[shrink] *= 2.0

    if active.size:  # hit max_iters: keep best feasible-leaning iterate
        x_sol[active] = geo.project_trace_zero(geo.project_cone(z))
        iters[active] = st.max_iters

    reports = []
    cone_res = geo.cone_deficit(x_sol)
    affine_res = _one_norm(geo.trace_first(x_sol))
    obj = np.sqrt(_fro(x_sol - t_h) ** 2 + skew_norm**2)
    for i in range(b):
        ok = converged[i] and cone_res[i] <= st.cone_tol * scale[i]
        reports.append(
            SolveReport(
                x_opt=x_sol[i],
                objective=float(obj[i]),
                residuals=(float(affine_res[i]), float(cone_res[i]), 0.0),
                status=OPTIMAL if ok else MAX_ITERS,
                iterations=int(iters[i]),
                history=history if (history is not None and i == 0) else None,
            )
        )
    return reports


def solve_closest_lindbladian(
    target: np.ndarray, d: int, settings: Optional[SolverSettings] = None
) -> SolveReport:
    """Project a matrix onto the hermitian, trace-annihilating, conditionally
    positive cone — program (P1).  Never infeasible (X = 0 qualifies)."""
    return closest_lindbladian_batch(np.asarray(target)[None], d, settings)[0]


# ---------------------------------------------------------------------------
# (P2): minimum cone shift μ within a δ-ball of the target
# ---------------------------------------------------------------------------


def min_mu_batch(
    targets: np.ndarray,
    d: int,
    deltas: Sequence[float] | np.ndarray,
    settings: Optional[SolverSettings] = None,
) -> list[SolveReport]:
    """Solve (P2) for stacks of (target, δ) pairs in lockstep.

    A pair is reported Infeasible when δ² < ‖skew(T)‖² + ‖Tr₁-component‖²,
    i.e. when the ball cannot even reach the hermitian affine subspace.
    Deeper infeasibility (ball misses the cone) surfaces as MaxIters; the
    drivers pre-screen δ against the (P1) distance so that case does not
    arise in normal operation.
    """
    st = settings or SolverSettings()
    st.validate()
    geo = _geometry(d)
    t_full = _as_batch(targets, d)
    b = t_full.shape[0]
    deltas = np.broadcast_to(np.asarray(deltas, dtype=float), (b,)).copy()
    if np.any(deltas < 0):
        raise OutOfRange("delta must be nonnegative")

    t_h = _herm(t_full)
    skew_norm = _fro(t_full - t_h)
    affine_gap = _fro(t_h - geo.project_trace_zero(t_h))
    scale = np.maximum(1.0, _fro(t_h))

    # effective hermitian-space ball radius; ball tangency to the affine
    # subspace decides quick infeasibility
    rad_sq = deltas**2 - skew_norm**2
    feasible = rad_sq >= affine_gap**2 - 1e-30
    radius = np.sqrt(np.maximum(rad_sq, 0.0))

    reports: list[Optional[SolveReport]] = [None] * b
    for i in np.nonzero(~feasible)[0]:
        x0 = geo.project_trace_zero(t_h[i][None])[0]
        reports[i] = SolveReport(
            x_opt=x0,
            objective=float("nan"),
            residuals=(
                0.0,
                float(geo.cone_deficit(x0[None])[0]),
                float(max(0.0, np.sqrt(_fro(x0[None] - t_h[i][None])[0] ** 2 + skew_norm[i] ** 2) - deltas[i])),
            ),
            status=INFEASIBLE,
            iterations=0,
            mu=None,
        )

    live = np.nonzero(feasible)[0]
    if live.size == 0:
        return reports  # type: ignore[return-value]

    t_h_l = t_h[live]
    center = t_h_l.copy()
    radius_l = radius[live]
    scale_l = scale[live]

    alpha = st.over_relaxation
    nb = 3  # affine, shifted cone, ball
    rho = np.full(live.size, st.rho)
    z = t_h_l.copy()
    mu0 = geo.cone_deficit(z) * d
    z_mu = mu0.copy()
    u_a = np.zeros_like(z)
    u_k = np.zeros_like(z)
    u_c = np.zeros_like(z)
    u_k_mu = np.zeros(live.size)

    active = np.arange(live.size)
    x_sol = np.empty_like(z)
    mu_sol = np.zeros(live.size)
    iters = np.zeros(live.size, dtype=int)
    converged = np.zeros(live.size, dtype=bool)
    history: list[tuple[int, float, float]] = [] if st.track_history else None

    for it in range(1, st.max_iters + 1):
        x_a = geo.project_trace_zero(z - u_a)
        x_k, mu_k = geo.project_cone_shifted(z - u_k, z_mu - u_k_mu)
        x_c = _project_ball(z - u_c, center, radius_l)
        xh_a = alpha * x_a + (1 - alpha) * z
        xh_k = alpha * x_k + (1 - alpha) * z
        xh_c = alpha * x_c + (1 - alpha) * z
        muh_k = alpha * mu_k + (1 - alpha) * z_mu

        z_new = (xh_a + u_a + xh_k + u_k + xh_c + u_c) / nb
        # μ appears only in the objective (coefficient 1) and the cone block
        z_mu_new = (muh_k + u_k_mu) - 1.0 / rho
        u_a += xh_a - z_new
        u_k += xh_k - z_new
        u_c += xh_c - z_new
        u_k_mu += muh_k - z_mu_new

        primal = np.sqrt(
            _fro(x_a - z_new) ** 2
            + _fro(x_k - z_new) ** 2
            + _fro(x_c - z_new) ** 2
            + (mu_k - z_mu_new) ** 2
        )
        dual = rho * np.sqrt(
            float(nb) * _fro(z_new - z) ** 2 + (z_mu_new - z_mu) ** 2
        )
        z, z_mu = z_new, z_mu_new
        if history is not None:
            history.append((it, float(primal.max()), float(dual.max())))

        sc = scale_l[active]
        done = (primal <= st.primal_tol * sc) & (dual <= st.dual_tol * sc)
        if done.any():
            idx = active[done]
            x_fin = geo.project_trace_zero(x_c[done])
            x_sol[idx] = x_fin
            mu_sol[idx] = np.maximum(0.0, mu_k[done])
            iters[idx] = it
            converged[idx] = True
            keep = ~done
            active = active[keep]
            z, z_mu = z[keep], z_mu[keep]
            u_a, u_k, u_c, u_k_mu = u_a[keep], u_k[keep], u_c[keep], u_k_mu[keep]
            rho = rho[keep]
            center, radius_l = center[keep], radius_l[keep]
            if not active.size:
                break
        if it % 100 == 0 and active.size:
            grow = primal[~done] > 10 * dual[~done]
            shrink = dual[~done] > 10 * primal[~done]
            rho[grow] *= 2.0
            for uu in (u_a, u_k, u_c):
                uu[grow] /= 2.0
                uu[shrink] *= 2.0
            u_k_mu[grow] /= 2.0
            rho[shrink] /= 2.0
            u_k_mu[shrink] *= 2.0

    if active.size:
        x_sol[active] = geo.project_trace_zero(_project_ball(z, center, radius_l))
        mu_sol[active] = np.maximum(0.0, z_mu)
        iters[active] = st.max_iters

    # lift μ the last ~1e-9 so the returned pair is exactly cone-feasible;
    # an honest 0 stays 0 because the deficit is then itself ~0
    mu_sol = np.maximum(mu_sol, d * geo.cone_deficit(x_sol))
    cone_res = geo.cone_deficit(x_sol, mu_sol)
    affine_res = _one_norm(geo.trace_first(x_sol))
    ball_res = np.maximum(
        0.0, np.sqrt(_fro(x_sol - t_h_l) ** 2 + skew_norm[live] ** 2) - deltas[live]
    )
    for j, i in enumerate(live):
        ok = (
            converged[j]
            and cone_res[j] <= st.cone_tol * scale_l[j]
            and ball_res[j] <= 10 * st.primal_tol * scale_l[j]
        )
        reports[i] = SolveReport(
            x_opt=x_sol[j],
            objective=float(mu_sol[j]),
            residuals=(float(affine_res[j]), float(cone_res[j]), float(ball_res[j])),
            status=OPTIMAL if ok else MAX_ITERS,
            iterations=int(iters[j]),
            mu=float(mu_sol[j]),
            history=history if (history is not None and j == 0) else None,
        )
    return reports  # type: ignore[return-value]


def solve_min_mu(
    target: np.ndarray,
    d: int,
    delta: float,
    settings: Optional[SolverSettings] = None,
) -> SolveReport:
    """Find the smallest cone shift μ compatible with staying δ-close to the
    target — program (P2).  μ is never clamped away from an honest 0."""
    return min_mu_batch(np.asarray(target)[None], d, [delta], settings)[0]


# ---------------------------------------------------------------------------
# Dykstra cross-check for (P1)
# ---------------------------------------------------------------------------


def dykstra_closest_lindbladian(
    target: np.ndarray, d: int, settings: Optional[SolverSettings] = None
) -> SolveReport:
    """Independent (P1) solve by Dykstra's alternating projections.

    Converges to the same projection as the ADMM path; used as the
    in-repo oracle for solver agreement.  Single problem, no batching.
    """
    st = settings or SolverSettings()
    st.validate()
    geo = _geometry(d)
    t_full = _as_batch(target, d)
    t_h = _herm(t_full)
    skew_norm = float(_fro(t_full - t_h)[0])
    scale = max(1.0, float(_fro(t_h)[0]))

    x = t_h.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    status = MAX_ITERS
    it = 0
    for it in range(1, st.max_iters + 1):
        y = geo.project_trace_zero(x + p)
        p = x + p - y
        x_new = geo.project_cone(y + q)
        q = y + q - x_new
        gap = float(_fro(x_new - y)[0])
        step = float(_fro(x_new - x)[0])
        x = x_new
        if gap <= st.primal_tol * scale and step <= st.dual_tol * scale:
            status = OPTIMAL
            break

    x_fin = geo.project_trace_zero(x)
    cone_res = float(geo.cone_deficit(x_fin)[0])
    affine_res = float(_one_norm(geo.trace_first(x_fin))[0])
    obj = float(np.sqrt(_fro(x_fin - t_h)[0] ** 2 + skew_norm**2))
    if status == OPTIMAL and cone_res > st.cone_tol * scale:
        status = MAX_ITERS
    return SolveReport(
        x_opt=x_fin[0],
        objective=obj,
        residuals=(affine_res, cone_res, 0.0),
        status=status,
        iterations=it,
    )


# ---------------------------------------------------------------------------
# joint fit across a snapshot series
# ---------------------------------------------------------------------------


def _prox_scaled_distance(
    v: np.ndarray,
    target_h: np.ndarray,
    skew_sq: float,
    t_scale: float,
    rho: np.ndarray,
    radius: float,
) -> np.ndarray:
    """prox of X ↦ √(‖t·X − A‖² + s²) (+ ball indicator at that radius).

    Radial reduction: with G = t·V − A, g = ‖G‖, the minimizer moves V
    along −G to reach magnitude r*, the root of
        r/√(r² + s²) + (ρ/t²)(r − g) = 0
    clipped into [0, √(max(radius² − s², 0))].  Solved per problem by
    safeguarded Newton (the function is scalar, smooth and increasing).
    """
    g_mat = t_scale * v - target_h
    g = _fro(g_mat)
    r_max = np.sqrt(max(radius**2 - skew_sq, 0.0))
    out = v.copy()
    for i in range(v.shape[0]):
        gi = float(g[i])
        if gi < 1e-300:
            continue
        c = rho[i] / t_scale**2
        s2 = skew_sq
        lo, hi = 0.0, gi
        r = gi  # Newton start at the unpenalized point
        for _ in range(60):
            den = np.sqrt(r * r + s2)
            f = (r / den if den > 0 else 1.0) + c * (r - gi)
            if f > 0:
                hi = r
            else:
                lo = r
            df = (s2 / den**3 if den > 0 else 0.0) + c
            r_new = r - f / df if df > 0 else 0.5 * (lo + hi)
            if not lo < r_new < hi:
                r_new = 0.5 * (lo + hi)
            if abs(r_new - r) <= 1e-15 * max(1.0, gi):
                r = r_new
                break
            r = r_new
        r = min(max(r, 0.0), r_max)
        out[i] = v[i] + ((r - gi) / (t_scale * gi)) * g_mat[i]
    return out


def solve_joint_fit(
    targets: Sequence[np.ndarray],
    times: Sequence[float],
    d: int,
    delta: float,
    settings: Optional[SolverSettings] = None,
) -> SolveReport:
    """Fit one hermitian cone/affine-feasible X to several scaled targets.

    minimize   Σ_c ‖t_c·X − T_c‖_F
    subject to ‖t_c·X − T_c‖_F ≤ δ for every c,  Tr₁[X] = 0,  ω⊥Xω⊥ ⪰ 0.

    Consensus ADMM with one prox block per series term plus the affine and
    cone blocks.  Infeasible when some skew part already exceeds δ or two
    balls are provably disjoint.
    """
    st = settings or SolverSettings()
    st.validate()
    geo = _geometry(d)
    q = len(targets)
    if q != len(times):
        raise DimensionMismatch("one time per target required")
    t_full = [_as_batch(t, d)[0] for t in targets]
    t_sc = [float(t) for t in times]
    if min(t_sc) <= 0:
        raise OutOfRange("times must be positive")

    t_h = [_herm(t) for t in t_full]
    skew_sq = [float(_fro((t_full[c] - t_h[c])[None])[0] ** 2) for c in range(q)]
    if any(s > delta**2 for s in skew_sq):
        x0 = geo.project_trace_zero(_herm(t_full[0][None]) / t_sc[0])
        return SolveReport(
            x_opt=x0[0],
            objective=float("nan"),
            residuals=(0.0, 0.0, float("inf")),
            status=INFEASIBLE,
            iterations=0,
        )
    # pairwise ball separation rules out hopeless series cheaply
    for a in range(q):
        for bb in range(a + 1, q):
            gap = float(_fro((t_h[a] / t_sc[a] - t_h[bb] / t_sc[bb])[None])[0])
            r_a = np.sqrt(max(delta**2 - skew_sq[a], 0.0)) / t_sc[a]
            r_b = np.sqrt(max(delta**2 - skew_sq[bb], 0.0)) / t_sc[bb]
            if gap > r_a + r_b + 1e-12:
                x0 = geo.project_trace_zero(_herm(t_full[0][None]) / t_sc[0])
                return SolveReport(
                    x_opt=x0[0],
                    objective=float("nan"),
                    residuals=(0.0, 0.0, float(gap - r_a - r_b)),
                    status=INFEASIBLE,
                    iterations=0,
                )

    scale = max(1.0, max(float(_fro(t_h[c][None])[0]) / t_sc[c] for c in range(q)))
    alpha = st.over_relaxation
    nb = 2 + q
    rho = np.full(1, st.rho)
    z = _herm(t_full[0][None]) / t_sc[0]
    u = [np.zeros_like(z) for _ in range(nb)]

    status = MAX_ITERS
    it = 0
    history: list[tuple[int, float, float]] = [] if st.track_history else None
    for it in range(1, st.max_iters + 1):
        x_blocks = [
            geo.project_trace_zero(z - u[0]),
            geo.project_cone(z - u[1]),
        ]
        for c in range(q):
            x_blocks.append(
                _prox_scaled_distance(
                    z - u[2 + c], t_h[c][None], skew_sq[c], t_sc[c], rho, delta
                )
            )
        xh = [alpha * xb + (1 - alpha) * z for xb in x_blocks]
        z_new = sum(xh[i] + u[i] for i in range(nb)) / nb
        for i in range(nb):
            u[i] += xh[i] - z_new
        primal = float(np.sqrt(sum(_fro(xb - z_new)[0] ** 2 for xb in x_blocks)))
        dual = float(rho[0] * np.sqrt(nb) * _fro(z_new - z)[0])
        z = z_new
        if history is not None:
            history.append((it, primal, dual))
        if primal <= st.primal_tol * scale and dual <= st.dual_tol * scale:
            status = OPTIMAL
            break
        if it % 100 == 0:
            if primal > 10 * dual:
                rho *= 2.0
                for i in range(nb):
                    u[i] /= 2.0
            elif dual > 10 * primal:
                rho /= 2.0
                for i in range(nb):
                    u[i] *= 2.0

    x_fin = geo.project_trace_zero(geo.project_cone(z))
    cone_res = float(geo.cone_deficit(x_fin)[0])
    affine_res = float(_one_norm(geo.trace_first(x_fin))[0])
    dists = [float(_fro((t_sc[c] * x_fin - t_full[c][None]))[0]) for c in range(q)]
    ball_res = max(0.0, max(dists) - delta)
    obj = float(sum(dists))
    if status == OPTIMAL and (
        cone_res > st.cone_tol * scale or ball_res > 10 * st.primal_tol * scale
    ):
        status = MAX_ITERS
    return SolveReport(
        x_opt=x_fin[0],
        objective=obj,
        residuals=(affine_res, cone_res, ball_res),
        status=status,
        iterations=it,
        history=history,
    )
