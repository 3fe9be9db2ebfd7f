"""Convex-roof extension of the pair measure to mixed states.

Every size-``m`` decomposition of ``rho`` is obtained from its eigen-ensemble
by an ``m x r`` isometry ``V`` (``r = rank rho``): member ``j`` is
``sum_i V[j, i] sqrt(p_i) e_i`` and its weight is the squared norm. The
search runs many random starting isometries, each refined by Riemannian
conjugate gradient on the Stiefel manifold (projected gradient, Armijo
backtracking, polar retraction). The best value is an upper bound on the
true roof.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import UsageError
from .measure import PairProfile, measure_scale, pair_values_batch, pairs
from .numerics import SIGMA_YY, clamp_spectrum, hermitian_eigensystem
from .probes import ProbeKind, probe_eval
from .qstate import DensityMatrix, StateVector

RANK_TOL = 1e-10
ISOMETRY_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-8
WEIGHT_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class EnsembleDecomposition:
    weights: np.ndarray
    members: tuple

    @property
    def size(self):
        return len(self.members)

    def reconstruct(self):
        amps = np.stack([m.amplitudes for m in self.members])
        return (amps.T * self.weights) @ amps.conj()

    def residual(self, rho: DensityMatrix) -> float:
        return float(np.abs(self.reconstruct() - rho.matrix).max())


def _ensemble_from_rows(rows, n, d):
    q = np.einsum("ij,ij->i", rows, rows.conj()).real
    keep = q > WEIGHT_FLOOR
    members = tuple(StateVector(r / math.sqrt(w), n, d) for r, w in zip(rows[keep], q[keep]))
    weights = q[keep] / q[keep].sum()
    return EnsembleDecomposition(weights, members)


def _eigen_rows(rho: DensityMatrix):
    w, v = hermitian_eigensystem(rho.matrix)
    w = clamp_spectrum(w)
    keep = w > RANK_TOL
    # largest weight first
    return (v[:, keep] * np.sqrt(w[keep])).T[::-1]


def eigen_ensemble(rho: DensityMatrix) -> EnsembleDecomposition:
    """Spectral decomposition with zero-weight members dropped."""
    return _ensemble_from_rows(_eigen_rows(rho), rho.n, rho.d)


def check_isometry(v, rows=None):
    v = np.asarray(v, dtype=complex)
    if v.ndim != 2 or (rows is not None and v.shape[1] != rows):
        raise UsageError(f"isometry must have {rows} columns, got shape {v.shape}")
    err = np.abs(v.conj().T @ v - np.eye(v.shape[1])).max()
    if err > ISOMETRY_TOL:
        raise UsageError(f"matrix is not an isometry (max |V^H V - I| = {err:.3e})")
    return v


def steer_ensemble(base: EnsembleDecomposition, isometry) -> EnsembleDecomposition:
    """Decomposition ``phi_j ∝ sum_i V[j, i] sqrt(p_i) psi_i`` of the same state."""
    v = check_isometry(isometry, base.size)
    first = base.members[0]
    x = np.stack([math.sqrt(p) * m.amplitudes for p, m in zip(base.weights, base.members)])
    return _ensemble_from_rows(v @ x, first.n, first.d)


def polar(z):
    u, _, vh = np.linalg.svd(z, full_matrices=False)
    return u @ vh


class RoofObjective:
    """Ensemble average ``sum_j q_j E(phi_j)`` as a function of the isometry.

    ``E`` is ``M`` (``form='m'``) or the plain pair sum (``form='sum'``).
    The gradient is taken by central differences in the entries of ``V``;
    only the perturbed member changes, so one batched evaluation suffices.
    """

    step = 1e-6

    def __init__(self, rows, n, d, kind, form="m"):
        self.rows = rows
        self.n, self.d, self.kind = n, d, kind
        self.scale = measure_scale(kind, n) if form == "m" else 1.0

    def member_values(self, vecs):
        q = np.einsum("...i,...i->...", vecs, vecs.conj()).real
        live = q > WEIGHT_FLOOR
        out = np.zeros(q.shape)
        if live.any():
            unit = vecs[live] / np.sqrt(q[live])[:, None]
            vals = pair_values_batch(unit, self.n, self.d, self.kind).sum(axis=1)
            out[live] = q[live] * self.scale * vals
        return out

    def value(self, v):
        return float(self.member_values(v @ self.rows).sum())

    def gradient(self, v):
        m, r = v.shape
        members = v @ self.rows
        shifts = self.step * np.array([1, -1, 1j, -1j])
        trial = members[:, None, None, :] + shifts[None, None, :, None] * self.rows[None, :, None, :]
        vals = self.member_values(trial.reshape(-1, members.shape[1])).reshape(m, r, 4)
        h2 = 2 * self.step
        return (vals[..., 0] - vals[..., 1]) / h2 + 1j * (vals[..., 2] - vals[..., 3]) / h2


class ConcurrenceObjective(RoofObjective):
    """Two-qubit Q_C objective in closed form.

    For a pure two-qubit member ``Q_C = C = |psi^T (Y⊗Y) psi|``, so the
    weighted sum is ``sum_j |(V T V^T)_jj|`` with ``T = X (Y⊗Y) X^T``.
    """

    def __init__(self, rows, n, d, kind, form="m"):
        super().__init__(rows, n, d, kind, form)
        self.tau = rows @ SIGMA_YY @ rows.T

    def value(self, v):
        return float(np.abs(np.einsum("jk,kl,jl->j", v, self.tau, v)).sum())

    def gradient(self, v):
        tv = v @ self.tau
        a = np.einsum("jk,jk->j", tv, v)
        mag = np.abs(a)
        phase = np.divide(a, mag, out=np.zeros_like(a), where=mag > 0)
        return 2 * phase[:, None] * tv.conj()


def make_objective(rows, n, d, kind, form="m"):
    if kind is ProbeKind.QC and n == 2 and d == 2:
        return ConcurrenceObjective(rows, n, d, kind, form)
    return RoofObjective(rows, n, d, kind, form)


def _tangent(v, z):
    """Project ``z`` onto the tangent space of the Stiefel manifold at ``v``."""
    b = v.conj().T @ z
    return z - v @ (b + b.conj().T) / 2


def descend(objective, v, max_iter=500, tol=1e-9):
    """Riemannian conjugate gradient (Polak-Ribiere+) from the isometry ``v``.

    Directions are carried to the new point by tangent projection; a
    non-descent direction falls back to steepest descent. Returns
    ``(v, value, iterations)``. Stops when one step improves the value by
    less than ``tol`` or the projected gradient vanishes.
    """
    f = objective.value(v)
    grad = _tangent(v, objective.gradient(v))
    direction = -grad
    step = 0.5
    it = 0
    for it in range(1, max_iter + 1):
        slope = float(np.vdot(grad, direction).real)
        if slope >= 0:
            direction = -grad
            slope = -float(np.vdot(grad, grad).real)
        if -slope < 1e-24:
            break
        step *= 2
        while True:
            vn = polar(v + step * direction)
            fn = objective.value(vn)
            if fn <= f + 1e-4 * step * slope:
                break
            step /= 2
            if step < 1e-16:
                return v, f, it
        grad_new = _tangent(vn, objective.gradient(vn))
        moved_grad = _tangent(vn, grad)
        beta = max(0.0, float(np.vdot(grad_new, grad_new - moved_grad).real)
                   / float(np.vdot(grad, grad).real))
        direction = -grad_new + beta * _tangent(vn, direction)
        gain = f - fn
        v, f, grad = vn, fn, grad_new
        if gain < tol:
            break
    return v, f, it


@dataclass(frozen=True, eq=False)
class RoofResult:
    """Best decomposition found. ``value`` is always an upper bound on the roof."""

    value: float
    decomposition: EnsembleDecomposition
    restarts: int
    converged: bool
    trace: tuple
    eigen_value: float
    profile: Optional[PairProfile] = field(default=None, repr=False)
    upper_bound: bool = True

    @property
    def best_so_far(self):
        return np.minimum.accumulate([self.eigen_value] + list(self.trace))[1:]


def _restart(args):
    objective, m, r, seed, max_iter, tol = args
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))
    v, f, it = descend(objective, polar(z), max_iter, tol)
    return f, v, it


def _is_converged(trace, tolerance):
    total = len(trace)
    window = math.ceil(total / 3)
    if total - window < 1:
        return False
    best = np.minimum.accumulate(trace)
    return bool(best[total - window - 1] - best[-1] <= tolerance)


def convex_roof(rho: DensityMatrix, kind, restarts: int = 64, member_cap: Optional[int] = None,
                seed: int = 0, tolerance: float = 1e-6, form: str = "m", max_iter: int = 500,
                jobs: int = 1) -> RoofResult:
    """Minimize the ensemble-averaged pure-state measure over decompositions of ``rho``.

    ``member_cap`` defaults to ``rank + 2``. Restart ``k`` uses the ``k``-th
    child of ``SeedSequence(seed)``, so results do not depend on ``jobs``.
    """
    kind = ProbeKind.parse(kind)
    if form not in ("m", "sum"):
        raise UsageError("form must be 'm' or 'sum'")
    if kind is ProbeKind.QC and rho.d != 2:
        raise UsageError("Q_C roof needs qubits")
    rows = _eigen_rows(rho)
    rank = rows.shape[0]
    cap = rank + 2 if member_cap is None else int(member_cap)
    if cap < rank:
        raise UsageError(f"member cap {cap} is below the rank {rank}")
    objective = make_objective(rows, rho.n, rho.d, kind, form)
    base_v = np.eye(rank, dtype=complex)
    eigen_value = objective.value(base_v)
    if rank == 1:
        decomposition = _ensemble_from_rows(rows, rho.n, rho.d)
        return RoofResult(eigen_value, decomposition, 0, True, (), eigen_value,
                          _profile(decomposition, kind))
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    tasks = [(objective, cap, rank, s, max_iter, tolerance * 1e-3) for s in seeds]
    if jobs > 1 and restarts > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_restart, tasks))
    else:
        outcomes = [_restart(t) for t in tasks]
    trace = tuple(float(f) for f, _, _ in outcomes)
    best_v, best_value = base_v, eigen_value
    for f, v, _ in outcomes:
        if f < best_value:
            best_v, best_value = v, f
    decomposition = _ensemble_from_rows(best_v @ rows, rho.n, rho.d)
    return RoofResult(best_value, decomposition, restarts, _is_converged(trace, tolerance),
                      trace, eigen_value, _profile(decomposition, kind))


def _profile(decomposition, kind):
    first = decomposition.members[0]
    if first.n < 2:
        return None
    amps = np.stack([m.amplitudes for m in decomposition.members])
    avg = decomposition.weights @ pair_values_batch(amps, first.n, first.d, kind)
    values = dict(zip(pairs(first.n), (float(max(x, 0.0)) for x in avg)))
    return PairProfile(kind, first.n, first.d, values)


@dataclass(frozen=True)
class ConditionReport:
    direct: float
    roof: float
    satisfied: bool


def pairwise_condition_check(rho: DensityMatrix, kind, **options) -> ConditionReport:
    """Compare the probe on ``rho`` with its convex roof over pure decompositions."""
    kind = ProbeKind.parse(kind)
    if rho.n != 2:
        raise UsageError("pairwise condition is stated for two-site states")
    direct = probe_eval(kind, rho)
    roof = convex_roof(rho, kind, **options).value
    return ConditionReport(direct, roof, direct >= roof - 1e-6)

