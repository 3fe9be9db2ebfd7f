"""Pair profiles and the averaged measure ``M`` / summed measure ``M^T``.

``M = N(P) * mean over pairs of P(rho_ij)`` with the probe dependent factor
``N(Q_C) = 1`` and ``N(Fr) = 2 - delta(n, 2)``. ``M^T`` is the plain pair
sum. Pairs are 0-based internally; :attr:`PairProfile.labels` gives the
1-based labels used in printed tables.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Optional, Sequence

import numpy as np

from .errors import UnsupportedError, UsageError
from .probes import ProbeKind, entropy_from_factor, lambdas_from_factor, probe_eval
from .qstate import (DensityMatrix, State, StateVector, basis_state, check_sites,
                     partial_trace, permute_sites, random_pure, tensor)

ZERO_TOL = 1e-9


class Classification(enum.Enum):
    SEPARABLE = "separable"
    HOMOGENEOUS = "homogeneous"
    HETEROGENEOUS = "heterogeneous"


def pairs(n: int):
    return list(itertools.combinations(range(n), 2))


@dataclass(frozen=True)
class PairProfile:
    kind: ProbeKind
    n: int
    d: int
    values: dict

    def __post_init__(self):
        if len(self.values) != comb(self.n, 2):
            raise UsageError("profile must hold one value per pair")
        low = min(self.values.values())
        if low < -ZERO_TOL:
            raise UsageError(f"negative probe value {low:.3e} in profile")

    def array(self):
        return np.array([self.values[p] for p in pairs(self.n)])

    @property
    def labels(self):
        return {(i + 1, j + 1): v for (i, j), v in self.values.items()}

    def __getitem__(self, pair):
        i, j = sorted(pair)
        return self.values[(i, j)]


def _pair_factors(t, n, d, i, j):
    rest = [k for k in range(n) if k not in (i, j)]
    b = t.shape[0]
    moved = np.transpose(t, [0, i + 1, j + 1] + [k + 1 for k in rest])
    return moved.reshape(b, d * d, -1)


def pair_values_batch(amplitudes, n: int, d: int, kind) -> np.ndarray:
    """Probe values for every pair of a batch of normalized pure states.

    ``amplitudes`` has shape ``(B, d**n)``; the result has shape
    ``(B, n*(n-1)/2)`` in :func:`pairs` order.
    """
    kind = ProbeKind.parse(kind)
    if n < 2:
        raise UsageError("pair measures need at least two sites")
    if kind is ProbeKind.QC and d != 2:
        raise UnsupportedError("Q_C is only defined for qubits (d = 2)")
    amps = np.asarray(amplitudes, dtype=complex)
    t = amps.reshape((amps.shape[0],) + (d,) * n)
    out = np.empty((amps.shape[0], comb(n, 2)))
    if kind is ProbeKind.QC:
        for col, (i, j) in enumerate(pairs(n)):
            lam = lambdas_from_factor(_pair_factors(t, n, d, i, j))
            out[:, col] = lam[:, 0] + lam[:, 1] - lam[:, 2] - lam[:, 3]
        return _snap(out)
    single = []
    for k in range(n):
        moved = np.moveaxis(t, k + 1, 1).reshape(amps.shape[0], d, -1)
        single.append(entropy_from_factor(moved))
    for col, (i, j) in enumerate(pairs(n)):
        sij = entropy_from_factor(_pair_factors(t, n, d, i, j))
        out[:, col] = 0.5 * (single[i] + single[j] - sij)
    return _snap(out)


def _snap(values):
    # both probes are nonnegative; round-off negatives become exact zeros
    return np.where((values < 0) & (values > -ZERO_TOL), 0.0, values)


def normalization_factor(kind, n: int) -> float:
    kind = ProbeKind.parse(kind)
    if n < 2:
        raise UsageError("normalization needs N >= 2")
    if kind is ProbeKind.QC:
        return 1.0
    return 1.0 if n == 2 else 2.0


def measure_scale(kind, n: int) -> float:
    """Factor turning a pair sum into ``M``: ``N(P) / C(n, 2)``."""
    return normalization_factor(kind, n) / comb(n, 2)


def pair_profile(state: State, kind) -> PairProfile:
    """Probe value on every two-site reduction.

    Mixed inputs are evaluated directly on their reductions (no convex roof).
    """
    kind = ProbeKind.parse(kind)
    if state.n < 2:
        raise UsageError("pair profile needs at least two sites")
    if isinstance(state, StateVector):
        row = pair_values_batch(state.amplitudes[None, :], state.n, state.d, kind)[0]
        values = dict(zip(pairs(state.n), (float(v) for v in row)))
    else:
        values = {p: float(_snap(probe_eval(kind, partial_trace(state, p)))) for p in pairs(state.n)}
    return PairProfile(kind, state.n, state.d, values)


def classify(profile: PairProfile, tol: float = ZERO_TOL) -> Classification:
    v = profile.array()
    if v.max() <= tol:
        return Classification.SEPARABLE
    if v.max() - v.min() <= tol:
        return Classification.HOMOGENEOUS
    return Classification.HETEROGENEOUS


def genuine_global(profile: PairProfile, tol: float = ZERO_TOL) -> bool:
    """True when every pair carries a nonzero probe value."""
    return bool(profile.array().min() > tol)


@dataclass(frozen=True)
class MeasureResult:
    profile: PairProfile
    m_value: float
    mt_value: float
    factor: float
    classification: Classification
    genuine_global: bool
    upper_bound: bool = False
    roof: Optional[object] = field(default=None, repr=False, compare=False)

    @property
    def kind(self):
        return self.profile.kind


def result_from_profile(profile, tol=ZERO_TOL, upper_bound=False, roof=None):
    v = profile.array()
    factor = normalization_factor(profile.kind, profile.n)
    return MeasureResult(
        profile=profile,
        m_value=float(factor * v.mean()),
        mt_value=float(v.sum()),
        factor=factor,
        classification=classify(profile, tol),
        genuine_global=genuine_global(profile, tol),
        upper_bound=upper_bound,
        roof=roof,
    )


def measure_m(state: State, kind, tol: float = ZERO_TOL, **roof_options) -> MeasureResult:
    """``M`` and ``M^T`` of a state.

    Pure states are evaluated directly. Mixed states go through the convex
    roof; the reported values are then upper bounds and the profile is the
    ensemble-averaged pair profile of the best decomposition found.
    """
    kind = ProbeKind.parse(kind)
    if isinstance(state, DensityMatrix):
        from .convexroof import convex_roof

        roof = convex_roof(state, kind, **roof_options)
        if roof.decomposition.size == 1:
            return result_from_profile(pair_profile(roof.decomposition.members[0], kind), tol)
        return result_from_profile(roof.profile, tol, upper_bound=True, roof=roof)
    return result_from_profile(pair_profile(state, kind), tol)


def embed_with_blank(state: State, total_sites: int, placement: Sequence[int]) -> State:
    """Place ``state`` on ``placement`` inside ``total_sites``, the rest in ``|0...0>``."""
    placement = check_sites(placement, total_sites)
    if len(placement) != state.n:
        raise UsageError(f"placement {placement} does not match a {state.n}-site state")
    blanks = total_sites - state.n
    if blanks == 0:
        return state
    zero = basis_state([0] * blanks, state.d)
    if isinstance(state, DensityMatrix):
        a = zero.amplitudes
        zero = DensityMatrix(np.outer(a, a.conj()), blanks, state.d, factor=a[:, None], check=False)
    joint = tensor(state, zero)
    others = [k for k in range(total_sites) if k not in placement]
    # new site s holds old site order[s]
    order = [0] * total_sites
    for old, new in enumerate(list(placement) + others):
        order[new] = old
    return permute_sites(joint, order)


@dataclass(frozen=True)
class AdditivityReport:
    m_lhs: float
    m_rhs: float
    mt_lhs: float
    mt_rhs: float

    @property
    def m_gap(self):
        return self.m_lhs - self.m_rhs

    @property
    def mt_gap(self):
        return self.mt_lhs - self.mt_rhs


def additivity_check(sigma: StateVector, eta: StateVector, kind) -> AdditivityReport:
    """Compare ``M(sigma⊗eta)`` with the blank-padded sum, and ``M^T`` with the plain sum."""
    if not (isinstance(sigma, StateVector) and isinstance(eta, StateVector)):
        raise UsageError("additivity_check takes pure states")
    total = sigma.n + eta.n
    joint = measure_m(tensor(sigma, eta), kind)
    left = measure_m(embed_with_blank(sigma, total, range(sigma.n)), kind)
    right = measure_m(embed_with_blank(eta, total, range(sigma.n, total)), kind)
    mt_parts = 0.0
    for part in (sigma, eta):
        if part.n >= 2:
            mt_parts += measure_m(part, kind).mt_value
    return AdditivityReport(joint.m_value, left.m_value + right.m_value, joint.mt_value, mt_parts)


@dataclass(frozen=True)
class SSAReport:
    lhs: float
    rhs_upper_bound: float
    roof_ab: float
    roof_ab_prime: float

    @property
    def margin(self):
        return self.lhs - self.rhs_upper_bound

    @property
    def candidate_violation(self):
        # optimizer values are upper bounds, so a negative margin is only a candidate
        return self.margin < -1e-6


def ssa_falsify(state: StateVector, a, a_prime, b, b_prime, kind, **roof_options) -> SSAReport:
    """Numerically probe ``M(rho^{AA'BB'}) >= M(rho^{AB}⊗0) + M(0⊗rho^{A'B'})``.

    Both right-hand terms are convex-roof values on the reduced states,
    scaled with the normalization of the full register.
    """
    from .convexroof import convex_roof

    kind = ProbeKind.parse(kind)
    if not isinstance(state, StateVector):
        raise UsageError("ssa_falsify takes a pure state")
    groups = [check_sites(sorted(g), state.n) for g in (a, a_prime, b, b_prime)]
    flat = [s for g in groups for s in g]
    if len(set(flat)) != len(flat):
        raise UsageError("registers A, A', B, B' must be disjoint")
    if sorted(flat) != list(range(state.n)):
        raise UsageError("registers A, A', B, B' must cover the whole register")
    scale = measure_scale(kind, state.n)
    lhs = measure_m(state, kind).m_value
    roofs = []
    for first, second in ((groups[0], groups[2]), (groups[1], groups[3])):
        rho = partial_trace(state, sorted(first + second))
        roofs.append(convex_roof(rho, kind, form="sum", **roof_options).value)
    return SSAReport(lhs, scale * sum(roofs), roofs[0], roofs[1])


@dataclass(frozen=True)
class SweepReport:
    n: int
    d: int
    kind: ProbeKind
    trials: int
    bound: float
    max_value: float
    passed: int
    worst_seed: int

    @property
    def ok(self):
        return self.passed == self.trials


def normalization_sweep(n: int, d: int = 2, trials: int = 1000, seed: int = 0,
                        kind=ProbeKind.FR, batch: int = 200) -> SweepReport:
    """Check ``M <= log2 d`` on random pure states (Fr normalization bound)."""
    kind = ProbeKind.parse(kind)
    bound = float(np.log2(d))
    factor = normalization_factor(kind, n)
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    best, best_seed, passed = -np.inf, -1, 0
    for start in range(0, trials, batch):
        chunk = seeds[start:start + batch]
        amps = np.stack([random_pure(n, d, int(s)).amplitudes for s in chunk])
        m = factor * pair_values_batch(amps, n, d, kind).mean(axis=1)
        passed += int((m <= bound + ZERO_TOL).sum())
        k = int(m.argmax())
        if m[k] > best:
            best, best_seed = float(m[k]), int(chunk[k])
    return SweepReport(n, d, kind, trials, bound, best, passed, best_seed)
