"""Randomized property suites behind ``pairent randcheck``.

Each suite draws its inputs from per-trial seeds, records the worst margin
(positive means the property holds with room to spare) and the seed that
produced it, so any failure can be replayed on its own.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .measure import additivity_check, measure_m, normalization_sweep, pair_profile
from .probes import von_neumann_entropy, wootters_spectrum
from .qstate import (apply_local, haar_unitary, partial_trace, random_mixed,
                     random_product, random_pure)

PROBE_TOL = 1e-9
ENTROPY_TOL = 1e-8
MAX_RANDOM_N = 5


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    n: int
    d: int
    trials: int
    passed: int
    worst_margin: float
    worst_seed: int

    @property
    def ok(self):
        return self.passed == self.trials


def trial_seed(seed, index):
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _run(name, n, d, trials, seed, margin_of):
    passed, worst, worst_seed = 0, np.inf, -1
    for i in range(trials):
        ts = trial_seed(seed, i)
        margin = margin_of(np.random.default_rng(ts))
        passed += margin >= 0
        if margin < worst:
            worst, worst_seed = margin, ts
    return SuiteResult(name, n, d, trials, int(passed), float(worst), worst_seed)


def normalization(n=4, d=2, trials=1000, seed=0):
    """``M_Fr <= log2 d`` on random pure states."""
    rep = normalization_sweep(n, d, trials, seed)
    return SuiteResult("normalization", n, d, trials, rep.passed, rep.bound - rep.max_value,
                       rep.worst_seed)


def _probes_for(d):
    return ("qc", "fr") if d == 2 else ("fr",)


def _size(n, rng):
    return int(rng.integers(2, MAX_RANDOM_N + 1)) if n is None else n


def lu_invariance(n=None, d=2, trials=500, seed=0):
    """``M`` changes by at most 1e-9 under random local unitaries.

    ``n=None`` draws the register size uniformly from 2..5 per trial.
    """
    def margin(rng):
        psi = random_pure(_size(n, rng), d, rng)
        moved = psi
        for site in range(psi.n):
            moved = apply_local(moved, site, haar_unitary(d, rng))
        drift = max(abs(measure_m(psi, k).m_value - measure_m(moved, k).m_value)
                    for k in _probes_for(d))
        return PROBE_TOL - drift
    return _run("lu", n or 0, d, trials, seed, margin)


def product_zeros(n=None, d=2, trials=500, seed=0):
    """Every pair probe vanishes on random product states (``n=None`` as for LU)."""
    def margin(rng):
        psi = random_product(_size(n, rng), d, rng)
        top = max(pair_profile(psi, k).array().max() for k in _probes_for(d))
        return PROBE_TOL - top
    return _run("product", n or 0, d, trials, seed, margin)


def qc_vs_concurrence(trials=1000, seed=0):
    """``Q_C >= C`` on random two-qubit mixed states of rank 1..4."""
    def margin(rng):
        rho = random_mixed(2, 2, int(rng.integers(1, 5)), rng)
        spec = wootters_spectrum(rho)
        return spec.quasi_concurrence - spec.concurrence + PROBE_TOL
    return _run("qc-vs-c", 2, 2, trials, seed, margin)


def additivity(trials=200, seed=0):
    """``M^T`` additivity and the blank-padded ``M`` additivity on product pairs."""
    def margin(rng):
        sigma = random_pure(2, 2, rng)
        eta = random_pure(int(rng.integers(2, 4)), 2, rng)
        gaps = []
        for kind in ("qc", "fr"):
            rep = additivity_check(sigma, eta, kind)
            gaps += [abs(rep.mt_gap), abs(rep.m_gap)]
        return PROBE_TOL - max(gaps)
    return _run("additivity", 0, 2, trials, seed, margin)


def entropy_ssa(trials=500, seed=0):
    """``S(XYZ) <= S(XY) + S(YZ) - S(Y)`` for every role assignment on 3 sites."""
    def margin(rng):
        d = int(rng.choice([2, 3]))
        if rng.random() < 0.5:
            state = random_pure(3, d, rng)
            whole = 0.0
        else:
            state = random_mixed(3, d, int(rng.integers(1, d ** 3 + 1)), rng)
            whole = von_neumann_entropy(state)
        ent = {}
        for k in (1, 2):
            for sub in itertools.combinations(range(3), k):
                ent[sub] = von_neumann_entropy(partial_trace(state, sub))
        worst = np.inf
        for x, y, z in itertools.permutations(range(3)):
            xy = ent[tuple(sorted((x, y)))]
            yz = ent[tuple(sorted((y, z)))]
            worst = min(worst, xy + yz - ent[(y,)] - whole)
        return worst + ENTROPY_TOL
    return _run("ssa", 3, 0, trials, seed, margin)


SUITES = {
    "normalization": normalization,
    "lu": lu_invariance,
    "product": product_zeros,
    "qc-vs-c": qc_vs_concurrence,
    "additivity": additivity,
    "ssa": entropy_ssa,
}

