"""Local instruments and Monte Carlo tests of LOCC monotonicity of ``M``.

A trial starts from a pure state and applies ``rounds`` rounds. In each round
every current branch independently picks a site uniformly at random and a
random two-outcome instrument, both drawn from a generator seeded by the trial
seed, the round and the branch's outcome history. Conditioning on the history
stands in for classical communication. The branch-averaged ``M`` must not
increase from one round to the next.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import UsageError
from .measure import normalization_factor, pair_values_batch
from .numerics import psd_sqrt
from .probes import ProbeKind
from .qstate import StateVector, random_pure

COMPLETENESS_TOL = 1e-10
BRANCH_FLOOR = 1e-14
VIOLATION_TOL = -1e-8


@dataclass(frozen=True, eq=False)
class LocalInstrument:
    site: int
    kraus: tuple
    d: int = 2

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ops or any(k.shape != (self.d, self.d) for k in ops):
            raise UsageError(f"Kraus operators must be {self.d}x{self.d}")
        total = sum(k.conj().T @ k for k in ops)
        err = np.abs(total - np.eye(self.d)).max()
        if err > COMPLETENESS_TOL:
            raise UsageError(f"Kraus operators are not complete (max |sum K^H K - I| = {err:.3e})")
        object.__setattr__(self, "kraus", ops)

    @property
    def outcomes(self):
        return len(self.kraus)


@dataclass(frozen=True, eq=False)
class LoccBranch:
    probability: float
    state: StateVector
    outcomes: tuple = ()


def random_instrument(d: int = 2, outcomes: int = 2, seed=None, site: int = 0) -> LocalInstrument:
    """``K_i = A_i S^{-1/2}`` with Ginibre ``A_i`` and ``S = sum A_i^H A_i``."""
    if outcomes < 1:
        raise UsageError("an instrument needs at least one outcome")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    a = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for _ in range(outcomes)]
    s = sum(x.conj().T @ x for x in a) + 1e-14 * np.eye(d)
    inv_root = np.linalg.inv(psd_sqrt(s))
    return LocalInstrument(site, tuple(x @ inv_root for x in a), d)


def projective_instrument(d: int = 2, site: int = 0) -> LocalInstrument:
    eye = np.eye(d)
    return LocalInstrument(site, tuple(np.outer(eye[k], eye[k]) for k in range(d)), d)


def _apply_kraus(tensor, site, k):
    return np.moveaxis(np.tensordot(k, tensor, axes=([1], [site])), 0, site)


def apply_instrument(psi: StateVector, inst: LocalInstrument) -> list:
    """Outcome branches with probability ``|K_i psi|^2``; negligible ones are dropped."""
    if inst.d != psi.d or not 0 <= inst.site < psi.n:
        raise UsageError("instrument does not fit the register")
    t = psi.tensor()
    out = []
    for idx, k in enumerate(inst.kraus):
        v = _apply_kraus(t, inst.site, k).reshape(-1)
        p = float(np.vdot(v, v).real)
        if p >= BRANCH_FLOOR:
            out.append(LoccBranch(p, StateVector(v / math.sqrt(p), psi.n, psi.d), (idx,)))
    return out


@dataclass(frozen=True)
class TrialReport:
    seed: int
    n: int
    kind: ProbeKind
    initial: float
    averages: tuple
    margins: tuple

    @property
    def worst_margin(self):
        return min(self.margins) if self.margins else math.inf

    @property
    def violated(self):
        return self.worst_margin < VIOLATION_TOL


def _measure_batch(amps, n, d, kind):
    return normalization_factor(kind, n) * pair_values_batch(amps, n, d, kind).mean(axis=1)


def locc_monotonicity_trial(psi: StateVector, kind, rounds: int = 2, seed: int = 0,
                            outcomes: int = 2) -> TrialReport:
    kind = ProbeKind.parse(kind)
    n, d = psi.n, psi.d
    branches = [(1.0, psi.amplitudes, ())]
    initial = float(_measure_batch(psi.amplitudes[None, :], n, d, kind)[0])
    averages, margins = [], []
    before = initial
    for rnd in range(rounds):
        nxt = []
        for p, amps, path in branches:
            rng = np.random.default_rng([seed, rnd, *path])
            site = int(rng.integers(n))
            inst = random_instrument(d, outcomes, rng, site)
            t = amps.reshape((d,) * n)
            for idx, k in enumerate(inst.kraus):
                v = _apply_kraus(t, site, k).reshape(-1)
                q = float(np.vdot(v, v).real)
                if q >= BRANCH_FLOOR:
                    nxt.append((p * q, v / math.sqrt(q), path + (idx,)))
        branches = nxt
        probs = np.array([b[0] for b in branches])
        values = _measure_batch(np.stack([b[1] for b in branches]), n, d, kind)
        after = float(probs @ values / probs.sum())
        averages.append(after)
        margins.append(before - after)
        before = after
    return TrialReport(int(seed), n, kind, initial, tuple(averages), tuple(margins))


@dataclass
class CampaignReport:
    trials: int
    rounds: int
    seed: int
    kinds: tuple
    n_values: tuple
    violations: list = field(default_factory=list)
    worst: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    @property
    def violation_count(self):
        return len(self.violations)


def trial_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _run_trial(args):
    index, n, seed, kinds, rounds = args
    ts = trial_seed(seed, index)
    psi = random_pure(n, 2, ts)
    return index, n, ts, psi, [locc_monotonicity_trial(psi, k, rounds, ts) for k in kinds]


def locc_campaign(trials: int, n_values: Sequence[int] = (2, 3, 4, 5), kinds=("qc", "fr"),
                  rounds: int = 2, seed: int = 0, jobs: int = 1) -> CampaignReport:
    """Random pure qubit states, cycled over ``n_values``; every violation is archived."""
    kinds = tuple(ProbeKind.parse(k) for k in kinds)
    n_values = tuple(int(n) for n in n_values)
    if any(n < 2 for n in n_values):
        raise UsageError("LOCC trials need N >= 2")
    tasks = [(i, n_values[i % len(n_values)], seed, kinds, rounds) for i in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial, tasks, chunksize=64))
    else:
        results = [_run_trial(t) for t in tasks]
    report = CampaignReport(trials, rounds, seed, tuple(k.value for k in kinds), n_values)
    for index, n, ts, psi, reports in results:
        for rep in reports:
            key = f"{rep.kind.value}:{n}"
            count = report.counts.setdefault(key, {"trials": 0, "violations": 0})
            count["trials"] += 1
            if key not in report.worst or rep.worst_margin < report.worst[key]["margin"]:
                report.worst[key] = {"margin": rep.worst_margin, "trial": index, "seed": ts}
            if rep.violated:
                count["violations"] += 1
                report.violations.append({
                    "trial": index, "seed": ts, "n": n, "probe": rep.kind.value,
                    "margin": rep.worst_margin, "initial": rep.initial,
                    "averages": list(rep.averages),
                    "amplitudes": [[float(z.real), float(z.imag)] for z in psi.amplitudes],
                })
    return report
