"""Qudit registers: pure states, density matrices and the operations between them.

Site 0 is the leftmost tensor factor, so in a computational basis index the
digit of site 0 is the most significant (base ``d``). The 1-based qubit
label ``k`` corresponds to site ``k - 1``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import UsageError
from .numerics import as_matrix, hermitian_eigensystem

NORM_TOL = 1e-10
PSD_TOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


def _register_size(dim, d):
    n = round(math.log(dim, d)) if dim > 1 else 0
    if d ** n != dim:
        raise UsageError(f"dimension {dim} is not a power of local dimension {d}")
    return n


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state of ``n`` qudits of local dimension ``d``."""

    amplitudes: np.ndarray
    n: int
    d: int = 2

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.d < 2:
            raise UsageError("local dimension must be at least 2")
        if self.n < 1 or amps.size != self.d ** self.n:
            raise UsageError(f"expected {self.d}**{self.n} amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1) > NORM_TOL:
            raise UsageError(f"state is not normalized (norm^2 = {norm:.12g})")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def normalized(cls, amplitudes, n=None, d=2):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise UsageError("zero vector cannot be normalized")
        if n is None:
            n = _register_size(amps.size, d)
        return cls(amps / nrm, n, d)

    @property
    def dim(self):
        return self.amplitudes.size

    def tensor(self):
        return self.amplitudes.reshape((self.d,) * self.n)

    def __repr__(self):
        return f"StateVector(n={self.n}, d={self.d})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, PSD, trace-one operator on ``n`` qudits.

    ``factor`` optionally holds a matrix ``F`` with ``matrix == F @ F^H``.
    Reductions of pure states carry one; spectral quantities computed from
    it avoid square roots of round-off sized eigenvalues.
    """

    matrix: np.ndarray
    n: int
    d: int = 2
    factor: Optional[np.ndarray] = field(default=None, repr=False)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = as_matrix(self.matrix, hermitian=True, tol=NORM_TOL)
        if m.shape[0] != self.d ** self.n:
            raise UsageError(f"expected dimension {self.d}**{self.n}, got {m.shape[0]}")
        tr = np.trace(m).real
        if abs(tr - 1) > NORM_TOL:
            raise UsageError(f"density matrix trace is {tr:.12g}, not 1")
        if self.check:
            w, _ = hermitian_eigensystem(m)
            if w[0] < -PSD_TOL:
                raise UsageError(f"density matrix has negative eigenvalue {w[0]:.3e}")
        object.__setattr__(self, "matrix", _frozen(m))
        if self.factor is not None:
            f = np.asarray(self.factor, dtype=complex)
            object.__setattr__(self, "factor", _frozen(f.reshape(m.shape[0], -1)))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def purity(self):
        return float(np.trace(self.matrix @ self.matrix).real)

    def __repr__(self):
        return f"DensityMatrix(n={self.n}, d={self.d})"


State = Union[StateVector, DensityMatrix]


def check_sites(sites: Sequence[int], n: int) -> tuple:
    """Validate a site subset: nonempty, strictly increasing, within ``[0, n)``."""
    sites = tuple(int(s) for s in sites)
    if not sites:
        raise UsageError("site subset is empty")
    if any(s < 0 or s >= n for s in sites):
        raise UsageError(f"site subset {sites} out of range for {n} sites")
    if any(b <= a for a, b in zip(sites, sites[1:])):
        raise UsageError(f"site subset {sites} must be strictly increasing")
    return sites


def density_of(psi: StateVector) -> DensityMatrix:
    a = psi.amplitudes
    return DensityMatrix(np.outer(a, a.conj()), psi.n, psi.d, factor=a[:, None], check=False)


def _reduced_factor(tensor_factor, n, d, keep):
    """Reshape a factor with leading register axes into ``(d**k, rest)``."""
    rest = [i for i in range(n) if i not in keep]
    order = list(keep) + rest + list(range(n, tensor_factor.ndim))
    return np.transpose(tensor_factor, order).reshape(d ** len(keep), -1)


def partial_trace(state: State, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on the sites ``keep`` (all others traced out)."""
    keep = check_sites(keep, state.n)
    n, d = state.n, state.d
    if isinstance(state, StateVector):
        f = _reduced_factor(state.tensor(), n, d, keep)
        return DensityMatrix(f @ f.conj().T, len(keep), d, factor=f, check=False)
    if state.factor is not None:
        t = state.factor.reshape((d,) * n + (-1,))
        f = _reduced_factor(t, n, d, keep)
        return DensityMatrix(f @ f.conj().T, len(keep), d, factor=f, check=False)
    t = state.matrix.reshape((d,) * (2 * n))
    rows = list(range(n))
    cols = [i if i not in keep else n + i for i in range(n)]
    out = list(keep) + [n + i for i in keep]
    r = np.einsum(t, rows + cols, out)
    return DensityMatrix(r.reshape(d ** len(keep), -1), len(keep), d, check=False)


def tensor(a: State, b: State) -> State:
    """Tensor product ``a ⊗ b``; sites of ``b`` follow those of ``a``."""
    if a.d != b.d:
        raise UsageError(f"local dimensions differ ({a.d} vs {b.d})")
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes), a.n + b.n, a.d)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        f = None
        if a.factor is not None and b.factor is not None:
            f = np.kron(a.factor, b.factor)
        return DensityMatrix(np.kron(a.matrix, b.matrix), a.n + b.n, a.d, factor=f, check=False)
    raise UsageError("cannot tensor a pure state with a density matrix")


def permute_sites(state: State, order: Sequence[int]) -> State:
    """Relabel sites so that new site ``k`` is old site ``order[k]``."""
    order = [int(o) for o in order]
    if sorted(order) != list(range(state.n)):
        raise UsageError(f"{order} is not a permutation of {state.n} sites")
    n, d = state.n, state.d
    if isinstance(state, StateVector):
        return StateVector(np.transpose(state.tensor(), order).reshape(-1), n, d)
    t = state.matrix.reshape((d,) * (2 * n))
    m = np.transpose(t, order + [n + o for o in order]).reshape(d ** n, -1)
    f = None
    if state.factor is not None:
        ft = state.factor.reshape((d,) * n + (-1,))
        f = np.transpose(ft, order + [n]).reshape(d ** n, -1)
    return DensityMatrix(m, n, d, factor=f, check=False)


def apply_local(state: State, site: int, op) -> State:
    """Apply a single-site unitary ``op`` at ``site``."""
    n, d = state.n, state.d
    op = np.asarray(op, dtype=complex)
    if op.shape != (d, d) or not 0 <= site < n:
        raise UsageError("operator shape or site does not match the register")
    full = np.kron(np.kron(np.eye(d ** site), op), np.eye(d ** (n - site - 1)))
    if isinstance(state, StateVector):
        return StateVector(full @ state.amplitudes, n, d)
    f = None if state.factor is None else full @ state.factor
    return DensityMatrix(full @ state.matrix @ full.conj().T, n, d, factor=f, check=False)


def basis_state(digits: Sequence[int], d: int = 2) -> StateVector:
    idx = 0
    for x in digits:
        idx = idx * d + int(x)
    amps = np.zeros(d ** len(digits), dtype=complex)
    amps[idx] = 1
    return StateVector(amps, len(digits), d)


def _ket(terms, n, d=2):
    amps = np.zeros(d ** n, dtype=complex)
    for coeff, bits in terms:
        amps[int(bits, d)] += coeff
    return StateVector.normalized(amps, n, d)


def ghz(n: int, d: int = 2) -> StateVector:
    """Generalized GHZ state ``sum_k |k...k> / sqrt(d)``."""
    if n < 2:
        raise UsageError("ghz needs N >= 2")
    amps = np.zeros(d ** n, dtype=complex)
    step = sum(d ** i for i in range(n))
    amps[[k * step for k in range(d)]] = 1 / math.sqrt(d)
    return StateVector(amps, n, d)


def w_state(n: int) -> StateVector:
    if n < 3:
        raise UsageError("w needs N >= 3")
    amps = np.zeros(2 ** n, dtype=complex)
    amps[[2 ** k for k in range(n)]] = 1 / math.sqrt(n)
    return StateVector(amps, n)


def mems(x: float) -> DensityMatrix:
    """Two-qubit maximally entangled mixed state family, basis order 00, 01, 10, 11."""
    if not 0 <= x <= 1:
        raise UsageError(f"mems parameter must lie in [0, 1], got {x}")
    m = np.zeros((4, 4))
    m[0, 0] = m[0, 3] = m[3, 0] = m[3, 3] = x / 2
    m[1, 1] = 1 - x
    return DensityMatrix(m, 2)


def pure_mems(x: float) -> StateVector:
    """Four-qubit purification of :func:`mems`; sites {0, 1} reduce to ``mems(x)``."""
    if not 0 <= x <= 1:
        raise UsageError(f"puremems parameter must lie in [0, 1], got {x}")
    a, b = math.sqrt(1 - x), math.sqrt(x / 4)
    return _ket([(a, "0101"), (b, "0000"), (b, "0011"), (b, "1100"), (b, "1111")], 4)


def _fixed_states():
    h = 0.5
    return {
        "epr": lambda: _ket([(1, "00"), (1, "11")], 2),
        "psi4": lambda: _ket([(h, "0000"), (h, "0110"), (h, "1001"), (h, "1111")], 4),
        "chi4": lambda: _ket(
            [(1, "0000"), (-1, "0011"), (-1, "0101"), (1, "0110"),
             (1, "1001"), (1, "1010"), (1, "1100"), (1, "1111")], 4),
        "cluster4": lambda: _ket([(h, "0000"), (h, "0110"), (h, "1001"), (-h, "1111")], 4),
    }


NAMED_STATES = ("epr", "ghz:N[:d]", "w:N", "psi4", "chi4", "cluster4",
                "mems:x", "puremems:x", "zero:N[:d]", "basis:N:k[:d]")


def named_state(spec: str) -> State:
    """Look up a library state from a spec such as ``ghz:5`` or ``mems:0.3``.

    ``basis:N:k`` is the computational basis state with integer index ``k``.
    """
    name, *args = spec.strip().lower().split(":")
    fixed = _fixed_states()
    try:
        if name in fixed and not args:
            return fixed[name]()
        if name == "ghz" and len(args) in (1, 2):
            return ghz(int(args[0]), int(args[1]) if len(args) == 2 else 2)
        if name == "w" and len(args) == 1:
            return w_state(int(args[0]))
        if name == "mems" and len(args) == 1:
            return mems(float(args[0]))
        if name == "puremems" and len(args) == 1:
            return pure_mems(float(args[0]))
        if name == "zero" and len(args) in (1, 2):
            n, d = int(args[0]), int(args[1]) if len(args) == 2 else 2
            if n < 1:
                raise UsageError("zero needs N >= 1")
            return basis_state([0] * n, d)
        if name == "basis" and len(args) in (2, 3):
            n, k = int(args[0]), int(args[1])
            d = int(args[2]) if len(args) == 3 else 2
            if n < 1 or d < 2 or not 0 <= k < d ** n:
                raise UsageError(f"basis index {k} out of range for {n} sites of dimension {d}")
            digits = np.unravel_index(k, (d,) * n)
            return basis_state([int(x) for x in digits], d)
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"bad parameter in state spec {spec!r}: {exc}") from exc
    raise UsageError(f"unknown state spec {spec!r}; known: {', '.join(NAMED_STATES)}")


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _ginibre(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_pure(n: int, d: int = 2, seed=None) -> StateVector:
    """Haar-random pure state (normalized complex Gaussian vector)."""
    return StateVector.normalized(_ginibre(_rng(seed), d ** n), n, d)


def random_mixed(n: int, d: int = 2, rank: Optional[int] = None, seed=None) -> DensityMatrix:
    """Random mixed state: reduction of a Haar-random purification with a rank-dim ancilla."""
    dim = d ** n
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise UsageError(f"rank must lie in [1, {dim}]")
    g = _ginibre(_rng(seed), (dim, rank))
    g /= np.linalg.norm(g)
    return DensityMatrix(g @ g.conj().T, n, d, factor=g, check=False)


def random_product(n: int, d: int = 2, seed=None) -> StateVector:
    rng = _rng(seed)
    amps = np.ones(1, dtype=complex)
    for _ in range(n):
        v = _ginibre(rng, d)
        amps = np.kron(amps, v / np.linalg.norm(v))
    return StateVector.normalized(amps, n, d)


def haar_unitary(d: int, seed=None) -> np.ndarray:
    q, r = np.linalg.qr(_ginibre(_rng(seed), (d, d)))
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


# --- JSON state format -----------------------------------------------------

def _pairs(a):
    return [[float(z.real), float(z.imag)] for z in np.asarray(a).reshape(-1)]


def state_to_dict(state: State) -> dict:
    if isinstance(state, StateVector):
        return {"n": state.n, "d": state.d, "amplitudes": _pairs(state.amplitudes)}
    return {"n": state.n, "d": state.d, "matrix": [_pairs(row) for row in state.matrix]}


def _complex_array(obj, what):
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{what}: expected [re, im] pairs") from exc
    if a.shape[-1:] != (2,):
        raise UsageError(f"{what}: expected [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def state_from_dict(obj: dict, renormalize: bool = False) -> State:
    try:
        n, d = int(obj["n"]), int(obj.get("d", 2))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError("state JSON needs integer fields 'n' and 'd'") from exc
    if "amplitudes" in obj:
        amps = _complex_array(obj["amplitudes"], "amplitudes")
        if renormalize:
            return StateVector.normalized(amps, n, d)
        return StateVector(amps, n, d)
    if "matrix" in obj:
        return DensityMatrix(_complex_array(obj["matrix"], "matrix"), n, d)
    raise UsageError("state JSON needs 'amplitudes' or 'matrix'")


def load_state_file(path) -> State:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read state file {path}: {exc}") from exc
    return state_from_dict(obj)


def resolve_state(text: str, d: Optional[int] = None):
    """Named spec or ket expression. Returns ``(state, warning_or_None)``."""
    if "|" in text:
        from .ketparse import parse_ket

        parsed = parse_ket(text, d=d)
        warning = None
        if parsed.renormalized:
            warning = f"input norm {parsed.input_norm:.6g} differs from 1; state was renormalized"
        return parsed.state, warning
    return named_state(text), None
