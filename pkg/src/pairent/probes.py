"""Two-qudit probe quantities: quasi-concurrence and halved mutual information.

All spectral work goes through a factor ``F`` with ``rho = F F^H``. For the
Wootters quantities the singular values of ``F^T (Y⊗Y) F`` are exactly the
square roots of the eigenvalues of ``rho * spin_flip(rho)``; taking them from
a factor keeps round-off sized eigenvalues from being inflated by a square
root. Reductions of pure states carry an exact factor; other density
matrices fall back to ``psd_sqrt(rho)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedError
from .numerics import SIGMA_YY, clamp_spectrum, hermitian_eigensystem, psd_sqrt
from .qstate import DensityMatrix, partial_trace


class ProbeKind(enum.Enum):
    QC = "qc"
    FR = "fr"

    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).lower())
        except ValueError:
            raise UnsupportedError(f"unknown probe {text!r}; expected 'qc' or 'fr'") from None

    @property
    def label(self):
        return {"qc": "Q_C", "fr": "Fr"}[self.value]


@dataclass(frozen=True)
class WoottersSpectrum:
    """The four ``lambda_i``, descending."""

    lambdas: tuple

    @property
    def concurrence(self):
        l1, l2, l3, l4 = self.lambdas
        return max(0.0, l1 - l2 - l3 - l4)

    @property
    def quasi_concurrence(self):
        l1, l2, l3, l4 = self.lambdas
        return l1 + l2 - l3 - l4


def _require_two_qubits(rho):
    if rho.d != 2 or rho.n != 2:
        raise UnsupportedError(f"Wootters quantities need two qubits (got n={rho.n}, d={rho.d})")


def factor_of(rho: DensityMatrix):
    if rho.factor is not None:
        return np.asarray(rho.factor)
    return psd_sqrt(rho.matrix)


def spin_flip(rho: DensityMatrix) -> DensityMatrix:
    _require_two_qubits(rho)
    m = SIGMA_YY @ rho.matrix.conj() @ SIGMA_YY
    return DensityMatrix(m, 2, 2, check=False)


def lambdas_from_factor(f):
    """Batched Wootters lambdas from factors of shape ``(..., 4, k)``."""
    f = np.asarray(f, dtype=complex)
    k = f.shape[-1]
    if k < 4:
        pad = np.zeros(f.shape[:-1] + (4 - k,), dtype=complex)
        f = np.concatenate([f, pad], axis=-1)
    elif k > 4:
        # F = R^H Q^H with Q an isometry; singular values only depend on R.
        _, r = np.linalg.qr(np.swapaxes(f.conj(), -1, -2))
        f = np.swapaxes(r.conj(), -1, -2)
    tau = np.swapaxes(f, -1, -2) @ SIGMA_YY @ f
    return np.linalg.svd(tau, compute_uv=False)


def wootters_spectrum(rho: DensityMatrix) -> WoottersSpectrum:
    _require_two_qubits(rho)
    lam = lambdas_from_factor(factor_of(rho))
    return WoottersSpectrum(tuple(float(x) for x in lam))


def concurrence(rho: DensityMatrix) -> float:
    return wootters_spectrum(rho).concurrence


def quasi_concurrence(rho: DensityMatrix) -> float:
    """``lambda_1 + lambda_2 - lambda_3 - lambda_4``; zero exactly on product states."""
    return wootters_spectrum(rho).quasi_concurrence


def entropy_from_probabilities(p):
    """Shannon entropy in bits along the last axis, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    safe = np.where(p > 0, p, 1.0)
    return -(p * np.log2(safe)).sum(axis=-1)


def entropy_from_factor(f):
    """Batched von Neumann entropy of ``F F^H`` for factors ``(..., D, k)``."""
    s = np.linalg.svd(np.asarray(f, dtype=complex), compute_uv=False)
    return entropy_from_probabilities(s * s)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy in bits."""
    if rho.factor is not None:
        return float(entropy_from_factor(rho.factor))
    w, _ = hermitian_eigensystem(rho.matrix)
    return float(entropy_from_probabilities(clamp_spectrum(w)))


def mutual_information_fr(rho: DensityMatrix) -> float:
    """Half the quantum mutual information ``(S(A) + S(B) - S(AB)) / 2`` in bits."""
    if rho.n != 2:
        raise UnsupportedError(f"Fr needs a two-site state (got n={rho.n})")
    sa = von_neumann_entropy(partial_trace(rho, [0]))
    sb = von_neumann_entropy(partial_trace(rho, [1]))
    return 0.5 * (sa + sb - von_neumann_entropy(rho))


def probe_eval(kind, rho: DensityMatrix) -> float:
    kind = ProbeKind.parse(kind)
    if kind is ProbeKind.QC:
        return quasi_concurrence(rho)
    return mutual_information_fr(rho)


def binary_entropy(p):
    return float(entropy_from_probabilities([p, 1 - p]))


def entanglement_of_formation(rho: DensityMatrix) -> float:
    """Two-qubit EoF from the concurrence (binary entropy form)."""
    c = concurrence(rho)
    return binary_entropy((1 + np.sqrt(max(0.0, 1 - c * c))) / 2)
