"""Reference implementations that share no code path with the package.

Eigenvalues come from a cyclic Jacobi sweep on the real symmetric embedding
``[[A, -B], [B, A]]`` of ``H = A + iB`` (each eigenvalue appears twice), so
LAPACK is never involved. Partial traces are explicit index loops.
"""
import itertools
import math

import numpy as np


def jacobi_symmetric(s, tol=1e-15, max_sweeps=100):
    """Eigenvalues and eigenvectors (columns) of a real symmetric matrix."""
    a = np.array(s, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[p, q] ** 2 for p in range(n) for q in range(n) if p != q))
        if off <= tol * max(1.0, np.abs(a).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                sn = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = sn, -sn
                a = rot.T @ a @ rot
                v = v @ rot
    return np.diag(a).copy(), v


def hermitian_eigenvalues(h):
    """Ascending eigenvalues of a complex Hermitian matrix."""
    h = np.asarray(h, dtype=complex)
    a, b = h.real, h.imag
    w, _ = jacobi_symmetric(np.block([[a, -b], [b, a]]))
    return np.sort(w)[::2]


def hermitian_eigh(h):
    """Eigenvalues and orthonormal complex eigenvectors via the real embedding."""
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    a, b = h.real, h.imag
    w, v = jacobi_symmetric(np.block([[a, -b], [b, a]]))
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    vecs = v[:n] + 1j * v[n:]
    # pick one vector per pair by Gram-Schmidt
    basis, vals = [], []
    for k in range(2 * n):
        x = vecs[:, k].copy()
        for y in basis:
            x -= np.vdot(y, x) * y
        nx = np.linalg.norm(x)
        if nx > 1e-6:
            basis.append(x / nx)
            vals.append(w[k])
        if len(basis) == n:
            break
    return np.array(vals), np.stack(basis, axis=1)


def partial_trace_loops(rho, n, d, keep):
    """``tr_{not keep} rho`` by summing matrix elements one at a time."""
    keep = list(keep)
    rest = [k for k in range(n) if k not in keep]
    dk = d ** len(keep)
    out = np.zeros((dk, dk), dtype=complex)

    def index(digits):
        return int(sum(dig * d ** (n - 1 - s) for s, dig in enumerate(digits)))

    for kr in itertools.product(range(d), repeat=len(keep)):
        for kc in itertools.product(range(d), repeat=len(keep)):
            total = 0j
            for r in itertools.product(range(d), repeat=len(rest)):
                row = [0] * n
                col = [0] * n
                for s, dig in zip(keep, kr):
                    row[s] = dig
                for s, dig in zip(keep, kc):
                    col[s] = dig
                for s, dig in zip(rest, r):
                    row[s] = col[s] = dig
                total += rho[index(row), index(col)]
            out[int(np.ravel_multi_index(kr, (d,) * len(keep))) if keep else 0,
                int(np.ravel_multi_index(kc, (d,) * len(keep))) if keep else 0] = total
    return out


def entropy_bits(rho):
    w = hermitian_eigenvalues(rho)
    w = w[w > 1e-14]
    return float(-(w * np.log2(w)).sum())


def mutual_info_half(rho2, d):
    """Half mutual information of a two-qudit matrix, with loop partial traces."""
    a = partial_trace_loops(rho2, 2, d, [0])
    b = partial_trace_loops(rho2, 2, d, [1])
    return 0.5 * (entropy_bits(a) + entropy_bits(b) - entropy_bits(rho2))


def wootters_lambdas(rho):
    """Square roots of the eigenvalues of ``sqrt(rho) rho~ sqrt(rho)``, descending."""
    yy = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=complex)
    w, v = hermitian_eigh(rho)
    root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    flip = yy @ rho.conj() @ yy
    mu = hermitian_eigenvalues(root @ flip @ root)
    return np.sqrt(np.clip(mu, 0, None))[::-1]


def concurrence(rho):
    l1, l2, l3, l4 = wootters_lambdas(rho)
    return max(0.0, l1 - l2 - l3 - l4)


def pure_concurrence(psi):
    a, b, c, d = psi
    return 2 * abs(a * d - b * c)


def eof_from_concurrence(c):
    p = (1 + math.sqrt(max(0.0, 1 - c * c))) / 2
    if p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def outer(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())
