"""Dense-matrix reference constructions for small systems.

Everything here builds explicit ``2^N x 2^N`` matrices with Kronecker
products and generic eigensolvers.  It shares no code path with the
bit-manipulation routines, so agreement between the two is a meaningful
check.  Intended for N <= 8 or so.
"""

from __future__ import annotations

import itertools
from functools import reduce

import numpy as np

from .statevec import AXES, PAULI, StateVector

DENSE_LIMIT = 10


def site_operator(n: int, site: int, m: np.ndarray) -> np.ndarray:
    """``m`` on ``site`` (site 1 = least significant bit), identity elsewhere."""
    if n > DENSE_LIMIT:
        raise ValueError(f"dense construction limited to N <= {DENSE_LIMIT}")
    # kron(A, B) puts B on the low bits, so the list runs from site N down to 1
    factors = [m if l == site else np.eye(2) for l in range(n, 0, -1)]
    return reduce(np.kron, factors)


def pauli(n: int, axis: str, site: int) -> np.ndarray:
    return site_operator(n, site, PAULI[axis])


def additive_matrix(coeffs: np.ndarray) -> np.ndarray:
    c = np.asarray(coeffs)
    n = c.shape[1]
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    for ai, a in enumerate(AXES):
        for l in range(n):
            if c[ai, l] != 0:
                out += c[ai, l] * pauli(n, a, l + 1)
    return out


def vcm(psi: np.ndarray) -> np.ndarray:
    """``<s_i s_j> - <s_i><s_j>`` from explicit Pauli matrices (axis-major order)."""
    n = int(np.log2(psi.size))
    ops = [pauli(n, a, l) for a in AXES for l in range(1, n + 1)]
    mean = np.array([np.vdot(psi, o @ psi) for o in ops])
    out = np.empty((3 * n, 3 * n), dtype=complex)
    for i, oi in enumerate(ops):
        for j, oj in enumerate(ops):
            out[i, j] = np.vdot(psi, oi @ oj @ psi) - mean[i] * mean[j]
    return out


def spectral_projectors(mat: np.ndarray, tol: float = 1e-8):
    """``[(eigenvalue, projector), ...]`` ascending, via a dense ``eigh``."""
    vals, vecs = np.linalg.eigh(mat)
    out = []
    start = 0
    for i in range(1, vals.size + 1):
        if i == vals.size or vals[i] - vals[i - 1] > tol:
            v = vecs[:, start:i]
            out.append((float(vals[start:i].mean()), v @ v.conj().T))
            start = i
    return out


def kernel(psi: np.ndarray, mats, tol: float = 1e-8):
    """Symmetrized kernel ``(1/m!) sum_perm Re <psi|P..P|psi>`` for 2 or 3 operators.

    Returns ``(axes, weights)`` like :class:`~macrovis.xi.DiscreteKernel`.
    """
    projs = [spectral_projectors(m, tol) for m in mats]
    axes = tuple(np.array([v for v, _ in p]) for p in projs)
    shape = tuple(len(p) for p in projs)
    w = np.zeros(shape)
    perms = list(itertools.permutations(range(len(mats))))
    for idx in itertools.product(*(range(s) for s in shape)):
        ps = [projs[k][idx[k]][1] for k in range(len(mats))]
        acc = 0.0
        for perm in perms:
            prod = reduce(np.matmul, [ps[k] for k in perm])
            acc += np.vdot(psi, prod @ psi).real
        w[idx] = acc / len(perms)
    return axes, w


def mixed_kernel(mat_a: np.ndarray, mat_b: np.ndarray, tol: float = 1e-8):
    """``2^-N Tr[P_A(A') P_B(B')]``, the kernel of the maximally mixed state."""
    pa = spectral_projectors(mat_a, tol)
    pb = spectral_projectors(mat_b, tol)
    dim = mat_a.shape[0]
    w = np.array([[np.trace(p @ q).real / dim for _, q in pb] for _, p in pa])
    return (np.array([v for v, _ in pa]), np.array([v for v, _ in pb])), w


def smeared_field(psi: np.ndarray, mat_a: np.ndarray, mat_b: np.ndarray, W: float,
                  grid_a: np.ndarray, grid_b: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Field from explicitly smeared projectors, ``(1/2) <{Pbar_A(A), Pbar_B(B)}>``."""
    pa = spectral_projectors(mat_a, tol)
    pb = spectral_projectors(mat_b, tol)

    def w(x):
        return np.exp(-0.5 * (x / W) ** 2) / (np.sqrt(2 * np.pi) * W)

    # <psi|P_a P_b|psi> for every pair, then smear both indices
    vals_a = np.array([v for v, _ in pa])
    vals_b = np.array([v for v, _ in pb])
    left = [p @ psi for _, p in pa]
    right = [q @ psi for _, q in pb]
    out = np.zeros((grid_a.size, grid_b.size))
    wa = w(grid_a[:, None] - vals_a[None, :])
    wb = w(grid_b[:, None] - vals_b[None, :])
    for i, x in enumerate(grid_a):
        pbar_a = sum(wa[i, k] * left[k] for k in range(len(pa)))
        for j, y in enumerate(grid_b):
            pbar_b = sum(wb[j, k] * right[k] for k in range(len(pb)))
            out[i, j] = np.vdot(pbar_a, pbar_b).real  # Re<Pbar_A psi|Pbar_B psi>
    return out


def heisenberg_xy_matrix(n: int, edges, kind: str) -> np.ndarray:
    """Dense XY (J=-1) or Heisenberg (J=Jz=1) Hamiltonian."""
    if kind == "xy":
        jxy, jz = -1.0, 0.0
    elif kind == "heisenberg":
        jxy, jz = 1.0, 1.0
    else:
        raise ValueError(kind)
    h = np.zeros((1 << n, 1 << n), dtype=complex)
    for l, lp in edges:
        h += jxy * (pauli(n, "x", l) @ pauli(n, "x", lp) + pauli(n, "y", l) @ pauli(n, "y", lp))
        if jz:
            h += jz * pauli(n, "z", l) @ pauli(n, "z", lp)
    return h


def state_array(state) -> np.ndarray:
    return state.amps if isinstance(state, StateVector) else np.asarray(state)
