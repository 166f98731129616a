"""Dense N-qubit pure states and matrix-free Pauli algebra.

Conventions used across the package:

* site ``l`` (1-based) is stored in bit ``l - 1`` of the basis index, so site 1
  is the least significant bit;
* ``sigma_z |0> = -|0>`` and ``sigma_z |1> = +|1>``.

With the basis ordered as ``(|0>, |1>)`` the Pauli matrices therefore read::

    sx = [[0, 1], [1, 0]]
    sy = [[0, i], [-i, 0]]
    sz = [[-1, 0], [0, 1]]

which satisfy the usual algebra ``sx @ sy = i sz``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

MAX_QUBITS = 24
NORM_TOL = 1e-12
UNITARY_TOL = 1e-10

AXES = ("x", "y", "z")

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SZ = np.array([[-1, 0], [0, 1]], dtype=complex)
PAULI = {"x": SX, "y": SY, "z": SZ}

# eps[a, b] -> (c, sign): sigma_a sigma_b = delta_ab + i * sign * sigma_c
_LEVI = {
    ("x", "y"): ("z", 1),
    ("y", "z"): ("x", 1),
    ("z", "x"): ("y", 1),
    ("y", "x"): ("z", -1),
    ("z", "y"): ("x", -1),
    ("x", "z"): ("y", -1),
}

DUMP_MAGIC = b"MVIS"
DUMP_VERSION = 1
_HEADER = struct.Struct("<4sHH8x")


class StateError(ValueError):
    """Raised for malformed states, sites, or local operators."""


def _check_axis(axis: str) -> str:
    if axis not in PAULI:
        raise StateError(f"invalid Pauli axis {axis!r}; expected one of x, y, z")
    return axis


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state of ``n_qubits`` spin-1/2 sites.

    ``amps`` has length ``2**n_qubits``; use :func:`from_amplitudes` to build
    one from an arbitrary (possibly unnormalized) array.
    """

    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        n = self.n_qubits
        if not 1 <= n <= MAX_QUBITS:
            raise StateError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n}")
        amps = np.ascontiguousarray(self.amps, dtype=complex)
        if amps.shape != (1 << n,):
            raise StateError(f"expected {1 << n} amplitudes, got shape {amps.shape}")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise StateError(f"state is not normalized: |psi|^2 = {norm2!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))


def from_amplitudes(amps, normalize: bool = True) -> StateVector:
    """Build a :class:`StateVector`, inferring ``N`` from the array length."""
    amps = np.asarray(amps, dtype=complex).ravel()
    dim = amps.size
    n = dim.bit_length() - 1
    if dim == 0 or (1 << n) != dim:
        raise StateError(f"amplitude count {dim} is not a power of two")
    if normalize:
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise StateError("cannot normalize the zero vector")
        amps = amps / nrm
    return StateVector(n, amps)


def basis_state(n: int, index: int = 0) -> StateVector:
    amps = np.zeros(1 << n, dtype=complex)
    amps[index] = 1.0
    return StateVector(n, amps)


def bit_array(n: int, site: int) -> np.ndarray:
    """0/1 value of ``site`` for every basis index (int8)."""
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx >> (site - 1)) & 1).astype(np.int8)


def _check_site(n: int, site: int) -> None:
    if not 1 <= site <= n:
        raise StateError(f"site {site} out of range 1..{n}")


def check_unitary(u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise StateError(f"local unitary must be 2x2, got shape {u.shape}")
    dev = np.linalg.norm(u.conj().T @ u - np.eye(2))
    if dev > UNITARY_TOL:
        raise StateError(f"matrix is not unitary (Frobenius deviation {dev:.3e})")
    return u


def apply_site_matrix(amps: np.ndarray, n: int, site: int, m: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix ``m`` to ``site`` of a (batch of) raw amplitude arrays.

    ``amps`` may have leading batch dimensions; the last axis is the
    ``2**n`` basis index. Returns a new array.
    """
    lead = amps.shape[:-1]
    lo = 1 << (site - 1)
    hi = 1 << (n - site)
    t = amps.reshape(lead + (hi, 2, lo))
    out = np.einsum("ij,...ajb->...aib", m, t)
    return out.reshape(amps.shape)


def apply_local_unitary(state: StateVector, site: int, u) -> StateVector:
    """Return ``u`` applied on ``site``; ``u`` is checked for unitarity."""
    _check_site(state.n_qubits, site)
    u = check_unitary(u)
    out = apply_site_matrix(state.amps, state.n_qubits, site, u)
    return StateVector(state.n_qubits, out)


def apply_product(amps: np.ndarray, n: int, mats: Iterable) -> np.ndarray:
    """Apply ``mats[l-1]`` on each site ``l`` (``None`` entries are skipped)."""
    out = np.asarray(amps, dtype=complex)
    for site, m in enumerate(mats, start=1):
        if m is not None:
            out = apply_site_matrix(out, n, site, m)
    return out


def apply_pauli(amps: np.ndarray, n: int, axis: str, site: int) -> np.ndarray:
    """``sigma_axis(site) |amps>`` via index bit manipulation."""
    _check_axis(axis)
    _check_site(n, site)
    bit = site - 1
    idx = np.arange(1 << n, dtype=np.int64)
    b = (idx >> bit) & 1
    if axis == "z":
        return amps * (2 * b - 1)
    flipped = amps[..., idx ^ (1 << bit)]
    if axis == "x":
        return flipped
    return flipped * (1j * (1 - 2 * b))


def pauli_expectation(state: StateVector, axis: str, site: int) -> float:
    amps = state.amps
    return float(np.vdot(amps, apply_pauli(amps, state.n_qubits, axis, site)).real)


def pauli_pair_expectation(state: StateVector, first, second) -> complex:
    """Uncentered moment ``<psi| sigma_a(l) sigma_b(l') |psi>``.

    ``first`` and ``second`` are ``(axis, site)`` tuples. On a single site the
    product rule ``sigma_a sigma_b = delta_ab + i eps_abc sigma_c`` is used.
    """
    (a, l), (b, lp) = first, second
    _check_axis(a)
    _check_axis(b)
    n = state.n_qubits
    _check_site(n, l)
    _check_site(n, lp)
    if l == lp:
        if a == b:
            return 1.0 + 0j
        c, sign = _LEVI[(a, b)]
        return 1j * sign * pauli_expectation(state, c, l)
    left = apply_pauli(state.amps, n, a, l)
    right = apply_pauli(state.amps, n, b, lp)
    return complex(np.vdot(left, right))


def inner(a: StateVector, b: StateVector) -> complex:
    if a.n_qubits != b.n_qubits:
        raise StateError("qubit count mismatch")
    return complex(np.vdot(a.amps, b.amps))


def pauli_stack(state: StateVector) -> np.ndarray:
    """Array of shape ``(3N, 2**N)`` whose row ``a*N + l-1`` is ``sigma_a(l)|psi>``."""
    n = state.n_qubits
    rows = [apply_pauli(state.amps, n, a, l) for a in AXES for l in range(1, n + 1)]
    return np.stack(rows)


# -- binary dump -----------------------------------------------------------

PathLike = Union[str, Path]


def dump_state(state: StateVector, path: PathLike) -> None:
    """Write the MVIS binary format: 16-byte header + little-endian complex128."""
    header = _HEADER.pack(DUMP_MAGIC, DUMP_VERSION, state.n_qubits)
    body = state.amps.astype("<c16").tobytes()
    Path(path).write_bytes(header + body)


def load_state(path: PathLike) -> StateVector:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise StateError("file too short for MVIS header")
    magic, version, n = _HEADER.unpack_from(raw)
    if magic != DUMP_MAGIC:
        raise StateError(f"bad magic {magic!r}")
    if version != DUMP_VERSION:
        raise StateError(f"unsupported MVIS version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 16 * (1 << n):
        raise StateError(f"payload size {len(body)} does not match n_qubits={n}")
    amps = np.frombuffer(body, dtype="<c16").astype(complex)
    return StateVector(n, amps)
