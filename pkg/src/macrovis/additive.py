"""Spectral decomposition of hermitian additive operators.

A hermitian additive operator ``A = sum_l h(l)`` with ``h(l) = n_l . sigma``
is diagonalized site by site: rotating every site into the eigenbasis of its
local term turns ``A`` into a diagonal matrix whose entry for a basis index
is the sum of the selected local eigenvalues.  Basis indices with the same
total are grouped, and a spectral projector ``P_A(A')`` becomes "rotate,
mask, rotate back".

In the rotated basis bit value 0 of a site selects the lower local eigenvalue
``-|n_l|`` and bit value 1 the upper one ``+|n_l|``; with the package's
``sigma_z |1> = +|1>`` convention the rotation for ``sigma_z`` itself is the
identity.
"""

from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .statevec import StateVector, apply_site_matrix
from .vcm import AdditiveOperator, VcmError

GROUP_TOL = 1e-9
GRID_STEP_FRACTION = 1 / 8
GRID_EXTENT = 5.0
MAX_STEP_FRACTION = 1 / 4
DENSITY_TOL = 1e-6


class AdditiveError(ValueError):
    pass


# -- local 2x2 eigenproblems -----------------------------------------------------


def local_eigensystem(n_vec) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigenpairs of ``n . sigma`` for a real Bloch vector.

    Returns ``(eigenvalues, U)`` with eigenvalues ``(-r, r)`` and the
    matching unit eigenvectors as the columns of ``U``.  A zero vector gives
    eigenvalues ``(0, 0)`` and the identity.
    """
    nx, ny, nz = (float(v) for v in n_vec)
    r = math.sqrt(nx * nx + ny * ny + nz * nz)
    if r == 0.0:
        return np.zeros(2), np.eye(2, dtype=complex)
    # h = [[-nz, nx + i ny], [nx - i ny, nz]]; the two null vectors of h - r
    # differ in conditioning, take the one with the larger norm
    if nz >= 0:
        up = np.array([nx + 1j * ny, r + nz])
    else:
        up = np.array([r - nz, nx - 1j * ny])
    up = up / np.linalg.norm(up)
    down = np.array([np.conj(up[1]), -np.conj(up[0])])
    u = np.column_stack([down, up])
    return np.array([-r, r]), u


def _is_identity(u: np.ndarray) -> bool:
    return bool(np.array_equal(u, np.eye(2, dtype=complex)))


# -- decomposition ---------------------------------------------------------------


@dataclass(frozen=True)
class SpectralDecomposition:
    """Per-site eigenbases of an additive operator and its eigenvalue groups.

    ``labels[i]`` is the group of rotated-basis index ``i``; ``values`` holds
    the group eigenvalues in ascending order.
    """

    operator: AdditiveOperator
    site_eigenvalues: np.ndarray  # (N, 2): lower, upper
    site_rotations: np.ndarray  # (N, 2, 2): columns are local eigenvectors
    values: np.ndarray
    labels: np.ndarray
    tolerance: float

    @property
    def n_sites(self) -> int:
        return self.site_eigenvalues.shape[0]

    @property
    def n_groups(self) -> int:
        return self.values.size

    @property
    def label(self) -> str:
        return self.operator.label

    @property
    def groups(self) -> list:
        """``[(eigenvalue, member indices), ...]`` in ascending eigenvalue order."""
        order = np.argsort(self.labels, kind="stable")
        bounds = np.searchsorted(self.labels[order], np.arange(self.n_groups + 1))
        return [(float(self.values[g]), order[bounds[g]:bounds[g + 1]])
                for g in range(self.n_groups)]

    def degeneracies(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_groups)

    def group_of(self, value: float) -> int:
        g = int(np.argmin(np.abs(self.values - value)))
        if abs(self.values[g] - value) > self.tolerance:
            raise AdditiveError(f"{value!r} is not an eigenvalue of {self.label}")
        return g

    def _rotate(self, amps: np.ndarray, mats) -> np.ndarray:
        out = np.array(amps, dtype=complex)  # always a fresh, writable array
        for site, m in enumerate(mats, start=1):
            if not _is_identity(m):
                out = apply_site_matrix(out, self.n_sites, site, m)
        return out

    def to_eigenbasis(self, amps: np.ndarray) -> np.ndarray:
        """Coordinates in the product eigenbasis (``U^dagger`` per site)."""
        return self._rotate(amps, [u.conj().T for u in self.site_rotations])

    def from_eigenbasis(self, amps: np.ndarray) -> np.ndarray:
        return self._rotate(amps, self.site_rotations)


def _group_sums(sums: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Cluster sorted sums: a gap larger than ``tol`` starts a new group."""
    order = np.argsort(sums, kind="stable")
    s = sums[order]
    new = np.empty(s.size, dtype=bool)
    new[0] = True
    new[1:] = np.diff(s) > tol
    gid_sorted = np.cumsum(new) - 1
    labels = np.empty(s.size, dtype=np.int32)
    labels[order] = gid_sorted
    starts = np.flatnonzero(new)
    ends = np.append(starts[1:], s.size)
    values = np.array([s[a:b].mean() for a, b in zip(starts, ends)])
    return values, labels


def decompose(a: AdditiveOperator) -> SpectralDecomposition:
    """Diagonalize each local term and group basis states by total eigenvalue."""
    if not isinstance(a, AdditiveOperator):
        raise AdditiveError("decompose expects an AdditiveOperator")
    try:
        terms = a.local_terms()
    except VcmError as exc:
        raise AdditiveError(str(exc)) from exc
    n = a.n_sites
    evals = np.empty((n, 2))
    rots = np.empty((n, 2, 2), dtype=complex)
    for l in range(n):
        evals[l], rots[l] = local_eigensystem(terms[l])
    norm = float(np.sum(np.abs(evals[:, 1])))  # operator norm of A
    tol = GROUP_TOL * max(1.0, norm)
    idx = np.arange(1 << n, dtype=np.int64)
    sums = np.zeros(1 << n)
    for l in range(n):
        bit = (idx >> l) & 1
        sums += np.where(bit == 1, evals[l, 1], evals[l, 0])
    values, labels = _group_sums(sums, tol)
    labels.setflags(write=False)
    return SpectralDecomposition(a, evals, rots, values, labels, tol)


# -- projections -----------------------------------------------------------------


def project_group(state: StateVector, dec: SpectralDecomposition, group_id: int) -> np.ndarray:
    """``P_A(A') |psi>`` as a raw (unnormalized) amplitude array."""
    if not 0 <= group_id < dec.n_groups:
        raise AdditiveError(f"group id {group_id} out of range 0..{dec.n_groups - 1}")
    chi = dec.to_eigenbasis(_amps(state))
    chi[dec.labels != group_id] = 0
    return dec.from_eigenbasis(chi)


def project_all(state: StateVector, dec: SpectralDecomposition, threads: int = 1) -> np.ndarray:
    """All projections stacked as a ``(G, 2**N)`` array."""
    chi = dec.to_eigenbasis(_amps(state))

    def one(g):
        masked = np.where(dec.labels == g, chi, 0)
        return dec.from_eigenbasis(masked)

    rows = _map(one, range(dec.n_groups), threads)
    return np.stack(rows)


def group_weights(state: StateVector, dec: SpectralDecomposition) -> np.ndarray:
    """``q(A') = ||P_A(A') psi||^2`` for every group."""
    chi = dec.to_eigenbasis(_amps(state))
    return np.bincount(dec.labels, weights=np.abs(chi) ** 2, minlength=dec.n_groups)


def _amps(state) -> np.ndarray:
    return state.amps if isinstance(state, StateVector) else np.asarray(state, dtype=complex)


def _map(fn, items, threads: int):
    items = list(items)
    if threads is None or threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- coarse graining --------------------------------------------------------------


class WidthMode(enum.Enum):
    """The delta-line limit, kept distinct from any finite width."""

    ZERO = "W->0"


W_ZERO = WidthMode.ZERO

Width = Union[float, WidthMode]


def parse_width(text) -> Width:
    """``"0"`` (or 0) means the W->0 mode; anything else must be a positive float."""
    if isinstance(text, WidthMode):
        return text
    w = float(text)
    if w == 0.0:
        return W_ZERO
    if not w > 0 or not math.isfinite(w):
        raise AdditiveError(f"width must be positive or 0 (for W->0), got {text!r}")
    return w


def gaussian(x, W: float) -> np.ndarray:
    """Normalized coarse-graining function of width ``W``."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * (x / W) ** 2) / (math.sqrt(2 * math.pi) * W)


@dataclass(frozen=True)
class CoarseGrainConfig:
    """Width plus a uniform sampling grid; ``grid_step`` is ignored for W->0."""

    W: Width
    grid_min: float = 0.0
    grid_max: float = 0.0
    grid_step: float = 1.0

    @classmethod
    def for_spectrum(cls, W: Width, lo: float, hi: float,
                     step_fraction: float = GRID_STEP_FRACTION,
                     extent: float = GRID_EXTENT) -> "CoarseGrainConfig":
        W = parse_width(W)
        if W is W_ZERO:
            return cls(W, lo, hi, 1.0)
        return cls(W, lo - extent * W, hi + extent * W, W * step_fraction)

    @property
    def is_zero(self) -> bool:
        return self.W is W_ZERO

    def check(self, lo: float, hi: float) -> None:
        if self.is_zero:
            return
        W = self.W
        if not W > 0:
            raise AdditiveError(f"W must be positive, got {W!r}")
        if self.grid_step > W * MAX_STEP_FRACTION * (1 + 1e-12):
            raise AdditiveError(
                f"grid step {self.grid_step:g} exceeds W/4 = {W / 4:g}; refine the grid")
        slack = 1e-9 * max(1.0, abs(lo), abs(hi))
        if (self.grid_min > lo - GRID_EXTENT * W + slack
                or self.grid_max < hi + GRID_EXTENT * W - slack):
            raise AdditiveError(
                f"grid [{self.grid_min:g}, {self.grid_max:g}] does not cover the "
                f"spectrum [{lo:g}, {hi:g}] +- 5W")

    def grid(self) -> np.ndarray:
        """Grid points on integer multiples of the step, covering [min, max]."""
        h = self.grid_step
        k0 = math.floor(self.grid_min / h + 1e-9)
        k1 = math.ceil(self.grid_max / h - 1e-9)
        return h * np.arange(k0, k1 + 1)

    def refined(self, factor: int = 2) -> "CoarseGrainConfig":
        return CoarseGrainConfig(self.W, self.grid_min, self.grid_max, self.grid_step / factor)


@dataclass(frozen=True)
class Density:
    """Single-operator density: discrete weights and, for W > 0, a sampled field."""

    label: str
    values: np.ndarray
    weights: np.ndarray
    W: Width
    grid: Optional[np.ndarray] = None
    field: Optional[np.ndarray] = None

    def integral(self) -> float:
        if self.field is None:
            return float(self.weights.sum())
        return float(np.trapezoid(self.field, self.grid))

    def to_csv(self, path) -> None:
        write_weights_csv(path, self.values, self.weights, self.label)


def smear(values: np.ndarray, weights: np.ndarray, W: float, grid: np.ndarray) -> np.ndarray:
    """``sum_i weights[i] w(grid - values[i])``."""
    g = gaussian(grid[None, :] - np.asarray(values)[:, None], W)
    return np.asarray(weights) @ g


def density(state: StateVector, a: Union[AdditiveOperator, SpectralDecomposition],
            cfg: Union[CoarseGrainConfig, Width, None] = None) -> Density:
    """Coarse-grained probability density of one additive operator.

    ``cfg`` may be a full :class:`CoarseGrainConfig`, a bare width (the
    default grid is then derived from the spectrum) or ``None`` for W->0.
    """
    dec = a if isinstance(a, SpectralDecomposition) else decompose(a)
    q = group_weights(state, dec)
    lo, hi = float(dec.values[0]), float(dec.values[-1])
    if cfg is None:
        cfg = CoarseGrainConfig.for_spectrum(W_ZERO, lo, hi)
    elif not isinstance(cfg, CoarseGrainConfig):
        cfg = CoarseGrainConfig.for_spectrum(cfg, lo, hi)
    if cfg.is_zero:
        return Density(dec.label, dec.values.copy(), q, W_ZERO)
    cfg.check(lo, hi)
    grid = cfg.grid()
    fld = smear(dec.values, q, cfg.W, grid)
    out = Density(dec.label, dec.values.copy(), q, cfg.W, grid, fld)
    err = abs(out.integral() - 1.0)
    if err > DENSITY_TOL:
        raise AdditiveError(f"density integrates to 1 - {err:.2e}; grid too coarse")
    return out


def write_weights_csv(path, values, weights, label: str = "A") -> None:
    """CSV with columns ``A_value,weight`` (17 significant digits)."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{label}_value", "weight"])
        for v, q in zip(values, weights):
            w.writerow([_fmt(v), _fmt(q)])


def _fmt(x: float) -> str:
    x = float(x)
    if x == 0.0:
        return "0"
    return repr(x)
