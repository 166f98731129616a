"""Quasi joint probability densities of several additive operators.

The exact object is a *discrete kernel*

    K(A', B') = Re <psi| P_A(A') P_B(B') |psi>

(symmetrized over operator orderings for three operators).  Smearing every
projector with the normalized Gaussian ``w`` of width ``W`` turns it into the
field

    Xi(A, B) = sum K(A', B') w(A - A') w(B - B'),

so one kernel serves every width, and ``W -> 0`` is the kernel itself.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import ndimage

from .additive import (
    GRID_STEP_FRACTION,
    W_ZERO,
    AdditiveError,
    CoarseGrainConfig,
    SpectralDecomposition,
    Width,
    _fmt,
    _map,
    decompose,
    local_eigensystem,
    gaussian,
    group_weights,
    parse_width,
)
from .statevec import StateVector, apply_site_matrix
from .vcm import AdditiveOperator

log = logging.getLogger(__name__)

MAX_OPERATORS = 3
NEG_REFINE_TOL = 1e-6
NEG_MAX_REFINE = 4
KERNEL_DROP = 0.0


class XiError(ValueError):
    pass


# -- kernels ---------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteKernel:
    """Real weights on the product of the operators' eigenvalue sets.

    ``weights[i, j, ...]`` belongs to ``(axes[0][i], axes[1][j], ...)``.
    """

    labels: tuple
    axes: tuple
    weights: np.ndarray
    n_sites: int

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def entries(self) -> dict:
        """Sparse view ``{(A1', ..., Am'): weight}`` of the non-zero weights."""
        out = {}
        for idx in zip(*np.nonzero(self.weights)):
            key = tuple(float(self.axes[k][i]) for k, i in enumerate(idx))
            out[key] = float(self.weights[idx])
        return out

    def total(self) -> float:
        return float(self.weights.sum())

    def min_weight(self) -> float:
        return float(self.weights.min())

    def negative_mass(self) -> float:
        """Sum of the negative weights (the W->0 negativity convention)."""
        w = self.weights
        return float(w[w < 0].sum())

    def marginal(self, keep: Sequence[int]) -> "DiscreteKernel":
        """Sum out every coordinate not listed in ``keep`` (order preserved)."""
        keep = tuple(keep) if not isinstance(keep, int) else (keep,)
        other = tuple(k for k in range(self.m) if k not in keep)
        w = self.weights.sum(axis=other) if other else self.weights
        # the summed array keeps the surviving axes in ascending order
        w = np.transpose(w, tuple(sorted(keep).index(k) for k in keep))
        return DiscreteKernel(tuple(self.labels[k] for k in keep),
                              tuple(self.axes[k] for k in keep), w, self.n_sites)

    def transpose(self, perm: Sequence[int]) -> "DiscreteKernel":
        perm = tuple(perm)
        return DiscreteKernel(tuple(self.labels[k] for k in perm),
                              tuple(self.axes[k] for k in perm),
                              np.transpose(self.weights, perm), self.n_sites)

    def to_csv(self, path) -> None:
        """``# ops=<labels> N=<n> sum=<s>`` then ``A1,...,Am,weight`` rows."""
        with open(Path(path), "w", newline="") as fh:
            fh.write(f"# ops={';'.join(self.labels)} N={self.n_sites} sum={_fmt(self.total())}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"A{k + 1}" for k in range(self.m)] + ["weight"])
            for idx in itertools.product(*(range(len(a)) for a in self.axes)):
                val = self.weights[idx]
                if abs(val) <= KERNEL_DROP:
                    continue
                w.writerow([_fmt(self.axes[k][i]) for k, i in enumerate(idx)] + [_fmt(val)])

    @classmethod
    def from_csv(cls, path) -> "DiscreteKernel":
        lines = Path(path).read_text().splitlines()
        head = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        labels = tuple(head["ops"].split(";"))
        rows = [tuple(float(x) for x in ln.split(",")) for ln in lines[2:] if ln]
        m = len(labels)
        axes = tuple(np.array(sorted({r[k] for r in rows})) for k in range(m))
        weights = np.zeros(tuple(len(a) for a in axes))
        for r in rows:
            idx = tuple(int(np.searchsorted(axes[k], r[k])) for k in range(m))
            weights[idx] = r[m]
        return cls(labels, axes, weights, int(head["N"]))


def _decs(ops, decs):
    if decs is None:
        decs = [None] * len(ops)
    out = []
    for a, d in zip(ops, decs):
        if d is None:
            if isinstance(a, SpectralDecomposition):
                d = a
            else:
                d = decompose(a)
        out.append(d)
    return out


def _transfer(src: SpectralDecomposition, dst: SpectralDecomposition):
    """Per-site matrices taking src-eigenbasis coordinates to dst-eigenbasis ones."""
    return [v.conj().T @ u for u, v in zip(src.site_rotations, dst.site_rotations)]


def _apply_sites(amps, n, mats):
    out = amps
    for site, m in enumerate(mats, start=1):
        if not np.allclose(m, np.eye(2), rtol=0, atol=0):
            out = apply_site_matrix(out, n, site, m)
    return out


def _ordered_moments(psi: np.ndarray, decs: Sequence[SpectralDecomposition],
                     threads: int = 1) -> np.ndarray:
    """``T[g1, ..., gm] = <psi| P_1(g1) P_2(g2) ... P_m(gm) |psi>`` (complex).

    Projections are applied right to left: the rightmost projector acts first
    on |psi>, each intermediate vector is carried to the next operator's
    eigenbasis by one product of 2x2 transfer matrices, and the leftmost
    factor is read off as a binned overlap with ``<psi|``.
    """
    n = decs[0].n_sites
    m = len(decs)
    first = decs[0]
    left = np.conj(first.to_eigenbasis(psi))
    out = np.zeros(tuple(d.n_groups for d in decs), dtype=complex)
    last = decs[-1]
    start = last.to_eigenbasis(psi)
    transfers = [_transfer(decs[k + 1], decs[k]) for k in range(m - 1)]

    def chain(g_last):
        res = np.zeros(tuple(d.n_groups for d in decs[:-1]), dtype=complex)
        # idx collects (g_k, ..., g_last) while the vector sits in basis k
        stack = [((g_last,), np.where(last.labels == g_last, start, 0))]
        for k in range(m - 2, -1, -1):
            nxt = []
            for idx, v in stack:
                moved = _apply_sites(v, n, transfers[k])
                if k == 0:
                    res[(slice(None),) + idx[:-1]] = _binned(left * moved, first)
                else:
                    d = decs[k]
                    nxt.extend(((g,) + idx, np.where(d.labels == g, moved, 0))
                               for g in range(d.n_groups))
            stack = nxt
        return res

    parts = _map(chain, range(last.n_groups), threads)
    for g, part in enumerate(parts):
        out[..., g] = part
    return out


def _binned(x: np.ndarray, dec: SpectralDecomposition) -> np.ndarray:
    re = np.bincount(dec.labels, weights=x.real, minlength=dec.n_groups)
    im = np.bincount(dec.labels, weights=x.imag, minlength=dec.n_groups)
    return re + 1j * im


def kernel2(state: StateVector, a, b, dec_a: Optional[SpectralDecomposition] = None,
            dec_b: Optional[SpectralDecomposition] = None, threads: int = 1) -> DiscreteKernel:
    """``K(A', B') = Re <psi| P_A(A') P_B(B') |psi>``.

    Symmetrizing the operator order is unnecessary: the two orderings are
    complex conjugates of each other and have the same real part.
    """
    decs = _decs([a, b], [dec_a, dec_b])
    _same_size(state, decs)
    # evaluate in a canonical operator order so that swapping the arguments
    # gives exactly the transposed kernel, not one differing by rounding
    if _order_key(decs[1]) < _order_key(decs[0]):
        t = _ordered_moments(state.amps, decs[::-1], threads).real.T
    else:
        t = _ordered_moments(state.amps, decs, threads).real
    return DiscreteKernel(tuple(d.label for d in decs), tuple(d.values.copy() for d in decs),
                          np.ascontiguousarray(t), state.n_qubits)


def _order_key(dec: SpectralDecomposition) -> tuple:
    return (dec.n_groups, np.ascontiguousarray(dec.operator.coeffs).tobytes())


def kernel_m(state: StateVector, ops: Sequence, decs: Optional[Sequence] = None,
             threads: int = 1) -> DiscreteKernel:
    """Kernel of the fully symmetrized product of two or three smeared projectors."""
    ops = list(ops)
    m = len(ops)
    if m > MAX_OPERATORS:
        raise XiError(f"at most {MAX_OPERATORS} operators are supported, got {m}")
    if m < 2:
        raise XiError("need at least two operators")
    decs = _decs(ops, decs)
    _same_size(state, decs)
    if m == 2:
        return kernel2(state, ops[0], ops[1], decs[0], decs[1], threads)
    total = np.zeros(tuple(d.n_groups for d in decs))
    # Re<P_i P_j P_k> = Re<P_k P_j P_i>, so the six orderings pair up into
    # three independent ones
    for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2)):
        t = _ordered_moments(state.amps, [decs[p] for p in perm], threads)
        total += np.transpose(t.real, np.argsort(perm))
    return DiscreteKernel(tuple(d.label for d in decs), tuple(d.values.copy() for d in decs),
                          total / 3.0, state.n_qubits)


def _same_size(state, decs):
    for d in decs:
        if d.n_sites != state.n_qubits:
            raise XiError(f"operator {d.label} acts on {d.n_sites} sites, "
                          f"state has {state.n_qubits}")


def single_weights(state: StateVector, a) -> tuple[np.ndarray, np.ndarray]:
    dec = a if isinstance(a, SpectralDecomposition) else decompose(a)
    return dec.values.copy(), group_weights(state, dec)


# -- maximally mixed state ---------------------------------------------------------


def _uniform_profile(a: AdditiveOperator, tol: float = 1e-10):
    """Reference local term and per-site signs, or ``None`` if not site-uniform."""
    terms = a.local_terms()
    norms = np.linalg.norm(terms, axis=1)
    ref_i = int(np.argmax(norms))
    ref = terms[ref_i]
    if norms[ref_i] == 0:
        return ref, np.ones(len(terms))
    signs = np.empty(len(terms))
    for l, t in enumerate(terms):
        if np.allclose(t, ref, rtol=0, atol=tol):
            signs[l] = 1
        elif np.allclose(t, -ref, rtol=0, atol=tol):
            signs[l] = -1
        else:
            return None
    return ref, signs


def kernel2_maximally_mixed(n: int, a: AdditiveOperator, b: AdditiveOperator) -> DiscreteKernel:
    """Kernel for ``rho = 1/2^N`` by a generating-function product over sites.

    ``K(A', B') = 2^-N Tr[P_A(A') P_B(B')]``.  For site-uniform operators the
    trace factorizes into per-site overlap probabilities ``|<u_i|v_j>|^2``;
    tracking how many sites sit in the upper eigenvector of each operator
    gives an ``(N+1) x (N+1)`` polynomial built one site at a time.
    """
    if a.n_sites != n or b.n_sites != n:
        raise XiError("operator size does not match n")
    prof_a, prof_b = _uniform_profile(a), _uniform_profile(b)
    if prof_a is None or prof_b is None:
        bad = a.label if prof_a is None else b.label
        raise XiError(
            f"operator {bad!r} is not site-uniform (up to a staggering sign); use the "
            "pure-state kernel on sampled basis states instead")
    (ra, sa), (rb, sb) = prof_a, prof_b
    la, ua = local_eigensystem(ra)
    lb, ub = local_eigensystem(rb)
    poly = np.zeros((n + 1, n + 1))
    poly[0, 0] = 1.0
    for l in range(n):
        # a sign flip swaps which local eigenvector carries the upper eigenvalue
        ca = ua if sa[l] > 0 else ua[:, ::-1]
        cb = ub if sb[l] > 0 else ub[:, ::-1]
        ov = np.abs(ca.conj().T @ cb) ** 2 / 2.0  # [i_a, j_b], index 1 = upper
        new = np.zeros_like(poly)
        new += ov[0, 0] * poly
        new[1:, :] += ov[1, 0] * poly[:-1, :]
        new[:, 1:] += ov[0, 1] * poly[:, :-1]
        new[1:, 1:] += ov[1, 1] * poly[:-1, :-1]
        poly = new
    ks = np.arange(n + 1)
    va = la[1] * (2 * ks - n)
    vb = lb[1] * (2 * ks - n)
    axa, wa = _collapse(va, poly, axis=0)
    axb, w = _collapse(vb, wa, axis=1)
    return DiscreteKernel((a.label, b.label), (axa, axb), w, n)


def _collapse(values, weights, axis):
    """Merge coordinates with equal eigenvalue (only for a zero operator)."""
    uniq = np.unique(values)
    if uniq.size == values.size:
        order = np.argsort(values)
        return values[order], np.take(weights, order, axis=axis)
    out = np.stack([np.take(weights, np.flatnonzero(values == u), axis=axis).sum(axis=axis)
                    for u in uniq], axis=axis)
    return uniq, out


# -- coarse-grained fields ---------------------------------------------------------


def default_grid(kernel: DiscreteKernel, W: float,
                 step_fraction: float = GRID_STEP_FRACTION) -> list:
    return [CoarseGrainConfig.for_spectrum(W, float(ax[0]), float(ax[-1]), step_fraction)
            for ax in kernel.axes]


@dataclass(frozen=True)
class XiField:
    """Samples of the coarse-grained quasi joint density on a product grid."""

    kernel: DiscreteKernel
    W: float
    grids: tuple
    values: np.ndarray
    negativity: float
    converged: bool = True

    @property
    def labels(self) -> tuple:
        return self.kernel.labels

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    def integral(self) -> float:
        out = self.values
        for g in reversed(self.grids):
            out = np.trapezoid(out, g, axis=-1)
        return float(out)

    def marginal(self, axis: int = 0) -> np.ndarray:
        """Integrate out every other coordinate."""
        out = self.values
        for k in reversed(range(len(self.grids))):
            if k != axis:
                out = np.trapezoid(out, self.grids[k], axis=k)
        return out

    def local_maxima(self, rel_threshold: float = 1e-3) -> list:
        """Plateau-merged local maxima above ``rel_threshold * max``.

        Returns ``[(coords, value), ...]`` sorted by decreasing value.
        """
        return local_maxima(self.values, self.grids, rel_threshold)

    def peak_weights(self, rel_threshold: float = 1e-3) -> list:
        """Mass of the positive field attracted to each maximum (nearest-peak basins)."""
        peaks = self.local_maxima(rel_threshold)
        if not peaks:
            return []
        mesh = np.stack(np.meshgrid(*self.grids, indexing="ij"), axis=-1)
        centers = np.array([p[0] for p in peaks])
        d2 = ((mesh[..., None, :] - centers) ** 2).sum(-1)
        owner = np.argmin(d2, axis=-1)
        pos = np.where(self.values > 0, self.values, 0.0)
        cell = _cell_weights(self.grids)
        return [float(np.sum(pos * cell * (owner == i))) for i in range(len(peaks))]

    def to_csv(self, path) -> None:
        if len(self.grids) != 2:
            raise XiError("field CSV export is defined for two operators")
        ga, gb = self.grids
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["A", "B", "xi"])
            for i, x in enumerate(ga):
                for j, y in enumerate(gb):
                    w.writerow([_fmt(x), _fmt(y), _fmt(self.values[i, j])])

    def sidecar(self) -> dict:
        return {
            "W": float(self.W),
            "grid": [{"min": float(g[0]), "max": float(g[-1]), "step": float(g[1] - g[0]),
                      "points": int(g.size)} for g in self.grids],
            "negativity": float(self.negativity),
            "negativity_converged": bool(self.converged),
            "min_value": self.min_value,
            "normalization_residual": float(self.integral() - 1.0),
            "labels": list(self.labels),
        }

    def write(self, csv_path, json_path=None) -> None:
        self.to_csv(csv_path)
        if json_path is None:
            json_path = Path(csv_path).with_suffix(".json")
        Path(json_path).write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")


def _cell_weights(grids) -> np.ndarray:
    ws = []
    for g in grids:
        w = np.full(g.size, g[1] - g[0]) if g.size > 1 else np.ones(1)
        w[0] *= 0.5
        w[-1] *= 0.5
        ws.append(w)
    out = ws[0]
    for w in ws[1:]:
        out = np.multiply.outer(out, w)
    return out


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :meth:`XiField.to_csv`: ``(A grid, B grid, values)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    ga = np.unique(data[:, 0])
    gb = np.unique(data[:, 1])
    vals = data[:, 2].reshape(ga.size, gb.size)
    return ga, gb, vals


def integrate_field(ga, gb, vals) -> float:
    return float(np.trapezoid(np.trapezoid(vals, gb, axis=1), ga))


def local_maxima(values: np.ndarray, grids, rel_threshold: float = 1e-3) -> list:
    top = float(values.max())
    if top <= 0:
        return []
    foot = np.ones((3,) * values.ndim, dtype=bool)
    cand = (values >= ndimage.maximum_filter(values, footprint=foot, mode="constant",
                                             cval=-np.inf))
    cand &= values > rel_threshold * top
    lab, count = ndimage.label(cand, structure=foot)
    out = []
    for k in range(1, count + 1):
        idx = np.argwhere(lab == k)
        vals = values[tuple(idx.T)]
        # a connected set of candidates is one plateau; report its centroid
        centroid = tuple(float(np.mean(grids[d][idx[:, d]])) for d in range(values.ndim))
        out.append((centroid, float(vals.max())))
    out.sort(key=lambda p: (-p[1], p[0]))
    return out


def _fields(kernel: DiscreteKernel, W: float, cfgs) -> tuple:
    grids = tuple(c.grid() for c in cfgs)
    vals = kernel.weights
    # contract one coordinate at a time: K x_k G_k
    for k, (ax, g) in enumerate(zip(kernel.axes, grids)):
        gk = gaussian(g[None, :] - ax[:, None], W)
        vals = np.moveaxis(np.tensordot(vals, gk, axes=([k], [0])), -1, k)
    return grids, vals


def _trapz_all(vals, grids) -> float:
    out = vals
    for g in reversed(grids):
        out = np.trapezoid(out, g, axis=-1)
    return float(out)


def coarse_grain(kernel: DiscreteKernel, W: Width,
                 grid: Optional[Sequence[CoarseGrainConfig]] = None,
                 refine: bool = True) -> XiField:
    """Gaussian smearing of the kernel onto a product grid.

    ``grid`` is one :class:`CoarseGrainConfig` per coordinate; the default is
    step ``W/8`` over the spectrum extended by ``5W``.
    """
    W = parse_width(W)
    if W is W_ZERO:
        raise XiError("coarse_grain needs W > 0; the W->0 object is the kernel itself")
    cfgs = list(grid) if grid is not None else default_grid(kernel, W)
    if len(cfgs) != kernel.m:
        raise XiError(f"expected {kernel.m} grid configs, got {len(cfgs)}")
    for c, ax in zip(cfgs, kernel.axes):
        if c.W is W_ZERO or abs(c.W - W) > 1e-12 * W:
            raise XiError("grid config width does not match W")
        try:
            c.check(float(ax[0]), float(ax[-1]))
        except AdditiveError as exc:
            raise XiError(str(exc)) from exc
    grids, vals = _fields(kernel, W, cfgs)
    if refine:
        neg, ok = _negativity_refined(kernel, W, cfgs, grids, vals)
    else:
        neg, ok = _neg_part(vals, grids), True
    return XiField(kernel, W, grids, vals, neg, ok)


def _neg_part(vals, grids) -> float:
    if vals.min() >= 0:
        return 0.0
    return min(0.0, _trapz_all(np.minimum(vals, 0.0), grids))


def _negativity_refined(kernel, W, cfgs, grids, vals):
    prev = _neg_part(vals, grids)
    if prev == 0.0 and kernel.min_weight() >= 0:
        return 0.0, True
    for _ in range(NEG_MAX_REFINE):
        cfgs = [c.refined(2) for c in cfgs]
        g2, v2 = _fields(kernel, W, cfgs)
        cur = _neg_part(v2, g2)
        if abs(cur - prev) < NEG_REFINE_TOL:
            return cur, True
        prev = cur
    log.warning("negativity refinement did not converge for W=%g (last change above %g)",
                W, NEG_REFINE_TOL)
    return prev, False


@dataclass(frozen=True)
class NegativityResult:
    value: float
    converged: bool
    W: Width

    def __float__(self):
        return self.value


def negativity(kernel: DiscreteKernel, W: Width,
               grid: Optional[Sequence[CoarseGrainConfig]] = None) -> NegativityResult:
    """Integral of the negative part of the field, ``I <= 0``.

    For W->0 the convention is the sum of the negative kernel weights.
    """
    W = parse_width(W)
    if W is W_ZERO:
        return NegativityResult(kernel.negative_mass(), True, W)
    fld = coarse_grain(kernel, W, grid, refine=True)
    return NegativityResult(fld.negativity, fld.converged, W)


# -- W scaling ---------------------------------------------------------------------

W_RULES = {
    "N": lambda n, c: c * n,
    "sqrtN": lambda n, c: c * math.sqrt(n),
}


@dataclass
class ScanRow:
    n: int
    W: float
    negativity: float
    converged: bool
    rule: str = ""


def w_scaling_scan(family_builder: Callable[[int], StateVector],
                   op_selector: Callable[[int, StateVector], tuple],
                   w_rule: str, sizes: Sequence[int], c: float = 1.0,
                   threads: int = 1) -> list:
    """Negativity at ``W = rule(N, c)`` for each size.

    ``w_rule`` is ``"N"`` (``W = c N``) or ``"sqrtN"`` (``W = c sqrt(N)``).
    """
    if w_rule not in W_RULES:
        raise XiError(f"unknown W rule {w_rule!r}; expected one of {sorted(W_RULES)}")
    sizes = list(sizes)
    if len(sizes) < 3:
        raise XiError("a W-scaling scan needs at least 3 sizes")
    rows = []
    for n in sizes:
        state = family_builder(n)
        a, b = op_selector(n, state)
        k = kernel2(state, a, b, threads=threads)
        W = W_RULES[w_rule](n, c)
        res = negativity(k, W)
        rows.append(ScanRow(n, W, res.value, res.converged, f"{_fmt(c)}*{w_rule}"))
    return rows


def write_scan_csv(path, rows: Sequence[ScanRow]) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "W", "I", "converged", "rule"])
        for r in rows:
            w.writerow([r.n, _fmt(r.W), _fmt(r.negativity), int(r.converged), r.rule])
