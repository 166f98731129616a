"""Variance-covariance matrix of Pauli fluctuations and the operator set S.

Coefficient vectors over the 3N Pauli operators are laid out axis-major:
entry ``a * N + (l - 1)`` belongs to ``sigma_a(l)`` with ``a`` in x, y, z.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .statevec import AXES, StateVector, apply_pauli, pauli_pair_expectation, pauli_stack

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
# e_i >= gamma * N marks an O(N) eigenvalue at a single size; 0.1 lets the
# N-independent bulk (e ~ 1.5-2.5) through for N <= 14.
DEFAULT_GAMMA = 0.25
DEFAULT_EPSILON = 0.25
CLUSTER_RTOL = 1e-6
PATTERN_MATCH = 0.98


class VcmError(ValueError):
    pass


# -- additive operators --------------------------------------------------------


@dataclass
class AdditiveOperator:
    """``A = sum_{a,l} coeffs[a, l-1] sigma_a(l)``.

    ``ideal_coeffs`` optionally carries the size-independent form of a
    matched pattern (e.g. ``sqrt(3/2)`` per site for the Shor operators),
    while ``coeffs`` keeps the finite-N normalization.
    """

    coeffs: np.ndarray
    label: str = "A"
    ideal_coeffs: Optional[np.ndarray] = None
    source: str = "manual"
    eigen_index: tuple = ()
    signs: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            if c.size % 3:
                raise VcmError("flat coefficient vector must have length 3N")
            c = c.reshape(3, -1)
        if c.shape[0] != 3:
            raise VcmError(f"coefficients must have shape (3, N), got {c.shape}")
        self.coeffs = c

    @property
    def n_sites(self) -> int:
        return self.coeffs.shape[1]

    @property
    def flat(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    @property
    def hermitian(self) -> bool:
        return float(np.max(np.abs(self.coeffs.imag), initial=0.0)) <= HERMITIAN_TOL

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def local_terms(self) -> np.ndarray:
        """Real ``(N, 3)`` array of per-site Bloch vectors; hermitian only."""
        if not self.hermitian:
            raise VcmError(f"operator {self.label!r} is not hermitian")
        return self.coeffs.real.T.copy()

    def real_part(self) -> "AdditiveOperator":
        return AdditiveOperator(self.coeffs.real, f"{self.label}^re", source="re",
                                eigen_index=self.eigen_index)

    def imag_part(self) -> "AdditiveOperator":
        return AdditiveOperator(self.coeffs.imag, f"{self.label}^im", source="im",
                                eigen_index=self.eigen_index)

    def scaled_to(self, norm2: float) -> "AdditiveOperator":
        s = math.sqrt(norm2 / self.norm2)
        return AdditiveOperator(self.coeffs * s, self.label, self.ideal_coeffs,
                                self.source, self.eigen_index, self.signs)

    def to_json(self, variance: Optional[float] = None) -> dict:
        out = {
            "label": self.label,
            "hermitian": self.hermitian,
            "source": self.source,
            "coeffs": {
                a: {
                    "re": [float(v) for v in self.coeffs[i].real],
                    "im": [float(v) for v in self.coeffs[i].imag],
                }
                for i, a in enumerate(AXES)
            },
        }
        if self.ideal_coeffs is not None:
            out["ideal_coeffs"] = {a: [float(v) for v in self.ideal_coeffs[i].real]
                                   for i, a in enumerate(AXES)}
        if variance is not None:
            out["variance"] = float(variance)
        if self.eigen_index:
            out["eigen_index"] = [int(i) for i in self.eigen_index]
        return out


def _site_weights(n, sites=None, signs=None, amplitude=1.0):
    w = np.zeros(n)
    sites = range(1, n + 1) if sites is None else sites
    for l in sites:
        w[l - 1] = amplitude * (1 if signs is None else signs[l - 1])
    return w


def default_signs(n: int) -> np.ndarray:
    return np.array([(-1) ** l for l in range(1, n + 1)])


def magnetization(n: int, axis: str, staggered: bool = False, signs=None,
                  sites=None, amplitude: float = 1.0, label: Optional[str] = None):
    """``sum_l s_l sigma_axis(l)`` over ``sites`` (all by default)."""
    if axis not in AXES:
        raise VcmError(f"invalid axis {axis!r}")
    if staggered and signs is None:
        signs = default_signs(n)
    c = np.zeros((3, n))
    c[AXES.index(axis)] = _site_weights(n, sites, signs if staggered else None, amplitude)
    if label is None:
        label = f"M_{axis}" + ("^st" if staggered else "")
    return AdditiveOperator(c, label, source="pattern",
                            signs=None if signs is None else np.asarray(signs))


def combination(n: int, weights: dict, staggered: bool = False, signs=None,
                label: str = "A") -> AdditiveOperator:
    """Site-uniform combination, e.g. ``{"x": -1/sqrt2, "z": 1/sqrt2}``."""
    if staggered and signs is None:
        signs = default_signs(n)
    c = np.zeros((3, n))
    for axis, w in weights.items():
        c[AXES.index(axis)] = w * (np.asarray(signs) if staggered else 1.0)
    return AdditiveOperator(c, label, source="pattern",
                            signs=None if signs is None else np.asarray(signs))


def m_x_minus_z(n: int) -> AdditiveOperator:
    r = 1 / math.sqrt(2)
    return combination(n, {"x": -r, "z": r}, label="M_x-z")


# -- the VCM -------------------------------------------------------------------


@dataclass
class Vcm:
    n_sites: int
    entries: np.ndarray
    first_moments: np.ndarray
    asymmetry: float = 0.0

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)


def compute_vcm(state: StateVector, method: str = "gram") -> Vcm:
    """``V[a l, b l'] = <d sigma_a(l) d sigma_b(l')>`` for a pure state.

    ``method="gram"`` forms the Gram matrix of the 3N vectors
    ``sigma_a(l)|psi>``; ``method="pairs"`` evaluates every entry with
    :func:`pauli_pair_expectation`. Both are exact.
    """
    n = state.n_qubits
    psi = state.amps
    if method == "gram":
        phi = pauli_stack(state)
        moments = (phi @ psi.conj()).real
        raw = phi.conj() @ phi.T
    elif method == "pairs":
        labels = [(a, l) for a in AXES for l in range(1, n + 1)]
        raw = np.empty((3 * n, 3 * n), dtype=complex)
        for i, p in enumerate(labels):
            for j, q in enumerate(labels):
                raw[i, j] = pauli_pair_expectation(state, p, q)
        moments = np.array([
            np.vdot(psi, apply_pauli(psi, n, a, l)).real for a, l in labels])
    else:
        raise VcmError(f"unknown method {method!r}")
    entries = raw - np.outer(moments, moments)
    asym = float(np.max(np.abs(entries - entries.conj().T)))
    if asym > 1e-12:
        log.info("VCM hermiticity deviation before symmetrization: %.3e", asym)
    entries = 0.5 * (entries + entries.conj().T)
    return Vcm(n, entries, moments, asym)


@dataclass
class VcmSpectrum:
    """Eigenpairs sorted descending; ``vectors[:, i]`` has squared norm N."""

    n_sites: int
    eigenvalues: np.ndarray
    vectors: np.ndarray
    matrix: np.ndarray

    def residual(self, i: int) -> float:
        v = self.vectors[:, i]
        return float(np.linalg.norm(self.matrix @ v - self.eigenvalues[i] * v))

    def operator(self, i: int, label: Optional[str] = None) -> AdditiveOperator:
        return AdditiveOperator(self.vectors[:, i].copy(), label or f"A{i + 1}",
                                source="raw", eigen_index=(i,))


def spectrum(v: Vcm) -> VcmSpectrum:
    try:
        vals, vecs = np.linalg.eigh(v.entries)
    except np.linalg.LinAlgError as exc:
        raise VcmError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order] * math.sqrt(v.n_sites)
    return VcmSpectrum(v.n_sites, vals, vecs, v.entries)


def operator_variance(source, a: AdditiveOperator) -> float:
    """``<dA^dagger dA>`` as the quadratic form ``c^dagger V c``.

    ``source`` may be a :class:`Vcm`, a :class:`VcmSpectrum` or a state.
    """
    if isinstance(source, StateVector):
        source = compute_vcm(source)
    mat = source.entries if isinstance(source, Vcm) else source.matrix
    c = a.flat
    if c.size != mat.shape[0]:
        raise VcmError(f"operator has {c.size} coefficients, VCM is {mat.shape[0]}-dim")
    return float(np.vdot(c, mat @ c).real)


def operator_variance_direct(state: StateVector, a: AdditiveOperator) -> float:
    """``|| (A - <A>) |psi> ||^2`` evaluated on the state vector."""
    n = state.n_qubits
    if a.n_sites != n:
        raise VcmError("dimension mismatch between operator and state")
    psi = state.amps
    apsi = np.zeros_like(psi)
    for i, axis in enumerate(AXES):
        for l in range(1, n + 1):
            c = a.coeffs[i, l - 1]
            if c != 0:
                apsi += c * apply_pauli(psi, n, axis, l)
    mean = np.vdot(psi, apsi)
    d = apsi - mean * psi
    return float(np.vdot(d, d).real)


# -- index p -------------------------------------------------------------------


@dataclass
class PEstimate:
    sizes: list
    e1s: list
    p: float
    slope_stderr: float
    raw_slope: float
    epsilon: float = DEFAULT_EPSILON

    @property
    def p_clamped(self) -> float:
        return min(2.0, max(1.0, self.p))

    @property
    def classification(self) -> str:
        return "p=2" if self.p >= 2 - self.epsilon else "p<2"

    def to_json(self) -> dict:
        return {
            "sizes": [int(n) for n in self.sizes],
            "e1": [float(e) for e in self.e1s],
            "p": self.p,
            "p_clamped": self.p_clamped,
            "raw_slope": self.raw_slope,
            "slope_stderr": self.slope_stderr,
            "classification": self.classification,
            "epsilon": self.epsilon,
        }


def fit_p(sizes: Sequence[int], e1s: Sequence[float],
          epsilon: float = DEFAULT_EPSILON) -> PEstimate:
    """``p = 1 + d log e1 / d log N`` by least squares."""
    if len(sizes) < 3:
        raise VcmError("need at least 3 system sizes to estimate p")
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.maximum(np.asarray(e1s, dtype=float), 1e-300))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope = float(coef[0])
    resid = y - A @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    stderr = math.sqrt(s2 / float(np.sum((x - x.mean()) ** 2)))
    return PEstimate(list(sizes), [float(e) for e in e1s], 1.0 + slope, stderr, slope, epsilon)


def estimate_p(family_builder: Callable[[int], StateVector], sizes: Sequence[int],
               epsilon: float = DEFAULT_EPSILON) -> PEstimate:
    if len(sizes) < 3:
        raise VcmError("need at least 3 system sizes to estimate p")
    e1s = [float(spectrum(compute_vcm(family_builder(n))).eigenvalues[0]) for n in sizes]
    return fit_p(sizes, e1s, epsilon)


# -- pattern dictionary & S ----------------------------------------------------


@dataclass
class Pattern:
    label: str
    vector: np.ndarray            # unit norm, length 3N
    ideal: np.ndarray             # (3, N) size-independent coefficients


def pattern_dictionary(n: int, signs=None, layout=None) -> list:
    """Uniform and staggered magnetization directions per axis.

    With a Shor ``layout`` the same patterns restricted to register 1,
    register 1 without its least significant site, and register 2 are added.
    Their ideal amplitude uses the asymptotic register fractions 2/3 and 1/3.
    """
    signs = default_signs(n) if signs is None else np.asarray(signs)
    supports = [("", None, 1.0)]
    if layout is not None:
        r1 = list(layout.register1)
        supports += [
            ("(1)", r1[1:], math.sqrt(1.5)),
            ("(1,all)", r1, math.sqrt(1.5)),
            ("(2)", list(layout.register2), math.sqrt(3.0)),
        ]
    out = []
    for tag, sites, amp in supports:
        for axis in AXES:
            for stag in (False, True):
                op = magnetization(n, axis, staggered=stag, signs=signs, sites=sites)
                vec = op.flat.real.copy()
                nrm = np.linalg.norm(vec)
                if nrm == 0:
                    continue
                label = f"M_{axis}" + ("^st" if stag else "") + tag
                out.append(Pattern(label, vec / nrm, op.coeffs.real * amp))
    return out


def _cluster(values: np.ndarray, rtol: float) -> list:
    blocks, cur = [], [0]
    for i in range(1, len(values)):
        prev = values[cur[-1]]
        if abs(prev - values[i]) <= rtol * max(abs(prev), 1e-300):
            cur.append(i)
        else:
            blocks.append(cur)
            cur = [i]
    blocks.append(cur)
    return blocks


def _phase_fix(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    if abs(v[i]) == 0:
        return v
    return v * (abs(v[i]) / v[i])


def _orient(op: AdditiveOperator) -> AdditiveOperator:
    """Fix the sign of a real operator: first non-zero axis sum (z, x, y) positive."""
    for axis in (2, 0, 1):
        s = float(op.coeffs[axis].real.sum())
        if abs(s) > 1e-8:
            if s < 0:
                op.coeffs = -op.coeffs
            return op
    i = int(np.argmax(np.abs(op.flat)))
    if op.flat[i].real < 0:
        op.coeffs = -op.coeffs
    return op


@dataclass
class SResult:
    operators: list
    variances: list
    selected: list
    blocks: list
    unmatched_blocks: list = field(default_factory=list)

    @property
    def flag(self) -> str:
        return "p<2 candidate" if not self.operators else "ok"

    def __iter__(self):
        return iter(self.operators)

    def __len__(self):
        return len(self.operators)


def extract_S(spec: VcmSpectrum, gamma: float = DEFAULT_GAMMA,
              patterns: Optional[list] = None, signs=None, layout=None,
              match: float = PATTERN_MATCH, cluster_rtol: float = CLUSTER_RTOL) -> SResult:
    """Macroscopically fluctuating hermitian additive operators.

    Eigenvalues ``e_i >= gamma * N`` are grouped into degenerate blocks.
    Inside a block, dictionary patterns whose squared overlap with the block
    span is at least ``match`` replace the arbitrary eigensolver rotation;
    what is left is phase-fixed, and non-hermitian vectors are split into
    their real and imaginary parts, keeping a part only if its variance is at
    least ``gamma * N**2 / 4``.
    """
    n = spec.n_sites
    if patterns is None:
        patterns = pattern_dictionary(n, signs, layout)
    vals = spec.eigenvalues
    threshold = gamma * n
    selected = [i for i in range(len(vals)) if vals[i] >= threshold]
    blocks = []
    if selected:
        top = max(selected) + 1
        # keep exact-degenerate partners that fell just below the threshold
        while top < len(vals) and abs(vals[top - 1] - vals[top]) <= cluster_rtol * abs(vals[top - 1]):
            top += 1
        blocks = _cluster(vals[:top], cluster_rtol)

    ops, variances, unmatched = [], [], []
    vcm_like = spec
    for block in blocks:
        basis = spec.vectors[:, block] / math.sqrt(n)
        chosen = []
        while basis.shape[1] > 0:
            best, best_ov = None, -1.0
            for p in patterns:
                if any(p.label == c.label for c in chosen):
                    continue
                ov = float(np.linalg.norm(basis.conj().T @ p.vector) ** 2)
                if ov > best_ov:
                    best, best_ov = p, ov
            if best is None or best_ov < match:
                break
            chosen.append(best)
            # remove the matched direction from the block span
            proj = basis @ (basis.conj().T @ best.vector)
            proj /= np.linalg.norm(proj)
            rest = basis - np.outer(proj, proj.conj() @ basis)
            u, s, _ = np.linalg.svd(rest, full_matrices=False)
            basis = u[:, s > 1e-8]
        for p in chosen:
            op = AdditiveOperator(p.vector * math.sqrt(n), p.label, ideal_coeffs=p.ideal,
                                  source="pattern", eigen_index=tuple(block))
            ops.append(op)
            variances.append(operator_variance(vcm_like, op))
        if basis.shape[1]:
            unmatched.append(tuple(block))
            # re-diagonalize within the remainder for a deterministic basis
            sub = basis.conj().T @ spec.matrix @ basis
            w, rot = np.linalg.eigh(0.5 * (sub + sub.conj().T))
            basis = basis @ rot[:, ::-1]
        for j in range(basis.shape[1]):
            vec = _phase_fix(basis[:, j] * math.sqrt(n))
            raw = AdditiveOperator(vec, f"A{block[0] + 1}" if len(block) == 1 and not chosen
                                   else f"A{block[0] + 1}.{len(chosen) + j + 1}",
                                   source="raw", eigen_index=tuple(block))
            if raw.hermitian:
                raw.coeffs = raw.coeffs.real.astype(complex)
                raw = _orient(raw)
                ops.append(raw)
                variances.append(operator_variance(vcm_like, raw))
                continue
            for part in (raw.real_part(), raw.imag_part()):
                if part.norm2 == 0:
                    continue
                # judged before rescaling: a part with a small share of the
                # coefficient norm must not be promoted by normalization
                if operator_variance(vcm_like, part) >= gamma * n * n / 4:
                    part = _orient(part.scaled_to(n))
                    ops.append(part)
                    variances.append(operator_variance(vcm_like, part))
    return SResult(ops, variances, selected, blocks, unmatched)


def macroscopic_component_weight(a: AdditiveOperator, spec: VcmSpectrum,
                                 gamma: float = DEFAULT_GAMMA) -> float:
    """Share of ``|xi|^2`` carried by eigenvectors with ``e_i >= gamma N``.

    ``xi_i`` are the expansion coefficients of the operator's coefficient
    vector over the (norm-N) VCM eigenvectors.
    """
    c = a.flat
    if not np.any(c):
        raise VcmError("zero operator has no components")
    n = spec.n_sites
    xi = spec.vectors.conj().T @ c / n
    w = np.abs(xi) ** 2
    big = spec.eigenvalues >= gamma * n
    return float(w[big].sum() / w.sum())


def subspace_overlap(vectors: Sequence, targets: Sequence) -> float:
    """Mean squared projection of the ``targets`` onto span(``vectors``).

    Arguments are coefficient vectors or :class:`AdditiveOperator` objects;
    both sets are orthonormalized first. The value is 1 when the target
    subspace is contained in the span.
    """
    def mat(items):
        cols = [it.flat if isinstance(it, AdditiveOperator) else np.ravel(it) for it in items]
        m = np.stack(cols, axis=1).astype(complex)
        u, s, _ = np.linalg.svd(m, full_matrices=False)
        return u[:, s > 1e-10 * s.max()]

    if not len(vectors) or not len(targets):
        return 0.0
    S = mat(vectors)
    T = mat(targets)
    return float(np.sum(np.abs(S.conj().T @ T) ** 2) / T.shape[1])


@dataclass
class BranchEstimate:
    label: str
    estimate: PEstimate


def estimate_p_branches(family_builder: Callable[[int], StateVector], sizes: Sequence[int],
                        top: int = 4, epsilon: float = DEFAULT_EPSILON,
                        signs_for: Optional[Callable[[int], np.ndarray]] = None) -> list:
    """Fit the size scaling of each leading eigenbranch separately.

    Branches are identified across sizes by their best-matching dictionary
    pattern; a branch is fitted only if it appears at every size.
    """
    tracks: dict = {}
    for n in sizes:
        spec = spectrum(compute_vcm(family_builder(n)))
        pats = pattern_dictionary(n, None if signs_for is None else signs_for(n))
        for i in range(min(top, len(spec.eigenvalues))):
            v = spec.vectors[:, i] / math.sqrt(n)
            ovs = [abs(np.vdot(p.vector, v)) ** 2 for p in pats]
            # degenerate rotations: use the block projector instead of one vector
            block = [j for j in range(len(spec.eigenvalues))
                     if abs(spec.eigenvalues[j] - spec.eigenvalues[i])
                     <= CLUSTER_RTOL * max(spec.eigenvalues[i], 1e-300)]
            if len(block) > 1:
                B = spec.vectors[:, block] / math.sqrt(n)
                ovs = [float(np.linalg.norm(B.conj().T @ p.vector) ** 2) for p in pats]
            k = int(np.argmax(ovs))
            label = pats[k].label
            tracks.setdefault(label, {}).setdefault(n, float(spec.eigenvalues[i]))
    out = []
    for label, per_n in tracks.items():
        if all(n in per_n for n in sizes):
            out.append(BranchEstimate(label, fit_p(list(sizes), [per_n[n] for n in sizes], epsilon)))
    return out
