"""Builders for the test states: lattice ground states, Shor and Grover states."""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .statevec import MAX_QUBITS, StateVector, from_amplitudes

log = logging.getLogger(__name__)


class LatticeError(ValueError):
    pass


class ModelError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class DegenerateGroundError(RuntimeError):
    pass


# -- lattices ----------------------------------------------------------------


@dataclass(frozen=True)
class LatticeGraph:
    """Undirected nearest-neighbour graph on sites ``1..n_sites``.

    ``sublattice_sign[l-1]`` is the staggering factor of site ``l``; site 1
    carries ``-1`` so that chains reproduce ``(-1)**l``.
    """

    n_sites: int
    edges: tuple
    sublattice_sign: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        n = self.n_sites
        seen = set()
        for l, lp in self.edges:
            if not (1 <= l <= n and 1 <= lp <= n):
                raise LatticeError(f"edge ({l}, {lp}) outside 1..{n}")
            if l == lp:
                raise LatticeError(f"self-loop on site {l}")
            key = (min(l, lp), max(l, lp))
            if key in seen:
                raise LatticeError(f"duplicate edge {key}")
            seen.add(key)
        signs = np.asarray(self.sublattice_sign, dtype=int)
        if signs.shape != (n,) or not np.all(np.abs(signs) == 1):
            raise LatticeError("sublattice_sign must hold one +-1 per site")
        signs.setflags(write=False)
        object.__setattr__(self, "sublattice_sign", signs)

    @property
    def bipartite_signs(self) -> bool:
        """True when every edge joins opposite sublattices."""
        s = self.sublattice_sign
        return all(s[l - 1] != s[lp - 1] for l, lp in self.edges)

    def to_json(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "edges": [list(e) for e in self.edges],
            "signs": [int(s) for s in self.sublattice_sign],
        }


def lattice_from_json(data: Union[dict, str, Path]) -> LatticeGraph:
    if not isinstance(data, dict):
        data = json.loads(Path(data).read_text())
    try:
        n = int(data["n_sites"])
        edges = tuple(tuple(int(v) for v in e) for e in data["edges"])
        signs = data.get("signs", [(-1) ** l for l in range(1, n + 1)])
    except (KeyError, TypeError) as exc:
        raise LatticeError(f"malformed lattice description: {exc}") from exc
    return LatticeGraph(n, edges, np.asarray(signs), name="file")


def lattice_chain(n: int, periodic: bool = False, staggered: bool = True) -> LatticeGraph:
    if n < 2:
        raise LatticeError("a chain needs at least 2 sites")
    if periodic and staggered and n % 2:
        raise LatticeError(f"periodic chain of odd length {n} frustrates the staggering")
    edges = [(l, l + 1) for l in range(1, n)]
    if periodic and n > 2:
        edges.append((n, 1))
    signs = [(-1) ** l for l in range(1, n + 1)]
    tag = "pbc" if periodic else "obc"
    return LatticeGraph(n, tuple(edges), np.array(signs), name=f"chain:{n}:{tag}")


def lattice_rect(rows: int, cols: int, periodic: bool = False,
                 staggered: bool = True) -> LatticeGraph:
    """Rectangular cluster, sites numbered row-major from 1.

    With ``periodic=True`` both directions wrap around (a direction of
    length 2 is not wrapped, which would duplicate its bond).
    """
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise LatticeError("rectangle needs at least 2 sites")
    if periodic and staggered:
        for label, length in (("rows", rows), ("cols", cols)):
            if length > 2 and length % 2:
                raise LatticeError(
                    f"periodic dimension {label}={length} is odd; staggering is frustrated")

    def site(r, c):
        return r * cols + c + 1

    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((site(r, c), site(r, c + 1)))
            elif periodic and cols > 2:
                edges.append((site(r, c), site(r, 0)))
            if r + 1 < rows:
                edges.append((site(r, c), site(r + 1, c)))
            elif periodic and rows > 2:
                edges.append((site(r, c), site(0, c)))
    signs = [(-1) ** (r + c + 1) for r in range(rows) for c in range(cols)]
    tag = "pbc" if periodic else "obc"
    return LatticeGraph(rows * cols, tuple(edges), np.array(signs),
                        name=f"rect:{rows}x{cols}:{tag}")


def parse_lattice(spec: str, staggered: bool = True) -> LatticeGraph:
    """Parse ``chain:N:pbc``, ``rect:RxC:obc`` or a path to a JSON file."""
    parts = spec.split(":")
    if parts[0] == "chain" and len(parts) in (2, 3):
        periodic = len(parts) == 3 and parts[2] == "pbc"
        return lattice_chain(int(parts[1]), periodic, staggered)
    if parts[0] == "rect" and len(parts) in (2, 3):
        try:
            rows, cols = (int(v) for v in parts[1].lower().split("x"))
        except ValueError as exc:
            raise LatticeError(f"bad rectangle size {parts[1]!r}") from exc
        periodic = len(parts) == 3 and parts[2] == "pbc"
        return lattice_rect(rows, cols, periodic, staggered)
    path = Path(spec)
    if path.suffix == ".json" and path.exists():
        return lattice_from_json(path)
    raise LatticeError(f"unrecognised lattice {spec!r}")


# -- matrix-free spin Hamiltonians -------------------------------------------

HAMILTONIANS = ("XY", "HEISENBERG")


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    c = np.zeros_like(x)
    while np.any(x):
        c += x & 1
        x >>= 1
    return c


class SpinHamiltonian:
    """``H = J sum_<ll'> (sx sx + sy sy) + Jz sum_<ll'> sz sz`` on a basis subset.

    XY uses ``J=-1, Jz=0``; the Heisenberg antiferromagnet ``J=Jz=+1``. Both
    conserve total ``sigma_z``, so the action is restricted to the basis
    states listed in ``basis`` (all ``2**N`` states when ``popcount`` is None).
    """

    def __init__(self, kind: str, lattice: LatticeGraph, popcount: Optional[int] = None):
        kind = kind.upper()
        if kind not in HAMILTONIANS:
            raise ModelError(f"unknown Hamiltonian {kind!r}")
        n = lattice.n_sites
        if n > MAX_QUBITS:
            raise ModelError(f"{n} sites exceed the dense cap of {MAX_QUBITS}")
        self.kind = kind
        self.lattice = lattice
        self.n = n
        self.popcount = popcount
        self.J, self.Jz = (-1.0, 0.0) if kind == "XY" else (1.0, 1.0)

        full = np.arange(1 << n, dtype=np.int64)
        if popcount is None:
            basis = full
        else:
            basis = full[_popcount(full) == popcount]
        self.basis = basis
        lookup = np.full(1 << n, -1, dtype=np.int64)
        lookup[basis] = np.arange(basis.size)

        diag = np.zeros(basis.size)
        hops = []
        for l, lp in lattice.edges:
            bl = (basis >> (l - 1)) & 1
            blp = (basis >> (lp - 1)) & 1
            if self.Jz:
                diag += self.Jz * (2 * bl - 1) * (2 * blp - 1)
            differ = np.nonzero(bl != blp)[0]
            mask = (1 << (l - 1)) | (1 << (lp - 1))
            target = lookup[basis[differ] ^ mask]
            hops.append((differ, target))
        self.diag = diag
        self._hops = hops

    @property
    def dim(self) -> int:
        return self.basis.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        amp = 2.0 * self.J
        for rows, cols in self._hops:
            out[rows] += amp * v[cols]
        return out

    def embed(self, v: np.ndarray) -> np.ndarray:
        """Sector vector -> full ``2**N`` amplitude array."""
        full = np.zeros(1 << self.n, dtype=complex)
        full[self.basis] = v
        return full


# -- Lanczos -----------------------------------------------------------------


@dataclass
class LanczosConfig:
    seed: int = 20240611
    max_iter: int = 600
    tol_residual: float = 1e-10
    tol_ritz: float = 1e-13
    max_restarts: int = 8
    # "auto": sum sigma_z = 0 sector for even N, full space otherwise.
    sector: Union[str, int, None] = "auto"
    check_degeneracy: bool = True
    degeneracy_tol: float = 1e-8


@dataclass
class LanczosResult:
    energy: float
    vector: np.ndarray
    residual: float
    iterations: int
    restarts: int


def lanczos_lowest(matvec, dim: int, cfg: LanczosConfig = None,
                   start: Optional[np.ndarray] = None,
                   deflate: Optional[np.ndarray] = None) -> LanczosResult:
    """Lowest eigenpair of a real symmetric operator by restarted Lanczos.

    Full reorthogonalization is applied at every step. If ``deflate`` is given
    (orthonormal rows), the search is confined to their orthogonal complement.
    """
    cfg = cfg or LanczosConfig()
    rng = np.random.default_rng(cfg.seed)

    def project(w):
        if deflate is not None:
            w = w - deflate.T @ (deflate @ w)
        return w

    def op(w):
        return project(matvec(project(w)))

    q = rng.standard_normal(dim) if start is None else np.array(start, dtype=float)
    q = project(q)
    q /= np.linalg.norm(q)

    total = 0
    avail = dim - (0 if deflate is None else deflate.shape[0])
    for restart in range(cfg.max_restarts + 1):
        m_max = min(cfg.max_iter, avail)
        Q = np.zeros((m_max, dim))
        alphas, betas = [], []
        Q[0] = q
        prev = None
        theta, y = None, None
        for j in range(m_max):
            w = op(Q[j])
            a = float(Q[j] @ w)
            alphas.append(a)
            w -= a * Q[j]
            if j:
                w -= betas[-1] * Q[j - 1]
            for _ in range(2):
                w -= Q[:j + 1].T @ (Q[:j + 1] @ w)
            b = float(np.linalg.norm(w))
            total += 1
            if len(alphas) == 1:
                theta, y = alphas[0], np.array([1.0])
            else:
                vals, vecs = eigh_tridiagonal(np.array(alphas), np.array(betas),
                                              select="i", select_range=(0, 0))
                theta, y = float(vals[0]), vecs[:, 0]
            est = abs(b * y[-1])
            converged = (
                prev is not None and abs(theta - prev) < cfg.tol_ritz
                and est < cfg.tol_residual
            )
            if converged or b < 1e-13 or j + 1 == m_max:
                break
            prev = theta
            betas.append(b)
            Q[j + 1] = w / b
        k = len(alphas)
        v = Q[:k].T @ y
        v = project(v)
        v /= np.linalg.norm(v)
        hv = op(v)
        energy = float(v @ hv)
        res = float(np.linalg.norm(hv - energy * v))
        if res <= cfg.tol_residual:
            return LanczosResult(energy, v, res, total, restart)
        log.debug("lanczos restart %d: residual %.3e", restart, res)
        q = v
    raise ConvergenceError(
        f"Lanczos did not converge: residual {res:.3e} after {total} iterations")


def _resolve_sector(sector, n: int) -> Optional[int]:
    if sector == "auto":
        return n // 2 if n % 2 == 0 else None
    if sector is None:
        return None
    sector = int(sector)
    if not 0 <= sector <= n:
        raise ModelError(f"sector popcount {sector} outside 0..{n}")
    return sector


def ground_state(kind: str, lattice: LatticeGraph, cfg: Optional[LanczosConfig] = None):
    """Exact ground state of the XY model or Heisenberg antiferromagnet.

    Returns ``(state, energy)``. The search is restricted to a fixed
    ``sum sigma_z`` sector (by default zero when N is even). A second,
    deflated Lanczos run checks that the lowest level is not degenerate.
    """
    cfg = cfg or LanczosConfig()
    popcount = _resolve_sector(cfg.sector, lattice.n_sites)
    ham = SpinHamiltonian(kind, lattice, popcount)
    res = lanczos_lowest(ham.matvec, ham.dim, cfg)
    v = res.vector
    # fix the global sign: largest-magnitude component positive
    i = int(np.argmax(np.abs(v)))
    v = v * np.sign(v[i])
    if cfg.check_degeneracy and ham.dim > 1:
        # an independent start vector: the first one has no weight on a
        # degenerate partner once the converged vector is projected out
        check_cfg = replace(cfg, seed=cfg.seed + 1)
        second = lanczos_lowest(ham.matvec, ham.dim, check_cfg, deflate=v[None, :])
        gap = second.energy - res.energy
        if gap < cfg.degeneracy_tol:
            hint = "" if popcount is not None else "; supply a total-M_z sector"
            raise DegenerateGroundError(
                f"ground level is degenerate (gap {gap:.2e}){hint}")
    state = StateVector(lattice.n_sites, ham.embed(v))
    return state, res.energy


# -- Shor --------------------------------------------------------------------


@dataclass(frozen=True)
class ShorLayout:
    """Register layout after modular exponentiation.

    Register 1 (the exponent ``a``) occupies sites ``1..N1``, register 2
    (``x**a mod I``) sites ``N1+1..N1+N2``; both least significant bit first.
    """

    I: int
    x: int
    N1: int
    N2: int
    r: int

    @property
    def n_qubits(self) -> int:
        return self.N1 + self.N2

    @property
    def register1(self) -> range:
        return range(1, self.N1 + 1)

    @property
    def register2(self) -> range:
        return range(self.N1 + 1, self.N1 + self.N2 + 1)


def multiplicative_order(x: int, modulus: int) -> int:
    if math.gcd(x, modulus) != 1:
        raise ModelError(f"x={x} is not coprime to I={modulus}")
    value, r = x % modulus, 1
    while value != 1:
        value = value * x % modulus
        r += 1
    return r


def shor_layout(I: int, x: int) -> ShorLayout:
    if I < 3:
        raise ModelError("I must be at least 3")
    if not 1 < x < I:
        raise ModelError(f"x must satisfy 1 < x < I, got x={x}")
    if math.gcd(x, I) != 1:
        raise ModelError(f"x={x} is not coprime to I={I}")
    # smallest N1 with 2**N1 >= I**2, i.e. 2 log2 I <= N1 < 2 log2 I + 1
    n1 = (I * I - 1).bit_length()
    n2 = (I - 1).bit_length()
    if n1 + n2 > MAX_QUBITS:
        raise ModelError(f"register overflow: N1+N2={n1 + n2} > {MAX_QUBITS}")
    return ShorLayout(I, x, n1, n2, multiplicative_order(x, I))


def shor_me_state(I: int, x: int):
    """State right after modular exponentiation, ``sum_a |x^a mod I>_2 |a>_1``."""
    layout = shor_layout(I, x)
    a = np.arange(1 << layout.N1, dtype=np.int64)
    fa = np.array([pow(x, int(k), I) for k in a], dtype=np.int64)
    amps = np.zeros(1 << layout.n_qubits, dtype=complex)
    amps[a | (fa << layout.N1)] = 1.0 / math.sqrt(1 << layout.N1)
    return StateVector(layout.n_qubits, amps), layout


# -- Grover ------------------------------------------------------------------

GROVER_DELTA = 0.1


@dataclass(frozen=True)
class GroverParams:
    n_qubits: int
    k: int
    theta: float
    R: int
    delta: float = GROVER_DELTA

    @property
    def margin(self) -> float:
        return (4 * self.k + 2) / math.sqrt(2.0 ** self.n_qubits)

    @property
    def within_margin(self) -> bool:
        return self.delta <= self.margin <= math.pi - self.delta


def grover_params(n: int, k: Optional[int] = None) -> GroverParams:
    theta = 2.0 * math.acos(math.sqrt((2.0 ** n - 1) / 2.0 ** n))
    R = int(round(math.acos(math.sqrt(2.0 ** -n)) / theta))
    if k is None:
        k = R // 2 if R % 2 == 0 else (R + 1) // 2
    if k < 0:
        raise ModelError("iteration count must be non-negative")
    return GroverParams(n, int(k), theta, R)


def grover_state(n: int, k: Optional[int] = None):
    """Closed-form Grover iterate with the single solution ``|1...1>``."""
    params = grover_params(n, k)
    if not params.within_margin:
        warnings.warn(
            f"k={params.k} violates delta={params.delta} margin "
            f"((4k+2)/sqrt(2^N) = {params.margin:.3f})", stacklevel=2)
    phase = (2 * params.k + 1) * params.theta / 2
    dim = 1 << n
    amps = np.full(dim, math.cos(phase) / math.sqrt(dim - 1), dtype=complex)
    amps[dim - 1] = math.sin(phase)
    return from_amplitudes(amps, normalize=True), params


def grover_state_iterated(n: int, k: int) -> StateVector:
    """Reference builder: oracle + diffusion applied ``k`` times to ``|s>``."""
    dim = 1 << n
    psi = np.full(dim, 1.0 / math.sqrt(dim))
    for _ in range(k):
        psi[dim - 1] = -psi[dim - 1]
        psi = 2.0 * psi.mean() - psi
    return from_amplitudes(psi, normalize=False)


# -- reference states ----------------------------------------------------------


def cat_state(n: int) -> StateVector:
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = amps[-1] = 1.0 / math.sqrt(2.0)
    return StateVector(n, amps)


def product_state(n: int, single: Sequence[complex] = (1.0, 0.0)) -> StateVector:
    """Tensor power of a normalized single-qubit vector ``(amp_0, amp_1)``."""
    single = np.asarray(single, dtype=complex)
    if single.shape != (2,) or abs(np.vdot(single, single).real - 1) > 1e-12:
        raise ModelError("single-qubit amplitudes must be a normalized 2-vector")
    amps = np.array([1.0 + 0j])
    for _ in range(n):
        # new site becomes the most significant bit
        amps = np.kron(single, amps)
    return StateVector(n, amps)
