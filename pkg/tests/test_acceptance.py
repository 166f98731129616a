"""End-to-end acceptance criteria 1-8.

Each test prints one ``criterion <k>: PASS|FAIL`` line (also collected in the
terminal summary).  Run on its own with ``pytest tests/test_acceptance.py -s``.
"""

import math
import time

import numpy as np

from macrovis import dense
from macrovis.additive import CoarseGrainConfig, decompose, density, gaussian, project_group
from macrovis.models import (
    cat_state, grover_params, grover_state, ground_state, lattice_chain, lattice_rect,
    product_state, shor_me_state,
)
from macrovis.vcm import (
    compute_vcm, estimate_p, extract_S, m_x_minus_z, magnetization, spectrum,
    subspace_overlap,
)
from macrovis.xi import (
    _ordered_moments, coarse_grain, kernel2, kernel_m, negativity,
    single_weights, w_scaling_scan,
)

from conftest import random_operator, random_state

RESULTS = {}


class Checks:
    """Collects named sub-checks; the criterion passes only if all of them do."""

    def __init__(self, k, title):
        self.k, self.title, self.items = k, title, []
        self.t0 = time.perf_counter()

    def __call__(self, name, ok, detail=""):
        self.items.append((name, bool(ok), detail))
        return ok

    def finish(self, budget_s):
        elapsed = time.perf_counter() - self.t0
        self(f"runtime < {budget_s:g} s", elapsed < budget_s, f"{elapsed:.1f} s")
        failed = [f"{n} [{d}]" for n, ok, d in self.items if not ok]
        status = "PASS" if not failed else "FAIL"
        line = f"criterion {self.k}: {status} - {self.title}"
        if failed:
            line += " | failed: " + "; ".join(failed)
        RESULTS[self.k] = line
        print(line)
        for n, ok, d in self.items:
            print(f"    {'ok ' if ok else 'BAD'} {n}" + (f" ({d})" if d else ""))
        assert not failed, line


# -- 1 ------------------------------------------------------------------------------------


def test_criterion_1_oracle_equivalence():
    chk = Checks(1, "dense oracles match the fast paths (N <= 6)")
    rng = np.random.default_rng(2024)
    worst = {"vcm": 0.0, "proj": 0.0, "k2": 0.0, "k3": 0.0, "neg": 0.0}
    draws = 24
    for d in range(draws):
        n = 2 + d % 5
        s = random_state(rng, n)
        integer = d % 2 == 1
        ops = [random_operator(rng, n, integer=integer, label=f"R{j}") for j in range(3)]
        if any(not np.any(o.coeffs) for o in ops):
            ops = [random_operator(rng, n, label=f"R{j}") for j in range(3)]
        mats = [dense.additive_matrix(o.coeffs) for o in ops]
        ref = dense.vcm(s.amps)
        worst["vcm"] = max(worst["vcm"], np.max(np.abs(compute_vcm(s).entries
                                                     - 0.5 * (ref + ref.conj().T))))
        dec = decompose(ops[0])
        for g, (v, p) in enumerate(dense.spectral_projectors(mats[0])):
            worst["proj"] = max(worst["proj"], np.max(np.abs(project_group(s, dec, g) - p @ s.amps)))
        _, w2 = dense.kernel(s.amps, mats[:2])
        k2 = kernel2(s, ops[0], ops[1])
        worst["k2"] = max(worst["k2"], np.max(np.abs(k2.weights - w2)))
        if n <= 4:
            _, w3 = dense.kernel(s.amps, mats)
            worst["k3"] = max(worst["k3"], np.max(np.abs(kernel_m(s, ops).weights - w3)))
        if integer and n <= 5:
            W = float(rng.uniform(0.6, 1.5))
            fld = coarse_grain(k2, W, refine=False)
            fd = dense.smeared_field(s.amps, mats[0], mats[1], W, *fld.grids)
            neg_ref = np.trapezoid(np.trapezoid(np.minimum(fd, 0), fld.grids[1], axis=1),
                                   fld.grids[0])
            worst["neg"] = max(worst["neg"], abs(fld.negativity - min(0.0, neg_ref)))
    for key, val in worst.items():
        chk(f"{key} deviation <= 1e-10", val <= 1e-10, f"{val:.1e}")
    chk(">= 20 draws", draws >= 20, str(draws))
    chk.finish(60)


# -- 2 ------------------------------------------------------------------------------------


def _scenarios():
    lat = lattice_rect(2, 7)
    xy, _ = ground_state("xy", lat)
    hlat = lattice_rect(2, 4)
    heis, _ = ground_state("heisenberg", hlat)
    shor, _ = shor_me_state(21, 5)
    grov, _ = grover_state(12)
    st = [magnetization(8, a, staggered=True, signs=hlat.sublattice_sign) for a in "xyz"]
    return [
        ("xy 2x7", xy, [magnetization(14, "x"), magnetization(14, "y")]),
        ("heisenberg 2x4", heis, st),
        ("shor 21,5", shor, [magnetization(14, "x"), magnetization(14, "y", staggered=True)]),
        ("grover 12", grov, [m_x_minus_z(12), magnetization(12, "y")]),
        ("cat 10", cat_state(10), [magnetization(10, "z"), magnetization(10, "x")]),
        ("separable 10", product_state(10), [magnetization(10, "x"), magnetization(10, "y")]),
    ]


def test_criterion_2_exact_invariants():
    chk = Checks(2, "kernel sum, marginals, realness, permutation symmetry on every scenario")
    for name, s, ops in _scenarios():
        decs = [decompose(o) for o in ops]
        a, b = ops[0], ops[1]
        k = kernel2(s, a, b, decs[0], decs[1])
        chk(f"{name}: sum = 1", abs(k.total() - 1) <= 1e-10, f"{abs(k.total() - 1):.1e}")
        for ax in (0, 1):
            _, q = single_weights(s, decs[ax])
            dev = np.max(np.abs(k.marginal(ax).weights - q))
            chk(f"{name}: marginal {ax}", dev <= 1e-10, f"{dev:.1e}")
        # the symmetrized product of the two orderings has no imaginary part
        tab = _ordered_moments(s.amps, decs[:2], 1)
        tba = _ordered_moments(s.amps, decs[1::-1], 1)
        imag = np.max(np.abs((0.5 * (tab + tba.T)).imag))
        chk(f"{name}: real", imag <= 1e-10 and np.isrealobj(k.weights), f"{imag:.1e}")
        swapped = kernel2(s, b, a, decs[1], decs[0])
        chk(f"{name}: permutation symmetry", np.array_equal(swapped.weights, k.weights.T))
        if len(ops) == 3:
            k3 = kernel_m(s, ops, decs)
            chk(f"{name}: 3-kernel sum", abs(k3.total() - 1) <= 1e-10)
            dev = np.max(np.abs(k3.marginal((0, 1)).weights - k.weights))
            chk(f"{name}: 3-kernel marginal", dev <= 1e-10, f"{dev:.1e}")
            perm = kernel_m(s, [ops[2], ops[0], ops[1]], [decs[2], decs[0], decs[1]])
            dev = np.max(np.abs(perm.transpose((1, 2, 0)).weights - k3.weights))
            chk(f"{name}: 3-kernel permutation", dev <= 1e-12, f"{dev:.1e}")
    chk.finish(120)


# -- 3 ------------------------------------------------------------------------------------


def test_criterion_3_xy():
    chk = Checks(3, "XY ground state, 2x7 open rectangle")
    n = 14
    lat = lattice_rect(2, 7)
    s, _ = ground_state("xy", lat)
    sp = spectrum(compute_vcm(s))
    e = sp.eigenvalues
    chk("e1 ~ e2", abs(e[0] - e[1]) <= 1e-6 * e[0], f"{e[0]:.4f}, {e[1]:.4f}")
    chk("e2 >= 0.1 N", e[1] >= 0.1 * n)
    chk("e3 < 0.5 e2", e[2] < 0.5 * e[1], f"e3 = {e[2]:.4f}")
    S = extract_S(sp, signs=lat.sublattice_sign)
    ov = subspace_overlap(S.operators, [magnetization(n, "x"), magnetization(n, "y")])
    chk("S spans {M_x, M_y}", len(S) == 2 and ov >= 0.99, f"|S|={len(S)}, overlap {ov:.4f}")
    mx, my, mz = (magnetization(n, a) for a in "xyz")
    k = kernel2(s, mx, my)
    f32 = coarse_grain(k, 3.2)
    chk("min Xi(M_x, M_y) at W=3.2 >= -1e-9", f32.min_value >= -1e-9, f"{f32.min_value:.2e}")
    kz = kernel2(s, mx, mz)
    W = 3.2
    fz = coarse_grain(kz, W)
    d = density(s, mx, CoarseGrainConfig.for_spectrum(W, kz.axes[0][0], kz.axes[0][-1]))
    ref = np.outer(np.interp(fz.grids[0], d.grid, d.field), gaussian(fz.grids[1], W))
    dev = np.max(np.abs(fz.values - ref))
    chk("Xi(M_x, M_z) factorizes", dev <= 1e-9, f"{dev:.1e}")
    Is = [negativity(k, w).value for w in (0.5, 1, 2, 3.2)]
    mono = all(abs(x) >= abs(y) for x, y in zip(Is, Is[1:]))
    chk("|I| nonincreasing over W in {0.5, 1, 2, 3.2}", mono, ", ".join(f"{v:.2e}" for v in Is))
    chk("I(3.2) = 0", Is[-1] == 0.0)
    chk.finish(120)


# -- 4 ------------------------------------------------------------------------------------


def test_criterion_4_heisenberg():
    chk = Checks(4, "Heisenberg ground states, 2x4 and 2x6 open rectangles")
    for cols in (4, 6):
        lat = lattice_rect(2, cols)
        n = lat.n_sites
        s, _ = ground_state("heisenberg", lat)
        sp = spectrum(compute_vcm(s))
        e = sp.eigenvalues
        tri = abs(e[0] - e[2]) <= 1e-6 * e[0]
        # dominant: the degenerate triplet is macroscopic and well separated from e4
        dom = e[2] >= 0.1 * n and (e[2] - e[3]) >= 0.25 * e[2]
        chk(f"N={n}: e1 ~ e2 ~ e3 dominant", tri and dom,
            f"{e[0]:.4f} {e[1]:.4f} {e[2]:.4f} | e4 {e[3]:.4f}")
        st = [magnetization(n, a, staggered=True, signs=lat.sublattice_sign) for a in "xyz"]
        S = extract_S(sp, signs=lat.sublattice_sign)
        ov = subspace_overlap(S.operators, st)
        chk(f"N={n}: S spans staggered set", len(S) == 3 and ov >= 0.99, f"overlap {ov:.4f}")
        kxy, kyz, kzx = kernel2(s, st[0], st[1]), kernel2(s, st[1], st[2]), kernel2(s, st[2], st[0])
        chk(f"N={n}: kernel2(M_x^st, M_y^st) >= -1e-10", kxy.min_weight() >= -1e-10,
            f"min {kxy.min_weight():.1e}")
        dev = max(np.max(np.abs(kxy.weights - kyz.weights)),
                  np.max(np.abs(kxy.weights - kzx.weights)))
        chk(f"N={n}: pairwise kernels equal", dev <= 1e-9, f"{dev:.1e}")
    chk.finish(120)


# -- 5 ------------------------------------------------------------------------------------


def test_criterion_5_shor():
    chk = Checks(5, "Shor state (I, x) = (21, 5)")
    s, lay = shor_me_state(21, 5)
    n = lay.n_qubits
    chk("N1=9, N2=5, r=6", (lay.N1, lay.N2, lay.r) == (9, 5, 6), f"{lay.N1},{lay.N2},{lay.r}")
    sp = spectrum(compute_vcm(s))
    e = sp.eigenvalues
    chk("two dominant eigenvalues", abs(e[0] - e[1]) <= 1e-6 * e[0] and e[2] <= 0.5 * e[1],
        f"{e[0]:.3f} {e[1]:.3f} | e3 {e[2]:.3f}")
    S = extract_S(sp, layout=lay)
    support = list(range(2, lay.N1 + 1))
    tx = magnetization(n, "x", sites=support)
    ty = magnetization(n, "y", staggered=True, sites=support)

    def overlap(op, t):
        return abs(np.vdot(op.flat, t.flat)) ** 2 / (op.norm2 * t.norm2)

    for name, t in (("x-uniform", tx), ("y-staggered", ty)):
        best = max((overlap(op, t) for op in S), default=0.0)
        chk(f"S contains {name} on sites 2..9", best >= 0.95, f"overlap {best:.4f}")
    outside = max((float(np.sum(np.abs(np.delete(op.coeffs, [l - 1 for l in support], axis=1)) ** 2)
                         / op.norm2) for op in S), default=1.0)
    chk("S support = register-1 sites 2..9", len(S) == 2 and outside <= 0.05,
        f"|S|={len(S)}, weight outside {outside:.1e}")
    k = kernel2(s, magnetization(n, "x"), magnetization(n, "y", staggered=True))
    fld = coarse_grain(k, 1.4)
    chk("min Xi(M_x, M_y^st) at W=1.4 >= -1e-9", fld.min_value >= -1e-9, f"{fld.min_value:.1e}")
    peaks = fld.local_maxima()
    chk("exactly 4 local maxima", len(peaks) == 4, str(len(peaks)))
    chk.finish(60)


# -- 6 ------------------------------------------------------------------------------------


def test_criterion_6_grover():
    chk = Checks(6, "Grover state, N = 12")
    n = 12
    p = grover_params(n)
    chk("R=50, k=25", (p.R, p.k) == (50, 25), f"R={p.R}, k={p.k}")
    s, _ = grover_state(n)
    S = extract_S(spectrum(compute_vcm(s)))
    target = np.array([-1 / math.sqrt(2), 0, 1 / math.sqrt(2)])[:, None]
    dev = float(np.max(np.abs(S.operators[0].coeffs - target))) if len(S) else float("inf")
    chk("single S element ~ (-1/sqrt2, 0, 1/sqrt2)", len(S) == 1 and dev <= 0.05,
        f"|S|={len(S)}, max dev {dev:.4f}")
    k = kernel2(s, m_x_minus_z(n), magnetization(n, "y"))
    fld = coarse_grain(k, 2.0)
    peaks = fld.local_maxima()
    w = fld.peak_weights()
    ratio = w[0] / w[1] if len(w) >= 2 and w[1] > 0 else float("nan")
    chk("2 local maxima at W=2", len(peaks) == 2, str(len(peaks)))
    chk("peak weight ratio in [0.8, 1.25]", 0.8 <= ratio <= 1.25, f"{ratio:.3f}")
    Ws = (1, 2, 3, 4, 6, 8)
    Is = [abs(negativity(k, W).value) for W in Ws]
    dec = all(x > y for x, y in zip(Is, Is[1:]))
    chk("|I(W)| decreasing to 0", dec and Is[-1] <= 1e-9, ", ".join(f"{v:.1e}" for v in Is))
    chk.finish(60)


# -- 7 ------------------------------------------------------------------------------------


def _mxy(n, s):
    return magnetization(n, "x"), magnetization(n, "y")


def _grover_ops(n, s):
    return m_x_minus_z(n), magnetization(n, "y")


FAMILIES = {
    "cat": (cat_state, _mxy),
    "separable": (lambda n: product_state(n), _mxy),
    "grover": (lambda n: grover_state(n)[0], _grover_ops),
}


def test_criterion_7_w_scaling():
    chk = Checks(7, "W-scaling dichotomy for cat, separable, Grover; N in {8,10,12,14}")
    sizes = [8, 10, 12, 14]
    for fam, (build, sel) in FAMILIES.items():
        for rule, c, label in (("N", 1 / 6, "N/6"), ("N", 1 / 8, "N/8")):
            rows = w_scaling_scan(build, sel, rule, sizes, c=c)
            Is = [abs(r.negativity) for r in rows]
            ok = all(x > y for x, y in zip(Is, Is[1:]))
            chk(f"{fam} W={label}: |I| strictly decreasing", ok, ", ".join(f"{v:.4f}" for v in Is))
        rows = w_scaling_scan(build, sel, "sqrtN", sizes, c=1.0)
        Is = [abs(r.negativity) for r in rows]
        chk(f"{fam} W=sqrtN: |I| persists (final > 0.5 initial)", Is[-1] > 0.5 * Is[0],
            ", ".join(f"{v:.4f}" for v in Is))
    chk.finish(300)


# -- 8 ------------------------------------------------------------------------------------


def test_criterion_8_p_index():
    chk = Checks(8, "index p classification")
    cat = estimate_p(cat_state, [4, 6, 8, 10, 12])
    chk("cat: p = 2.00 +- 0.01", abs(cat.p - 2) <= 0.01, f"p={cat.p:.4f}")
    prod = estimate_p(lambda n: product_state(n), [4, 6, 8, 10, 12])
    chk("|0^N>: p = 1.00 +- 0.01", abs(prod.p - 1) <= 0.01, f"p={prod.p:.4f}")
    ladder = estimate_p(lambda n: ground_state("xy", lattice_rect(2, n // 2))[0], [8, 10, 12, 14])
    chain = estimate_p(lambda n: ground_state("xy", lattice_chain(n))[0], [8, 10, 12, 14])
    print(f"    info: XY open chain family p={chain.p:.4f} ({chain.classification})")
    chk("XY 2xL ladders classified p=2 (eps=0.25)", ladder.classification == "p=2",
        f"p={ladder.p:.4f}, e1={[round(x, 3) for x in ladder.e1s]}")
    chk.finish(180)
