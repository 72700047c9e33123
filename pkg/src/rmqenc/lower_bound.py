"""Unrolled recurrences for extended Cartesian trees and their singularities.

A level-l expansion is a binary tree of depth at most l whose nodes at
depth < l are real nodes (x) and whose slots at depth l may hold a generic
subtree (T).  Each two-child node v is charged C(l_v + r_v, r_v), where l_v
and r_v are the visible lengths of the inner spines: walking a spine, a real
node counts 1 and continues, a T counts 1 and stops.  Summing the charges
over all expansions gives T = G(x, T).

The DP state of a subtree is (ls, rs), its visible left and right spine
lengths.  Polynomials are packed into single Python integers (Kronecker
substitution) so that products are big-integer products.
"""

import math
from dataclasses import dataclass, field
from math import comb

import mpmath
import numpy as np

from .errors import DomainError, ResourceError, SolverError

MAX_LEVEL = 7
GATED_LEVEL = 6
BRUTE_MAX_LEVEL = 4
PRECISION_BITS = 256

# published rows: level -> (cases, terms, degree, singularity, bound)
TABLE_ROWS = {
    1: (4, 3, 2, 0.207107, 2.271),
    2: (25, 9, 4, 0.190879, 2.389),
    3: (675, 63, 8, 0.179836, 2.474),
    4: (4.6e5, 119, 16, 0.172288, 2.537),
    5: (2.1e11, 479, 32, 0.167053, 2.581),
    6: (4.4e22, 1951, 64, 0.163343, 2.621),
    7: (1.9e45, 7935, 128, 0.160646, 2.638),
}


class LevelPolynomial:
    """G(x, T) as {(x-degree, T-degree): coefficient}."""

    def __init__(self, coeffs: dict, level: int):
        self.coeffs = {k: int(c) for k, c in coeffs.items() if c}
        self.level = level

    @property
    def terms(self) -> int:
        return len(self.coeffs)

    @property
    def x_degree(self) -> int:
        return max(i for i, _ in self.coeffs)

    @property
    def t_degree(self) -> int:
        return max(j for _, j in self.coeffs)

    @property
    def degree(self) -> int:
        return max(self.x_degree, self.t_degree)

    def __eq__(self, other):
        return isinstance(other, LevelPolynomial) and self.coeffs == other.coeffs

    def __repr__(self):
        return f"LevelPolynomial(level={self.level}, terms={self.terms})"

    def items(self):
        return sorted(self.coeffs.items())

    def to_string(self) -> str:
        parts = []
        for (i, j), c in self.items():
            mono = ("x" if i == 1 else f"x^{i}") if i else ""
            if j:
                mono += "T" if j == 1 else f"T^{j}"
            parts.append((str(c) if c != 1 else "") + mono if mono else str(c))
        return " + ".join(parts)

    def evaluate(self, x, T) -> int:
        return sum(c * x ** i * T ** j for (i, j), c in self.coeffs.items())

    def series(self, order: int):
        """Coefficients t(1..order) of the solution T(x) = G(x, T(x))."""
        # every term carries at least one x, so each pass fixes one more coefficient
        t = [0] * (order + 1)
        for _ in range(order):
            new = [0] * (order + 1)
            powers = [[1] + [0] * order]
            for (i, j), c in self.coeffs.items():
                if i > order:
                    continue
                while len(powers) <= j:
                    powers.append(_series_mul(powers[-1], t, order))
                pj = powers[j]
                for k in range(order + 1 - i):
                    new[k + i] += c * pj[k]
            t = new
        return t[1:]


def _series_mul(a, b, order):
    out = [0] * (order + 1)
    for i, x in enumerate(a):
        if x:
            for j in range(order + 1 - i):
                out[i + j] += x * b[j]
    return out


# -- generation -------------------------------------------------------------

def _both_children(P, add, mul):
    """Combine child states for a two-child node.

    Result state (1+ls_l, 1+rs_r) with weight C(rs_l + ls_r, ls_r); the sum
    over rs_l is folded first so only O(S^3) products are formed.
    """
    by_ls = {}
    for (ls, rs), p in P.items():
        by_ls.setdefault(ls, []).append((rs, p))
    out = {}
    for ls_l, rows in by_ls.items():
        for ls_r, cols in by_ls.items():
            q = None
            for rs_l, p in rows:
                term = comb(rs_l + ls_r, ls_r) * p
                q = term if q is None else q + term
            for rs_r, p in cols:
                key = (1 + ls_l, 1 + rs_r)
                v = mul(q, p)
                out[key] = add(out.get(key), v)
    return out


def _run_dp(level, leaf, tleaf, shift, add, mul):
    states = {(1, 1): tleaf}
    for _ in range(level):
        new = {(1, 1): leaf}
        for (ls, rs), p in states.items():
            s = shift(p)
            new[(1 + ls, 1)] = add(new.get((1 + ls, 1)), s)
            new[(1, 1 + rs)] = add(new.get((1, 1 + rs)), s)
        for key, v in _both_children(states, add, mul).items():
            new[key] = add(new.get(key), shift(v))
        states = new
    return states


def _add(a, b):
    return b if a is None else a + b


def _weight_bound(level) -> int:
    """Largest scalar value (x = T = 1) met anywhere in the DP."""
    best = [1]

    def mul(a, b):
        v = a * b
        best[0] = max(best[0], v, a)
        return v

    states = _run_dp(level, 1, 1, lambda p: p, _add, mul)
    return max(best[0], sum(states.values()))


def memory_estimate(level: int) -> int:
    """Rough byte count of the packed DP tables at the given level."""
    w = _weight_bound(level).bit_length() + 1
    slots = (2 ** level) * (2 ** level + 1)
    return (level + 1) ** 2 * slots * w // 8


def generate_polynomial(level: int, allow_large: bool = False) -> LevelPolynomial:
    if not isinstance(level, int) or level < 1:
        raise DomainError("level must be a positive integer")
    if level > MAX_LEVEL:
        raise ResourceError(f"levels above {MAX_LEVEL} are not supported")
    if level >= GATED_LEVEL and not allow_large:
        raise ResourceError(
            f"level {level} needs about {memory_estimate(level) / 2**20:.1f} MiB of DP tables; "
            "pass allow_large to run it")
    W = _weight_bound(level).bit_length() + 1
    DT = 2 ** level + 1
    xs = DT * W

    states = _run_dp(level, 1 << xs, 1 << W, lambda p: p << xs, _add, lambda a, b: a * b)
    total = sum(states.values())
    mask = (1 << W) - 1
    coeffs = {}
    idx = 0
    while total:
        c = total & mask
        if c:
            coeffs[divmod(idx, DT)] = c
        total >>= W
        idx += 1
    return LevelPolynomial(coeffs, level)


def case_count(level: int) -> int:
    """Number of level-l expansions: A(l) = 1 + 2A(l-1) + A(l-1)^2, A(0) = 1."""
    if level < 0:
        raise DomainError("level must be non-negative")
    if level > MAX_LEVEL:
        raise ResourceError(f"levels above {MAX_LEVEL} are not supported")
    a = 1
    for _ in range(level):
        a = 1 + 2 * a + a * a
    return a


def expansions(level: int):
    """Every level-l expansion as nested tuples; 'T' marks a generic subtree."""
    if level > BRUTE_MAX_LEVEL:
        raise ResourceError(f"explicit enumeration is capped at level {BRUTE_MAX_LEVEL}")
    if level == 0:
        return ["T"]
    sub = expansions(level - 1)
    out = [(None, None)]
    out.extend((c, None) for c in sub)
    out.extend((None, c) for c in sub)
    out.extend((a, b) for a in sub for b in sub)
    return out


def _visible(t, side):
    k = 0
    while t is not None:
        k += 1
        if t == "T":
            break
        t = t[side]
    return k


def expansion_term(t):
    """(x-degree, T-degree, weight) of one expansion."""
    if t == "T":
        return 0, 1, 1
    l, r = t
    i, j, w = 1, 0, 1
    for c in (l, r):
        if c is not None:
            ci, cj, cw = expansion_term(c)
            i, j, w = i + ci, j + cj, w * cw
    if l is not None and r is not None:
        a, b = _visible(l, 1), _visible(r, 0)
        w *= comb(a + b, b)
    return i, j, w


def brute_force_polynomial(level: int) -> LevelPolynomial:
    coeffs = {}
    for t in expansions(level):
        i, j, w = expansion_term(t)
        coeffs[(i, j)] = coeffs.get((i, j), 0) + w
    return LevelPolynomial(coeffs, level)


# -- singularity -------------------------------------------------------------

@dataclass
class SingularityResult:
    r: float
    T_at_r: float
    coefficient: float
    r_exact: object = None
    T_exact: object = None
    diagnostics: dict = field(default_factory=dict)


class _Evaluator:
    """G and its partial derivatives, grouped by T-power, in mpmath."""

    def __init__(self, p: LevelPolynomial):
        rows = {}
        for (i, j), c in p.coeffs.items():
            rows.setdefault(j, {})[i] = c
        self.rows = sorted(rows.items())

    @staticmethod
    def _horner(row, x):
        # returns (f(x), f'(x)) for the x-polynomial of one T-power
        deg = max(row)
        f = mpmath.mpf(0)
        df = mpmath.mpf(0)
        for i in range(deg, -1, -1):
            df = df * x + f
            f = f * x + row.get(i, 0)
        return f, df

    def all(self, x, T):
        G = Gx = GT = GTT = GxT = mpmath.mpf(0)
        for j, row in self.rows:
            f, df = self._horner(row, x)
            tj = T ** j
            G += f * tj
            Gx += df * tj
            if j >= 1:
                tj1 = T ** (j - 1)
                GT += j * f * tj1
                GxT += j * df * tj1
            if j >= 2:
                GTT += j * (j - 1) * f * T ** (j - 2)
        return G, Gx, GT, GTT, GxT


def _float_system(p: LevelPolynomial):
    ij = np.array(list(p.coeffs), dtype=np.float64)
    c = np.array([float(v) for v in p.coeffs.values()])
    i, j = ij[:, 0], ij[:, 1]

    def F(x, T):
        with np.errstate(all="ignore"):
            return _terms(x, T)

    def _terms(x, T):
        xi = x ** i
        tj = T ** j
        tj1 = np.where(j >= 1, T ** np.maximum(j - 1, 0), 0.0)
        tj2 = np.where(j >= 2, T ** np.maximum(j - 2, 0), 0.0)
        xi1 = np.where(i >= 1, x ** np.maximum(i - 1, 0), 0.0)
        G = np.sum(c * xi * tj)
        GT = np.sum(c * j * xi * tj1)
        Gx = np.sum(c * i * xi1 * tj)
        GTT = np.sum(c * j * (j - 1) * xi * tj2)
        GxT = np.sum(c * i * j * xi1 * tj1)
        return G, Gx, GT, GTT, GxT

    return F


def _newton_step(vals, x, T):
    G, Gx, GT, GTT, GxT = vals
    f1, f2 = G - T, GT - 1
    # Jacobian of (G - T, G_T - 1) in (x, T)
    a, b, c, d = Gx, GT - 1, GxT, GTT
    det = a * d - b * c
    if det == 0:
        return None
    dx = (f1 * d - b * f2) / det
    dT = (a * f2 - c * f1) / det
    return dx, dT, f1, f2


def _newton_float(F, x, T, iters=60):
    for _ in range(iters):
        if not (0 < x < 1.5 and -10 < T < 10):
            return None
        with np.errstate(all="ignore"):
            step = _newton_step(F(x, T), x, T)
        if step is None or not all(math.isfinite(v) for v in step):
            return None
        dx, dT, f1, f2 = step
        lam = 1.0
        while lam > 1e-4 and not (0 < x - lam * dx < 1.5):
            lam /= 2
        x, T = x - lam * dx, T - lam * dT
        if abs(dx) < 1e-14 and abs(dT) < 1e-14:
            return x, T
    return None


def _t_star(F, x):
    """Positive T with G_T(x, T) = 1, or 0 when G_T(x, 0) >= 1."""
    if F(x, 0.0)[2] >= 1:
        return 0.0
    lo, hi = 0.0, 1.0
    while F(x, hi)[2] < 1:
        hi *= 2
        if hi > 2.0 ** 40:
            raise SolverError("G_T stays below 1", {"x": x})
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid in (lo, hi):
            break
        if F(x, mid)[2] < 1:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def _bisect_singularity(F):
    """Bracket r by the sign of h(x) = G(x, T*) - T* (negative below r)."""
    def h(x):
        t = _t_star(F, x)
        return F(x, t)[0] - t

    lo, hi = 1e-6, 0.5
    if h(lo) >= 0:
        raise SolverError("no negative bracket near zero")
    while h(hi) < 0:
        hi = (hi + 1) / 2
        if hi > 1 - 1e-9:
            raise SolverError("no sign change of the fixed-point gap in (0, 1)")
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid in (lo, hi):
            break
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
    x = (lo + hi) / 2
    return x, _t_star(F, x)


def _polish(ev, x, T, tol):
    it = 0
    for it in range(1, 200):
        step = _newton_step(ev.all(x, T), x, T)
        if step is None:
            break
        dx, dT, _, _ = step
        x, T = x - dx, T - dT
        if abs(dx) < tol and abs(dT) < tol:
            break
    G, _, GT, _, _ = ev.all(x, T)
    return x, T, abs(G - T), abs(GT - 1), it


def find_singularity(p: LevelPolynomial, start=(0.2, 0.5), tol=1e-12) -> SingularityResult:
    """Smallest positive solution of T = G(x, T), 1 = dG/dT."""
    F = _float_system(p)
    candidates = []
    first = _newton_float(F, *start)
    if first is not None:
        candidates.append(first)
    for x0 in np.linspace(0.05, 0.95, 10):
        for t0 in np.linspace(-3.0, 4.0, 8):
            root = _newton_float(F, float(x0), float(t0))
            if root is not None and 0 < root[0] < 1 and not any(
                    abs(root[0] - u) < 1e-7 and abs(root[1] - v) < 1e-7 for u, v in candidates):
                candidates.append(root)
    bx, bT = _bisect_singularity(F)
    with mpmath.workprec(PRECISION_BITS):
        ev = _Evaluator(p)
        eps = mpmath.mpf(2) ** (-PRECISION_BITS // 2)
        roots = []
        for x0, t0 in candidates:
            x, T, r1, r2, _ = _polish(ev, mpmath.mpf(x0), mpmath.mpf(t0), eps)
            if r1 < tol and r2 < tol and 0 < x < 1 and not any(
                    abs(x - u) < 1e-9 and abs(T - v) < 1e-9 for u, v in roots):
                roots.append((x, T))
        x, T, r1, r2, iters = _polish(ev, mpmath.mpf(bx), mpmath.mpf(bT), eps)
        if not (r1 < tol and r2 < tol and 0 < x < 1 and T > 0):
            raise SolverError("singularity did not converge",
                              {"x": float(x), "T": float(T), "residual_G": float(r1),
                               "residual_GT": float(r2)})
        positive = sorted((u, v) for u, v in roots if v > 0)
        newton_agrees = bool(positive) and abs(positive[0][0] - x) < 1e-9
        diag = {
            "residual_G": float(r1), "residual_GT": float(r2), "iterations": iters,
            "roots": [(float(u), float(v)) for u, v in sorted(roots)],
            "newton_start_converged": first is not None,
            "newton_agrees": newton_agrees,
        }
        coef = float(mpmath.log(1 / x, 2))
        return SingularityResult(float(x), float(T), coef, x, T, diag)


# -- report ------------------------------------------------------------------

def lower_bound_report(levels, allow_large: bool = False, brute_check: bool = False):
    rows = []
    for level in levels:
        p = generate_polynomial(level, allow_large=allow_large)
        s = find_singularity(p)
        row = {
            "level": level, "cases": case_count(level), "terms": p.terms,
            "degree": p.degree, "singularity": s.r, "T_at_r": s.T_at_r,
            "bound": s.coefficient, "residual_G": s.diagnostics["residual_G"],
            "residual_GT": s.diagnostics["residual_GT"],
            "real_roots": len(s.diagnostics["roots"]),
        }
        if brute_check:
            if level > 3:
                raise ResourceError("brute-force check is limited to levels <= 3")
            row["brute_force_match"] = brute_force_polynomial(level) == p
        rows.append(row)
    return rows


def format_table(rows) -> str:
    head = ["level", "cases", "terms", "degree", "singularity", "bound"]
    body = []
    for r in rows:
        cases = str(r["cases"]) if r["cases"] < 10 ** 6 else f"{r['cases']:.3e}"
        body.append([str(r["level"]), cases, str(r["terms"]), str(r["degree"]),
                     f"{r['singularity']:.6f}", f"{r['bound']:.6f}"])
    widths = [max(len(h), *(len(b[k]) for b in body)) for k, h in enumerate(head)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(head, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(b, widths)) for b in body]
    return "\n".join(lines)
