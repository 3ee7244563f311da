"""Complex polynomials, rational 1-form coefficients and their residues.

Polynomials are coefficient sequences in ascending degree.  ``RationalForm``
stores the coefficient function ``R`` of a meromorphic 1-form ``R(z) dz`` as a
normalized numerator/denominator pair: no shared roots, monic denominator.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "RationalFormError",
    "ZeroDenominatorError",
    "RootFindingError",
    "RadiusUnderflowError",
    "Polynomial",
    "RationalForm",
    "PoleEntry",
    "PoleCatalog",
    "poly_roots",
    "residue_at",
    "build_catalog",
    "CLUSTER_TOL",
    "GCD_TOL",
]

EPS = np.finfo(float).eps
CLUSTER_TOL = 1e-8
GCD_TOL = 1e-10
# candidate radius for grouping near-coincident Aberth iterates before the
# multiplicity is verified from Taylor coefficients
_CANDIDATE_RADIUS = 1e-3
_VERIFY_TOL = 1e-12
MAX_ITER = 200
QUAD_START = 64
QUAD_MAX = 1 << 16
QUAD_TOL = 1e-12
MIN_POLE_SEPARATION = 1e-12
# entries of other_poles this close to p are p itself
_SAME_POLE = 1e-15


class RationalFormError(ValueError):
    """Base class for invalid rational forms."""


class ZeroDenominatorError(RationalFormError, ZeroDivisionError):
    pass


class RootFindingError(ArithmeticError):
    def __init__(self, message, roots, residuals):
        super().__init__(message)
        self.roots = roots
        self.residuals = residuals


class RadiusUnderflowError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# polynomial helpers (ascending coefficient arrays)

def _arr(coeffs: Iterable[complex]) -> np.ndarray:
    a = np.asarray(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs,
                   dtype=complex)
    return a.reshape(-1)


def trim(c: np.ndarray) -> np.ndarray:
    """Drop exactly-zero leading (high degree) coefficients; zero -> [0]."""
    c = _arr(c)
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return np.zeros(1, dtype=complex)
    return c[: nz[-1] + 1].copy()


def degree(c: Sequence[complex]) -> int:
    c = trim(c)
    if c.size == 1 and c[0] == 0:
        return -1
    return c.size - 1


def padd(a, b) -> np.ndarray:
    a, b = _arr(a), _arr(b)
    out = np.zeros(max(a.size, b.size), dtype=complex)
    out[: a.size] += a
    out[: b.size] += b
    return trim(out)


def _padd_exact(a, b) -> np.ndarray:
    """``padd`` that zeroes coefficients lost to cancellation.

    A sum smaller than the rounding error of its two terms is treated as an
    exact zero, so that forms like ``f - f`` or a cancelled leading term do
    not keep spurious tiny coefficients.
    """
    a, b = _arr(a), _arr(b)
    n = max(a.size, b.size)
    aa = np.zeros(n, dtype=complex)
    bb = np.zeros(n, dtype=complex)
    aa[: a.size], bb[: b.size] = a, b
    out = aa + bb
    out[np.abs(out) <= 4 * EPS * (np.abs(aa) + np.abs(bb))] = 0
    return trim(out)


def pmul(a, b) -> np.ndarray:
    return trim(np.convolve(_arr(a), _arr(b)))


def pderiv(c) -> np.ndarray:
    c = _arr(c)
    if c.size <= 1:
        return np.zeros(1, dtype=complex)
    return trim(c[1:] * np.arange(1, c.size))


def peval(c: Sequence[complex], z: complex) -> complex:
    """Horner evaluation at a scalar point."""
    acc = 0j
    for a in reversed(c):
        acc = acc * z + a
    return acc


def pevalv(c, z) -> np.ndarray:
    return np.polyval(_arr(c)[::-1], z)


def _deflate(c: np.ndarray, r: complex) -> np.ndarray:
    """Synthetic division by (z - r); the remainder is discarded."""
    n = c.size - 1
    q = np.zeros(n, dtype=complex)
    acc = 0j
    for k in range(n, 0, -1):
        acc = acc * r + c[k]
        q[k - 1] = acc
    return q


def _taylor(c: np.ndarray, z0: complex, upto: int) -> tuple[np.ndarray, np.ndarray]:
    """Taylor coefficients p^(k)(z0)/k! for k < upto, with matching magnitude
    scales sum_j |c_j| C(j, k) |z0|^(j-k)."""
    vals = np.zeros(upto, dtype=complex)
    scales = np.zeros(upto)
    cur = c.copy()
    mag = np.abs(c)
    for k in range(upto):
        vals[k] = peval(cur, z0)
        scales[k] = peval(mag, abs(z0)).real
        cur = pderiv(cur)
        mag = np.abs(pderiv(mag)) if mag.size > 1 else np.zeros(1)
        fact = math.factorial(k)
        vals[k] /= fact
        scales[k] /= fact
    return vals, scales


@dataclass(frozen=True)
class Polynomial:
    """Immutable coefficient carrier (ascending degree)."""

    coeffs: tuple[complex, ...]

    def __init__(self, coeffs: Iterable[complex]):
        object.__setattr__(self, "coeffs", tuple(complex(x) for x in trim(_arr(coeffs))))

    @property
    def degree(self) -> int:
        return degree(self.coeffs)

    def __call__(self, z):
        if np.ndim(z) == 0:
            return peval(self.coeffs, complex(z))
        return pevalv(self.coeffs, np.asarray(z))

    def roots(self, tol: float = EPS) -> list[tuple[complex, int]]:
        return poly_roots(self, tol)


# ---------------------------------------------------------------------------
# roots

def _aberth(c: np.ndarray, max_iter: int = MAX_ITER) -> np.ndarray:
    n = c.size - 1
    a = c / c[-1]
    desc = a[::-1]
    ddesc = np.polyder(desc)
    mag_desc = np.abs(desc)
    if n == 1:
        return np.array([-a[0]], dtype=complex)
    # geometric mean of the root moduli, capped by the Fujiwara bound
    bound = 2.0 * max(abs(a[k]) ** (1.0 / (n - k)) for k in range(n))
    radius = abs(a[0]) ** (1.0 / n) if a[0] != 0 else 0.5 * bound
    if not radius > 0:
        radius = 1.0
    k = np.arange(n)
    z = radius * np.exp(1j * (2 * np.pi * k / n + 0.4)) * (1.0 + 0.01 * np.cos(7.0 * k))
    done = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        p = np.polyval(desc, z)
        dp = np.polyval(ddesc, z)
        backward = 8 * EPS * np.polyval(mag_desc, np.abs(z))
        done |= np.abs(p) <= backward
        if done.all():
            return z
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            s = inv.sum(axis=1)
            w = ratio / (1.0 - ratio * s)
        w = np.where(np.isfinite(w), w, 0.0)
        w[done] = 0.0
        z = z - w
        small = np.abs(w) <= 4 * EPS * np.maximum(np.abs(z), EPS)
        done |= small & (np.abs(w) > 0)
    p = np.polyval(desc, z)
    backward = 8 * EPS * np.polyval(mag_desc, np.abs(z))
    if np.all(np.abs(p) <= 1e3 * backward):
        return z
    raise RootFindingError(f"Aberth iteration did not converge in {max_iter} iterations",
                           z, np.abs(p))


def _link(points: np.ndarray, radius: float) -> list[list[int]]:
    """Single-linkage groups of indices with pairwise gap <= radius*max(1,|z|)."""
    n = points.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            scale = max(1.0, abs(points[i]), abs(points[j]))
            if abs(points[i] - points[j]) <= radius * scale:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _newton(c: np.ndarray, z0: complex, steps: int = 4) -> complex:
    dc = pderiv(c)
    z = z0
    f = abs(peval(c, z))
    for _ in range(steps):
        d = peval(dc, z)
        if d == 0:
            break
        znew = z - peval(c, z) / d
        fnew = abs(peval(c, znew))
        if not fnew < f:
            break
        z, f = znew, fnew
    return z


def poly_roots(p, tol: float = EPS, cluster_tol: float = CLUSTER_TOL,
               max_iter: int = MAX_ITER) -> list[tuple[complex, int]]:
    """All roots of ``p`` with multiplicities.

    Simultaneous Aberth-Ehrlich iteration started on a perturbed circle.
    Iterates that coalesce are grouped; a group of size ``m`` is accepted as
    an ``m``-fold root when the first ``m`` Taylor coefficients at the polished
    centre vanish to working precision, otherwise it is split by plain
    ``cluster_tol`` linkage.  ``tol`` is the relative residual accepted by
    the final check.
    """
    c = trim(p.coeffs if isinstance(p, Polynomial) else _arr(p))
    n = c.size - 1
    if n < 1:
        raise ValueError("poly_roots needs a polynomial of degree >= 1")
    out: list[tuple[complex, int]] = []
    # exact zero roots (typical after chart changes) are split off first
    k0 = int(np.argmax(c != 0))
    zeros = [(0j, k0)] if k0 else []
    c = c[k0:]
    n = c.size - 1
    if n == 0:
        return zeros
    raw = _aberth(c, max_iter)
    for group in _link(raw, _CANDIDATE_RADIUS):
        m = len(group)
        if m == 1:
            out.append((_newton(c, complex(raw[group[0]])), 1))
            continue
        centre = complex(np.mean(raw[group]))
        deriv = c
        for _ in range(m - 1):
            deriv = pderiv(deriv)
        centre = _newton(deriv, centre)
        vals, scales = _taylor(c, centre, m)
        if np.all(np.abs(vals) <= _VERIFY_TOL * np.maximum(scales, EPS)):
            out.append((centre, m))
            continue
        sub = raw[group]
        for g2 in _link(sub, cluster_tol):
            zc = complex(np.mean(sub[g2]))
            out.append((_newton(c, zc) if len(g2) == 1 else zc, len(g2)))
    scale = np.abs(c).sum()
    bad = [abs(peval(c, r)) for r, _ in out
           if abs(peval(c, r)) > max(tol, 1e3 * EPS) * scale * max(1.0, abs(r)) ** n]
    if bad:
        # multiple roots carry larger residuals; only flag simple ones that failed
        simple = [abs(peval(c, r)) for r, m in out if m == 1
                  and abs(peval(c, r)) > 1e6 * EPS * scale * max(1.0, abs(r)) ** n]
        if simple:
            raise RootFindingError("roots failed the residual check",
                                   np.array([r for r, _ in out]), np.array(simple))
    out = [(complex(r), m) for r, m in out] + zeros
    out.sort(key=lambda rm: (round(rm[0].real, 12), round(rm[0].imag, 12)))
    return out


# ---------------------------------------------------------------------------
# rational forms

def _cancel_common(num: np.ndarray, den: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    if num.size < 2 or den.size < 2:
        return num, den
    nroots = poly_roots(num)
    droots = poly_roots(den)
    changed = False
    for rd, md in droots:
        for idx, (rn, mn) in enumerate(nroots):
            if mn == 0:
                continue
            if abs(rn - rd) <= tol * max(1.0, abs(rd)):
                k = min(mn, md)
                for _ in range(k):
                    num = _deflate(num, rn)
                    den = _deflate(den, rd)
                nroots[idx] = (rn, mn - k)
                changed = True
                break
    if changed:
        num, den = trim(num), trim(den)
    return num, den


@dataclass(frozen=True)
class RationalForm:
    """Coefficient ``R = num/den`` of the 1-form ``R(z) dz``.

    Build instances through :meth:`make` (or arithmetic), which normalizes:
    common roots removed within ``GCD_TOL``, denominator monic, zero form as
    ``[0]/[1]``.
    """

    num: tuple[complex, ...]
    den: tuple[complex, ...]

    @classmethod
    def make(cls, num, den=(1,), gcd_tol: float = GCD_TOL) -> "RationalForm":
        n, d = trim(_arr(num)), trim(_arr(den))
        if d.size == 1 and d[0] == 0:
            raise ZeroDenominatorError("denominator polynomial is identically zero")
        if n.size == 1 and n[0] == 0:
            return cls((0j,), (1 + 0j,))
        n, d = _cancel_common(n, d, gcd_tol)
        lead = d[-1]
        n, d = n / lead, d / lead
        d[-1] = 1.0
        return cls(tuple(complex(x) for x in n), tuple(complex(x) for x in d))

    @classmethod
    def constant(cls, value: complex) -> "RationalForm":
        return cls.make([value])

    @classmethod
    def variable(cls) -> "RationalForm":
        return cls.make([0, 1])

    @property
    def is_zero(self) -> bool:
        return len(self.num) == 1 and self.num[0] == 0

    @property
    def is_constant(self) -> bool:
        return len(self.num) == 1 and len(self.den) == 1

    @property
    def numerator(self) -> Polynomial:
        return Polynomial(self.num)

    @property
    def denominator(self) -> Polynomial:
        return Polynomial(self.den)

    def __call__(self, z):
        if np.ndim(z) == 0:
            z = complex(z)
            return peval(self.num, z) / peval(self.den, z)
        z = np.asarray(z, dtype=complex)
        return pevalv(self.num, z) / pevalv(self.den, z)

    # arithmetic; every result is renormalized
    def _coerce(self, other) -> "RationalForm":
        if isinstance(other, RationalForm):
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return RationalForm.constant(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.den == o.den:
            return RationalForm.make(_padd_exact(self.num, o.num), self.den)
        return RationalForm.make(_padd_exact(pmul(self.num, o.den), pmul(o.num, self.den)),
                                 pmul(self.den, o.den))

    __radd__ = __add__

    def __neg__(self):
        return RationalForm.make(-_arr(self.num), self.den)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return RationalForm.make(pmul(self.num, o.num), pmul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o.is_zero:
            raise ZeroDenominatorError("division by the zero function")
        return RationalForm.make(pmul(self.num, o.den), pmul(self.den, o.num))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        num, den = np.ones(1, dtype=complex), np.ones(1, dtype=complex)
        for _ in range(int(k)):
            num, den = pmul(num, self.num), pmul(den, self.den)
        return RationalForm.make(num, den)

    def max_coeff_error(self, other: "RationalForm") -> float:
        """Largest coefficient difference; inf when the shapes differ."""
        if len(self.num) != len(other.num) or len(self.den) != len(other.den):
            return math.inf
        a = np.abs(np.subtract(self.num, other.num)).max()
        b = np.abs(np.subtract(self.den, other.den)).max()
        return float(max(a, b))


# ---------------------------------------------------------------------------
# poles and residues

@dataclass(frozen=True)
class PoleEntry:
    location: complex
    order: int
    residue: complex


@dataclass(frozen=True)
class PoleCatalog:
    entries: tuple[PoleEntry, ...] = ()

    def __iter__(self) -> Iterator[PoleEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> PoleEntry:
        return self.entries[i]

    @property
    def locations(self) -> np.ndarray:
        return np.array([e.location for e in self.entries], dtype=complex)

    def residue_sum(self) -> complex:
        return complex(sum(e.residue for e in self.entries))

    def nearest(self, z: complex) -> tuple[int, float]:
        """Index of the pole closest to ``z`` and its distance (-1, inf if none)."""
        if not self.entries:
            return -1, math.inf
        d = np.abs(self.locations - z)
        i = int(np.argmin(d))
        return i, float(d[i])

    def to_json(self) -> list[dict]:
        return [{"re": e.location.real, "im": e.location.imag, "order": e.order,
                 "res_re": e.residue.real, "res_im": e.residue.imag}
                for e in self.entries]


def _quadrature(f: RationalForm, p: complex, radius: float) -> complex:
    n = QUAD_START
    prev = None
    while True:
        theta = 2 * np.pi * np.arange(n) / n
        e = np.exp(1j * theta)
        vals = radius * f(p + radius * e) * e
        est = complex(np.mean(vals))
        if prev is not None and abs(est - prev) < QUAD_TOL * max(1.0, abs(est)):
            # components below the rounding floor of the samples are noise
            floor = 8 * EPS * float(np.abs(vals).max())
            return complex(0.0 if abs(est.real) <= floor else est.real,
                           0.0 if abs(est.imag) <= floor else est.imag)
        if n >= QUAD_MAX:
            warnings.warn(f"residue quadrature at {p} stalled at {n} nodes", RuntimeWarning)
            return est
        prev = est
        n *= 2


def residue_at(f: RationalForm, p: complex, order: int = 1,
               other_poles: Sequence[complex] | None = None,
               radius: float | None = None) -> complex:
    """Coefficient of ``1/(z - p)`` in the Laurent expansion of ``f`` at ``p``.

    Trapezoid rule on the circle ``|z - p| = r`` with ``r = min(1, d/2)``, ``d``
    the distance to the nearest other pole; nodes double from 64 until two
    successive estimates agree to 1e-12.  For simple poles the quadrature is
    compared with ``num(p)/den'(p)``; a disagreement above 1e-8 is warned
    about.  ``order`` is only used for that cross-check.
    """
    p = complex(p)
    if other_poles is None:
        other_poles = [r for r, _ in poly_roots(f.den)] if len(f.den) > 1 else []
    # the pole itself may appear in other_poles, possibly with rounding noise
    dists = [abs(complex(q) - p) for q in other_poles]
    dists = [d for d in dists if d > _SAME_POLE * max(1.0, abs(p))]
    dmin = min(dists, default=math.inf)
    if dmin < MIN_POLE_SEPARATION:
        raise RadiusUnderflowError(f"pole at {p} has a neighbour closer than {MIN_POLE_SEPARATION}")
    r = radius if radius is not None else min(1.0, 0.5 * dmin)
    res = _quadrature(f, p, r)
    if order == 1:
        direct = peval(f.num, p) / peval(pderiv(f.den), p)
        if abs(direct - res) > 1e-8 * max(1.0, abs(direct)):
            warnings.warn(f"simple-pole residue cross-check at {p}: quadrature {res} "
                          f"vs num/den' {direct}", RuntimeWarning)
    return res


def build_catalog(f: RationalForm) -> PoleCatalog:
    """All finite poles of ``f`` with orders and residues."""
    if len(f.den) < 2 or f.is_zero:
        return PoleCatalog(())
    roots = poly_roots(f.den)
    locs = [r for r, _ in roots]
    entries = []
    for loc, order in roots:
        res = residue_at(f, loc, order, other_poles=locs)
        entries.append(PoleEntry(complex(loc), int(order), res))
    return PoleCatalog(tuple(entries))
