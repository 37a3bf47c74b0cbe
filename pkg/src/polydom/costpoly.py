"""Size-dependent extraction-cost curves.

A cost curve is a polynomial in the item size n with nonnegative
coefficients, so every curve is nonnegative and nondecreasing on n >= 0.
Curves add when features are extracted together, and the machinery here
answers the two geometric questions the rest of the package is built on:
where do two curves cross on (0, N_MAX], and does one curve sit at or below
another over the whole size domain.

Crossings are found by root isolation: the difference polynomial's critical
points (roots of its derivative, obtained recursively) split (0, N_MAX] into
monotone pieces, and sign changes across each piece are refined by bisection
to an absolute tolerance of ``ROOT_TOL``. Roots closer together than the
tolerance are coalesced; a critical point where the difference itself
vanishes is reported as a (tangential) root.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateFit,
    IdenticalCurves,
    InsufficientSamples,
    ValidationError,
)

MAX_DEGREE = 4
DEFAULT_N_MAX = 1.0e6
ROOT_TOL = 1e-9


def _trimmed(coeffs: Iterable[float]) -> tuple[float, ...]:
    c = [float(x) for x in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c) if c else (0.0,)


@dataclass(frozen=True)
class CostPolynomial:
    """Extraction cost as a polynomial in item size; coefficient i scales n**i."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trimmed(self.coeffs))
        if any(c < 0 for c in self.coeffs):
            raise ValidationError(f"cost coefficients must be nonnegative: {self.coeffs}")
        if len(self.coeffs) - 1 > MAX_DEGREE:
            raise ValidationError(
                f"cost curve degree {len(self.coeffs) - 1} exceeds cap {MAX_DEGREE}"
            )

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def eval(self, n):
        """Evaluate at size n >= 0 (scalar or ndarray)."""
        if np.any(np.asarray(n) < 0):
            raise ValidationError("sizes are nonnegative")
        return _eval_raw(self.coeffs, n)

    def __add__(self, other: "CostPolynomial") -> "CostPolynomial":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        summed = list(a)
        for i, c in enumerate(b):
            summed[i] += c
        return CostPolynomial(tuple(summed))

    def to_json_dict(self) -> dict:
        return {"coeffs": list(self.coeffs)}

    @classmethod
    def from_json_dict(cls, d: dict) -> "CostPolynomial":
        if "coeffs" not in d:
            raise ValidationError("cost polynomial JSON needs a 'coeffs' key")
        return cls(tuple(float(x) for x in d["coeffs"]))


ZERO_COST = CostPolynomial((0.0,))


@dataclass(frozen=True)
class CostSample:
    """One timing observation: feature ran on an item of `size` in `elapsed` ms."""

    size: int
    elapsed: float

    def __post_init__(self):
        if self.size < 1:
            raise ValidationError(f"sample size must be >= 1, got {self.size}")
        if self.elapsed < 0 or not math.isfinite(self.elapsed):
            raise ValidationError(f"elapsed must be finite and >= 0, got {self.elapsed}")


@dataclass(frozen=True)
class Breakpoint:
    """A size where two candidate curves cross."""

    n_value: float
    curve_a: int
    curve_b: int

    def __post_init__(self):
        if self.n_value <= 0:
            raise ValidationError("breakpoints lie strictly right of n = 0")
        if self.curve_a == self.curve_b:
            raise ValidationError("a curve cannot cross itself")


def sum_polys(polys: Iterable[CostPolynomial]) -> CostPolynomial:
    """Coefficient-wise sum; the empty sum is the zero curve."""
    total = ZERO_COST
    for p in polys:
        total = total + p
    return total


# ---------------------------------------------------------------------------
# raw coefficient helpers (difference polynomials may have negative terms)
# ---------------------------------------------------------------------------


def _eval_raw(coeffs: Sequence[float], x):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _diff_coeffs(p: CostPolynomial, q: CostPolynomial) -> list[float]:
    """Coefficients of q - p, unpadded."""
    a, b = list(p.coeffs), list(q.coeffs)
    n = max(len(a), len(b))
    a += [0.0] * (n - len(a))
    b += [0.0] * (n - len(b))
    out = [bb - aa for aa, bb in zip(a, b)]
    while len(out) > 1 and out[-1] == 0.0:
        out.pop()
    return out


def _derivative(coeffs: Sequence[float]) -> list[float]:
    return [i * c for i, c in enumerate(coeffs)][1:] or [0.0]


def _tangent_tol(coeffs: Sequence[float], x: float) -> float:
    scale = sum(abs(c) * abs(x) ** i for i, c in enumerate(coeffs))
    return ROOT_TOL * (1.0 + scale)


def _bisect_root(coeffs: Sequence[float], lo: float, hi: float, flo: float) -> float:
    # precondition: sign(f(lo)) != sign(f(hi)), both nonzero
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        fmid = _eval_raw(coeffs, mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _coalesce(roots: list[float], tol: float = ROOT_TOL) -> list[float]:
    roots.sort()
    out: list[float] = []
    for r in roots:
        if not out or r - out[-1] > tol:
            out.append(r)
    return out


def _real_roots(coeffs: Sequence[float], lo: float, hi: float) -> list[float]:
    """All real roots of `coeffs` in [lo, hi], found recursively via the derivative."""
    c = list(coeffs)
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    degree = len(c) - 1
    if degree <= 0:
        return []
    if degree == 1:
        r = -c[0] / c[1]
        return [r] if lo <= r <= hi else []

    crits = _real_roots(_derivative(c), lo, hi)
    pts = _coalesce([lo] + crits + [hi], tol=0.0)
    roots: list[float] = []
    vals = [_eval_raw(c, x) for x in pts]

    # a critical point (or endpoint) sitting on zero is itself a root
    for x, v in zip(pts, vals):
        if abs(v) <= _tangent_tol(c, x):
            roots.append(x)

    for (a, b), (fa, fb) in zip(zip(pts, pts[1:]), zip(vals, vals[1:])):
        if abs(fa) <= _tangent_tol(c, a) or abs(fb) <= _tangent_tol(c, b):
            continue  # endpoint root already recorded
        if (fa > 0) != (fb > 0):
            roots.append(_bisect_root(c, a, b, fa))

    return _coalesce(roots)


def _quadratic_roots(c0: float, c1: float, c2: float, lo: float, hi: float) -> list[float]:
    """Stable closed-form roots of c2 x^2 + c1 x + c0 restricted to [lo, hi]."""
    if c2 == 0.0:
        if c1 == 0.0:
            return []
        r = -c0 / c1
        return [r] if lo <= r <= hi else []
    disc = c1 * c1 - 4.0 * c0 * c2
    if disc < 0.0:
        return []
    s = math.sqrt(disc)
    if disc == 0.0:
        r = -c1 / (2.0 * c2)
        return [r] if lo <= r <= hi else []
    q = -0.5 * (c1 + math.copysign(s, c1)) if c1 != 0.0 else -0.5 * s
    r1, r2 = q / c2, c0 / q
    return sorted(r for r in (r1, r2) if lo <= r <= hi)


def _roots_fast(coeffs: Sequence[float], lo: float, hi: float) -> list[float]:
    """Dispatch: closed form for degree <= 2, recursive isolation above."""
    c = list(coeffs)
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    if len(c) <= 3:
        c += [0.0] * (3 - len(c))
        return _coalesce(_quadratic_roots(c[0], c[1], c[2], lo, hi))
    return _real_roots(c, lo, hi)


# ---------------------------------------------------------------------------
# public geometry
# ---------------------------------------------------------------------------


def intersections(p: CostPolynomial, q: CostPolynomial, n_max: float = DEFAULT_N_MAX) -> list[float]:
    """Sorted sizes in (0, n_max] where the two curves are equal.

    Raises IdenticalCurves when p and q share every coefficient.
    """
    d = _diff_coeffs(p, q)
    if all(c == 0.0 for c in d):
        raise IdenticalCurves("the two cost curves are coefficient-identical")
    return [r for r in _real_roots(d, 0.0, n_max) if r > 0.0]


def cost_dominates(p: CostPolynomial, q: CostPolynomial, n_max: float = DEFAULT_N_MAX) -> bool:
    """True iff p costs at most q at every size in [0, n_max] (weak dominance)."""
    d = _diff_coeffs(p, q)  # q - p
    if all(c >= 0.0 for c in d):
        return True
    if _eval_raw(d, 0.0) < 0.0 or _eval_raw(d, n_max) < 0.0:
        return False
    pts = [0.0] + _roots_fast(d, 0.0, n_max) + [n_max]
    for a, b in zip(pts, pts[1:]):
        mid = 0.5 * (a + b)
        if _eval_raw(d, mid) < -_tangent_tol(d, mid):
            return False
    return True


def fit(samples: Iterable[CostSample], degree: int, quantile: float = 1.0) -> CostPolynomial:
    """Fit a degree-`degree` cost curve to timing samples.

    Samples are grouped by size and reduced to the per-size `quantile`
    (1.0 provisions for the worst observed cost). Negative fitted
    coefficients are clamped to zero and the remaining terms refit.
    """
    if not 0 <= degree <= MAX_DEGREE:
        raise ValidationError(f"degree must be in [0, {MAX_DEGREE}], got {degree}")
    if not 0.0 < quantile <= 1.0:
        raise ValidationError(f"quantile must be in (0, 1], got {quantile}")

    by_size: dict[int, list[float]] = {}
    for s in samples:
        by_size.setdefault(s.size, []).append(s.elapsed)
    if len(by_size) < degree + 1:
        raise InsufficientSamples(
            f"need at least {degree + 1} distinct sizes for degree {degree}, got {len(by_size)}"
        )

    sizes = np.array(sorted(by_size), dtype=float)
    y = np.array([np.quantile(by_size[int(s)], quantile) for s in sizes])

    active = list(range(degree + 1))
    coef = np.zeros(0)
    while active:
        design = np.column_stack([sizes**i for i in active])
        coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
        if rank < len(active):
            raise DegenerateFit(
                f"rank-deficient design matrix for powers {active} over sizes {sizes.tolist()}"
            )
        negative = [i for i, c in zip(active, coef) if c < 0]
        if not negative:
            break
        active = [i for i in active if i not in negative]

    full = [0.0] * (degree + 1)
    for i, c in zip(active, coef):
        full[i] = float(c)
    return CostPolynomial(tuple(full))


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

TIMING_HEADER = ("feature", "size", "elapsed_ms")


def read_timing_csv(path: str) -> dict[str, list[CostSample]]:
    """Load timing samples from a `feature,size,elapsed_ms` CSV."""
    out: dict[str, list[CostSample]] = {}
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        missing = set(TIMING_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValidationError(f"timing CSV is missing columns: {sorted(missing)}")
        for row in reader:
            out.setdefault(row["feature"], []).append(
                CostSample(size=int(row["size"]), elapsed=float(row["elapsed_ms"]))
            )
    return out


def write_timing_csv(path: str, rows: Iterable[tuple[str, int, float]]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(TIMING_HEADER)
        for feature, size, elapsed in rows:
            writer.writerow([feature, size, repr(float(elapsed))])
