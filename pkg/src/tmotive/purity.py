"""Newton polygons at infinity (ord T = -1) and necessary purity tests."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .skewcore import TPoly, TPresentation, char_poly

POSSIBLY_PURE = "possibly-pure"
NOT_PURE = "not-pure"


class NonIntegralCoefficient(ValueError):
    """A leading scalar has a denominator of larger degree than its numerator."""


@dataclass(frozen=True)
class NewtonPolygon:
    vertices: tuple  # ((i, h_i), ...) with Fraction or int heights

    def gradients(self) -> list[tuple[Fraction, int]]:
        """(gradient, horizontal length) per edge, merging collinear edges."""
        out: list[tuple[Fraction, int]] = []
        for (x0, y0), (x1, y1) in zip(self.vertices, self.vertices[1:]):
            s = Fraction(y1 - y0, x1 - x0)
            if out and out[-1][0] == s:
                out[-1] = (s, out[-1][1] + x1 - x0)
            else:
                out.append((s, x1 - x0))
        return out

    def slopes(self) -> list[tuple[Fraction, int]]:
        """(valuation of the roots, multiplicity) per edge: the negated gradients, ascending."""
        return sorted((-g, length) for g, length in self.gradients())

    def height_at(self, x: int) -> Fraction:
        for (x0, y0), (x1, y1) in zip(self.vertices, self.vertices[1:]):
            if x0 <= x <= x1:
                return Fraction(y0) + Fraction(y1 - y0, x1 - x0) * (x - x0)
        raise ValueError("abscissa outside the polygon")

    def is_single_segment(self) -> bool:
        return len(self.slopes()) == 1

    def below_segment_points(self) -> list[int]:
        """Abscissas where the polygon lies strictly below the chord joining its endpoints."""
        (x0, y0), (x1, y1) = self.vertices[0], self.vertices[-1]
        out = []
        for x, y in self.vertices[1:-1]:
            chord = Fraction(y0) + Fraction(y1 - y0, x1 - x0) * (x - x0)
            if y < chord:
                out.append(x)
        return out


def lower_hull(points: Sequence[tuple[int, Fraction]]) -> NewtonPolygon:
    pts = sorted(points)
    hull: list[tuple[int, Fraction]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or above the segment hull[-2] -> p
            if (y2 - y1) * (p[0] - x1) >= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    return NewtonPolygon(tuple(hull))


def ord_infinity(c: TPoly) -> int:
    """ord_inf(C) = -deg_T C; the scalar valuations are ignored."""
    return -c.deg


def newton_polygon_infty(coeffs: Sequence[TPoly], check_integral: bool = True) -> NewtonPolygon:
    """Lower convex hull of (i, -deg_T C_i) over the nonzero coefficients C_0..C_r of a polynomial in X."""
    points = []
    for i, c in enumerate(coeffs):
        if c.is_zero():
            continue
        if check_integral:
            lead = c.c[-1]
            den = getattr(lead, "den", (1,))
            num = getattr(lead, "num", (1,))
            if len(den) > len(num):
                raise NonIntegralCoefficient(f"coefficient of X^{i} has a non-integral leading scalar")
        points.append((i, Fraction(ord_infinity(c))))
    if not points:
        raise ValueError("zero polynomial has no Newton polygon")
    return lower_hull(points)


def purity_necessary(P: TPresentation, check_integral: bool = True) -> str:
    """not-pure when the polygon of char_poly(Q) has more than one slope."""
    poly = newton_polygon_infty(char_poly(P), check_integral=check_integral)
    return POSSIBLY_PURE if poly.is_single_segment() else NOT_PURE


def polygon_from_segments(start: Fraction, segments: Sequence[tuple[Fraction, int]]) -> NewtonPolygon:
    """Polygon starting at (0, start) with (gradient, length) edges in increasing gradient order."""
    x, y = 0, Fraction(start)
    verts = [(x, y)]
    for s, length in sorted(segments):
        x += length
        y += s * length
        verts.append((x, y))
    return NewtonPolygon(tuple(verts))


@dataclass(frozen=True)
class CycleRatio:
    indices: tuple
    ratio: Fraction
    matches: bool


@dataclass(frozen=True)
class FamilySlopes:
    polygon: NewtonPolygon | None
    cycles: tuple
    status: str  # "product-formula" or "conjectural"
    expected_pure: bool


def _cycles(phi: Sequence[int]) -> list[tuple[int, ...]]:
    seen, out = set(), []
    for i in range(len(phi)):
        if i in seen:
            continue
        cyc, cur = [], i
        while cur not in seen:
            seen.add(cur)
            cyc.append(cur)
            cur = phi[cur]
        out.append(tuple(cyc))
    return out


def standard_family_slopes(phi: Sequence[int], k: Sequence[int]) -> FamilySlopes:
    """Predicted polygon for standard-1 data, and the per-cycle ratio table of standard-2 data."""
    n, r = len(k), sum(k)
    target = Fraction(n, r)
    cycles = []
    for cyc in _cycles(phi):
        ratio = Fraction(len(cyc), sum(k[i] for i in cyc))
        cycles.append(CycleRatio(cyc, ratio, ratio == target))
    standard1 = list(phi) == list(range(n)) and all(k[i] >= k[i + 1] for i in range(n - 1))
    polygon = None
    if standard1:
        segments = [(Fraction(1, lam), lam) for lam in k]
        polygon = polygon_from_segments(Fraction(-n), segments)
    status = "product-formula" if standard1 else "conjectural"
    return FamilySlopes(polygon, tuple(cycles), status, all(c.matches for c in cycles))


def slope_summary(poly: NewtonPolygon) -> list[tuple[str, int]]:
    return [(f"{s.numerator}/{s.denominator}" if s.denominator != 1 else str(s.numerator), length) for s, length in poly.slopes()]


def polygon_equal(a: NewtonPolygon, b: NewtonPolygon) -> bool:
    """Same piecewise-linear function (collinear vertices ignored)."""
    return a.vertices[0] == b.vertices[0] and a.vertices[-1] == b.vertices[-1] and a.gradients() == b.gradients()
