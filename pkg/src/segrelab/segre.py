"""Segre products of partial linear spaces and their hyperplanes.

Carrier points code coordinate tuples in mixed radix with factor 0
fastest-varying, so reports and point orders are reproducible.  Lines of
the product vary in exactly one slot; each carrier line records the slot
it arises in, the carrier index of its base tuple with that slot zeroed,
and the factor line index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from . import linalg, pls
from .errors import (
    CapExceeded,
    HypothesisFailed,
    InvalidDimension,
    NoFormExists,
    NotAHyperplane,
    ShapeMismatch,
    TooFewFactors,
    WrongArity,
)
from .linalg import MultiForm, Subspace, meet, segment_restriction
from .pls import IncidenceStructure, ParallelStructure

DEFAULT_MAX_POINTS = 20_000
DEFAULT_MAX_FACTORS = 3


class AllOfSpace:
    """Distinct return value for a zero locus that covers the whole space."""

    def __repr__(self):
        return "ALL_OF_SPACE"


ALL_OF_SPACE = AllOfSpace()


@dataclass(frozen=True)
class SegreProduct:
    factors: tuple[IncidenceStructure, ...]
    carrier: IncidenceStructure
    line_provenance: tuple[tuple[int, int, int], ...]
    strides: tuple[int, ...]

    @property
    def num_factors(self) -> int:
        return len(self.factors)

    def encode(self, coords) -> int:
        return sum(c * s for c, s in zip(coords, self.strides))

    def decode(self, idx: int) -> tuple[int, ...]:
        out = []
        for f in self.factors:
            out.append(idx % f.num_points)
            idx //= f.num_points
        return tuple(out)

    def coordinate(self, idx: int, i: int) -> int:
        return (idx // self.strides[i]) % self.factors[i].num_points

    @cached_property
    def reduced_bases(self) -> tuple[tuple[int, ...], ...]:
        """Per slot i, carrier indices of all tuples with slot i zeroed."""
        out = []
        for i, f in enumerate(self.factors):
            ranges = [range(g.num_points) if j != i else range(1)
                      for j, g in enumerate(self.factors)]
            out.append(tuple(self.encode(c) for c in itertools.product(
                *[list(r) for r in ranges])))
        return tuple(out)


def subst(product: SegreProduct, a: int, i: int, x) -> int | tuple[int, ...]:
    """Coordinate substitution: replace slot i of the tuple coded by ``a``.

    ``x`` may be a factor point (returns a carrier point) or an iterable
    of factor points (returns the coded set as a sorted tuple).
    """
    if not (0 <= i < product.num_factors):
        raise IndexError(f"factor index {i} out of range")
    size = product.factors[i].num_points
    stride = product.strides[i]
    base = a - (a // stride % size) * stride
    if isinstance(x, int):
        if not (0 <= x < size):
            raise IndexError(f"factor point {x} out of range")
        return base + x * stride
    return tuple(sorted(base + int(v) * stride for v in x))


def product(factors, max_points: int = DEFAULT_MAX_POINTS,
            max_factors: int = DEFAULT_MAX_FACTORS) -> SegreProduct:
    """The Segre product: tuples as points, lines varying in one slot."""
    factors = tuple(factors)
    if len(factors) < 2:
        raise TooFewFactors("a product needs at least 2 factors")
    if len(factors) > max_factors:
        raise CapExceeded(f"products capped at {max_factors} factors")
    total = 1
    for f in factors:
        total *= f.num_points
    if total > max_points:
        raise CapExceeded(f"carrier would have {total} > {max_points} points")
    strides = []
    s = 1
    for f in factors:
        strides.append(s)
        s *= f.num_points
    strides = tuple(strides)

    def encode(coords):
        return sum(c * st for c, st in zip(coords, strides))

    records = []
    for i, f in enumerate(factors):
        other = [range(g.num_points) if j != i else (0,)
                 for j, g in enumerate(factors)]
        for coords in itertools.product(*other):
            base = encode(coords)
            for li, line in enumerate(f.lines):
                pts = tuple(base + x * strides[i] for x in line)
                records.append((pts, (i, base, li)))
    records.sort()
    lines = tuple(r[0] for r in records)
    provenance = tuple(r[1] for r in records)
    labels = tuple(itertools.product(*[range(f.num_points) for f in reversed(factors)]))
    labels = tuple(tuple(reversed(t)) for t in labels)
    carrier = IncidenceStructure(total, lines, labels)
    return SegreProduct(factors, carrier, provenance, strides)


# ----------------------------------------------------------------------
# Hyperplanes and slices


@dataclass(frozen=True)
class HyperplaneHandle:
    """A verified hyperplane of some structure, with provenance."""

    points: frozenset
    provenance: str
    structure: IncidenceStructure
    product: SegreProduct | None = None

    @cached_property
    def mask(self) -> int:
        return sum(1 << x for x in self.points)

    def sorted_points(self) -> tuple[int, ...]:
        return tuple(sorted(self.points))


def make_hyperplane(points, structure: IncidenceStructure, provenance: str,
                    product: SegreProduct | None = None) -> HyperplaneHandle:
    pts = frozenset(points)
    if not pls.is_hyperplane(structure, pts):
        raise NotAHyperplane(f"{provenance}: point set is not a hyperplane")
    return HyperplaneHandle(pts, provenance, structure, product)


def slice_points(product: SegreProduct, points, a: int, i: int) -> frozenset:
    """The slice at tuple ``a`` in slot ``i``: factor-i points whose
    substitution into ``a`` lands in the given carrier point set."""
    if not isinstance(points, (set, frozenset)):
        points = set(points)
    size = product.factors[i].num_points
    stride = product.strides[i]
    base = a - (a // stride % size) * stride
    return frozenset(x for x in range(size) if base + x * stride in points)


def hyperplane_slice(h: HyperplaneHandle, a: int, i: int) -> frozenset:
    if h.product is None:
        raise WrongArity("slices need a hyperplane inside a Segre product")
    return slice_points(h.product, h.points, a, i)


def all_slices(product: SegreProduct, points):
    """Iterate (slot, base carrier index, slice) over all distinct slices."""
    if not isinstance(points, (set, frozenset)):
        points = set(points)
    for i in range(product.num_factors):
        size = product.factors[i].num_points
        stride = product.strides[i]
        for base in product.reduced_bases[i]:
            yield i, base, frozenset(
                x for x in range(size) if base + x * stride in points)


def slice_criterion(product: SegreProduct, points) -> bool:
    """Hyperplane test by slices: every slice is a hyperplane of its
    factor or the full factor point set, and some slice is proper."""
    proper = False
    cache: dict = {}
    for i, _base, sl in all_slices(product, points):
        f = product.factors[i]
        if len(sl) == f.num_points:
            continue
        proper = True
        key = (i, sl)
        ok = cache.get(key)
        if ok is None:
            ok = pls.is_hyperplane(f, sl)
            cache[key] = ok
        if not ok:
            return False
    return proper


def is_nondegenerate(h: HyperplaneHandle) -> bool:
    """No slice of the hyperplane equals its full factor point set."""
    if h.product is None:
        raise WrongArity("degeneracy is defined for hyperplanes of products")
    if not pls.is_hyperplane(h.structure, h.points):
        raise NotAHyperplane("handle does not hold a hyperplane")
    return all(len(sl) != h.product.factors[i].num_points
               for i, _b, sl in all_slices(h.product, h.points))


def degenerate_product_hyperplane(product_: SegreProduct,
                                  factor_hyperplanes) -> HyperplaneHandle:
    """Union of the coordinate cylinders over per-factor hyperplanes."""
    factor_hyperplanes = [frozenset(h) for h in factor_hyperplanes]
    if len(factor_hyperplanes) != product_.num_factors:
        raise WrongArity("one hyperplane per factor required")
    for f, h in zip(product_.factors, factor_hyperplanes):
        if not pls.is_hyperplane(f, h):
            raise NotAHyperplane("factor set is not a hyperplane of its factor")
    pts = [idx for idx in range(product_.carrier.num_points)
           if any(product_.coordinate(idx, i) in h
                  for i, h in enumerate(factor_hyperplanes))]
    return make_hyperplane(pts, product_.carrier, "degenerate_product", product_)


def _factor_point_minors(factor: IncidenceStructure, dim: int, arity: int, p: int):
    if factor.labels is None:
        raise ShapeMismatch("factor points carry no subspace labels")
    minors = []
    for lab in factor.labels:
        if not isinstance(lab, Subspace) or lab.ambient_dim != dim \
                or lab.dim != arity or lab.p != p:
            raise ShapeMismatch("factor labels do not match the form's segment")
        minors.append(linalg._segment_minors(lab.basis, dim, p))
    return minors


def form_values(product_: SegreProduct, mu: MultiForm) -> list[int]:
    """Value of the form on the canonical basis of every carrier point."""
    if mu.num_segments != product_.num_factors:
        raise ShapeMismatch("one segment per factor required")
    minors = [_factor_point_minors(f, d, k, mu.p)
              for f, d, k in zip(product_.factors, mu.segment_dims,
                                 mu.segment_arities)]
    values = []
    for idx in range(product_.carrier.num_points):
        coords = product_.decode(idx)
        total = 0
        for key, c in mu.coefficients.items():
            prod = c
            for i, a in enumerate(key):
                m = minors[i][coords[i]][a]
                if not m:
                    prod = 0
                    break
                prod *= m
            total += prod
        values.append(total % mu.p)
    return values


def hyperplane_from_form(product_: SegreProduct, mu: MultiForm):
    """Zero locus of a segment-wise alternating form on a product of
    Grassmann-type factors; the locus is basis-independent by alternation.

    Returns ALL_OF_SPACE when the form vanishes on every point.
    """
    values = form_values(product_, mu)
    pts = [idx for idx, v in enumerate(values) if v == 0]
    if len(pts) == product_.carrier.num_points:
        return ALL_OF_SPACE
    return make_hyperplane(pts, product_.carrier, "form", product_)


def witness_hyperplane_W(space: IncidenceStructure, w: Subspace) -> HyperplaneHandle:
    """Points of a Grassmann space meeting a fixed subspace of
    complementary codimension nontrivially."""
    if space.labels is None or not isinstance(space.labels[0], Subspace):
        raise ShapeMismatch("space points carry no subspace labels")
    k = space.labels[0].dim
    n = space.labels[0].ambient_dim
    if w.dim != n - k:
        raise InvalidDimension(f"witness subspace must have dimension {n - k}")
    pts = [i for i, lab in enumerate(space.labels) if meet(lab, w).dim > 0]
    return make_hyperplane(pts, space, "witness_W")


def intersection_hyperplane(product_: SegreProduct) -> HyperplaneHandle:
    """Pairs of subspaces with nontrivial intersection, in a two-factor
    product of Grassmann spaces of complementary grades."""
    if product_.num_factors != 2:
        raise WrongArity("intersection hyperplane needs exactly 2 factors")
    lab1, lab2 = (f.labels for f in product_.factors)
    if lab1 is None or lab2 is None:
        raise ShapeMismatch("factors carry no subspace labels")
    k1, k2 = lab1[0].dim, lab2[0].dim
    n = lab1[0].ambient_dim
    if lab2[0].ambient_dim != n or k1 + k2 != n or not (1 < k1 < n - 1):
        raise InvalidDimension("grades must be complementary with 1 < k1 < n-1")
    pts = []
    for idx in range(product_.carrier.num_points):
        c = product_.decode(idx)
        if meet(lab1[c[0]], lab2[c[1]]).dim > 0:
            pts.append(idx)
    return make_hyperplane(pts, product_.carrier, "intersection", product_)


def polar_product_hyperplane(product_: SegreProduct, mu: MultiForm,
                             forms) -> HyperplaneHandle:
    """Zero locus of the form within a product of polar Grassmann spaces.

    Gates, in order: the form must be non-zero on every segment; for
    every slot and admissible filling of the other slots by factor
    points, the restricted locus inside the factor must keep at least two
    points; and the product must not be contained in the locus.  A failed
    gate raises HypothesisFailed naming the clause.
    """
    if mu.num_segments != product_.num_factors or len(tuple(forms)) != mu.num_segments:
        raise ShapeMismatch("one segment and one form per factor required")
    for i in range(mu.num_segments):
        if not linalg.segment_nonzero(mu, i):
            raise HypothesisFailed("segment_nonzero",
                                   f"form vanishes on segment {i}")
    factor_bases = [tuple(lab.basis for lab in f.labels) for f in product_.factors]
    for i, f in enumerate(product_.factors):
        pools = [factor_bases[j] if j != i else (None,)
                 for j in range(product_.num_factors)]
        for u in itertools.product(*pools):
            restricted = segment_restriction(mu, u, i)
            hits = sum(1 for basis in factor_bases[i]
                       if linalg.eval_multiform(restricted, (basis,)) == 0)
            if hits < 2:
                raise HypothesisFailed(
                    "slice_size",
                    f"restricted locus in factor {i} has {hits} point(s)")
    values = form_values(product_, mu)
    pts = [idx for idx, v in enumerate(values) if v == 0]
    if len(pts) == product_.carrier.num_points:
        raise HypothesisFailed("containment", "product lies inside the locus")
    return make_hyperplane(pts, product_.carrier, "polar_form", product_)


def correlation_of(product_: SegreProduct, h: HyperplaneHandle):
    """The two slice maps of a hyperplane in a two-factor product.

    Verifies the compatibility between the maps and that either one
    reconstructs the hyperplane.
    """
    if product_.num_factors != 2:
        raise WrongArity("correlations are defined for 2-factor products")
    if not pls.is_hyperplane(product_.carrier, h.points):
        raise NotAHyperplane("handle does not hold a hyperplane")
    n1, n2 = (f.num_points for f in product_.factors)
    delta1 = {a1: slice_points(product_, h.points, product_.encode((a1, 0)), 1)
              for a1 in range(n1)}
    delta2 = {a2: slice_points(product_, h.points, product_.encode((0, a2)), 0)
              for a2 in range(n2)}
    for a2 in range(n2):
        assert delta2[a2] == frozenset(a1 for a1 in range(n1) if a2 in delta1[a1])
    rebuilt = {product_.encode((a1, a2)) for a1 in range(n1) for a2 in delta1[a1]}
    assert rebuilt == set(h.points)
    return delta1, delta2


def sesquilinear_from_hyperplane(product_: SegreProduct, h: HyperplaneHandle):
    """Recover a bilinear form on V1 x V2 whose zero pairs are exactly the
    hyperplane, for a 2-factor product of projective spaces over GF(p).

    Solves the linear system the hyperplane imposes on the Gram matrix
    and scans the solution space for a matrix with the exact zero locus.
    """
    if product_.num_factors != 2:
        raise WrongArity("form recovery needs exactly 2 factors")
    lab1, lab2 = (f.labels for f in product_.factors)
    if lab1 is None or lab2 is None or lab1[0].dim != 1 or lab2[0].dim != 1:
        raise ShapeMismatch("factors must be projective spaces with labels")
    p = lab1[0].p
    n1, n2 = lab1[0].ambient_dim, lab2[0].ambient_dim
    rows = []
    for idx in sorted(h.points):
        a1, a2 = product_.decode(idx)
        u, v = lab1[a1].basis[0], lab2[a2].basis[0]
        rows.append(tuple((u[i] * v[j]) % p for i in range(n1) for j in range(n2)))
    basis = linalg.nullspace(rows, n1 * n2, p)
    if basis:
        target = h.mask
        for coeffs in linalg.projective_representatives(len(basis), p):
            flat = [0] * (n1 * n2)
            for c, b in zip(coeffs, basis):
                if c:
                    flat = [(x + c * y) % p for x, y in zip(flat, b)]
            matrix = tuple(tuple(flat[i * n2 + j] for j in range(n2))
                           for i in range(n1))
            mu = MultiForm.from_matrix(matrix, p)
            zero_mask = 0
            for idx, value in enumerate(form_values(product_, mu)):
                if value == 0:
                    zero_mask |= 1 << idx
            if zero_mask == target:
                return matrix
    raise NoFormExists("no bilinear form has this hyperplane as zero locus")


# ----------------------------------------------------------------------
# Product parallelisms


def product_parallelism(product_: SegreProduct, factor_pars) -> ParallelStructure:
    """Lines are parallel when they arise in the same slot from parallel
    factor lines (base tuples unconstrained)."""
    factor_pars = tuple(factor_pars)
    _check_factor_pars(product_, factor_pars)
    groups: dict = {}
    for idx, (i, _base, li) in enumerate(product_.line_provenance):
        groups.setdefault((i, factor_pars[i].class_of[li]), []).append(idx)
    classes = tuple(tuple(sorted(g)) for _k, g in sorted(groups.items()))
    return ParallelStructure(product_.carrier, classes)


def componentwise_parallelism(product_: SegreProduct, factor_pars) -> ParallelStructure:
    """Lines are parallel when every coordinate agrees or is parallel:
    same slot, equal base tuples, factor lines equal or parallel."""
    factor_pars = tuple(factor_pars)
    _check_factor_pars(product_, factor_pars)
    groups: dict = {}
    for idx, (i, base, li) in enumerate(product_.line_provenance):
        groups.setdefault((i, base, factor_pars[i].class_of[li]), []).append(idx)
    classes = tuple(tuple(sorted(g)) for _k, g in sorted(groups.items()))
    return ParallelStructure(product_.carrier, classes)


def _check_factor_pars(product_: SegreProduct, factor_pars):
    if len(factor_pars) != product_.num_factors:
        raise WrongArity("one parallelism per factor required")
    for f, par in zip(product_.factors, factor_pars):
        if par.base is not f and par.base != f:
            raise ShapeMismatch("parallelism does not belong to its factor")
