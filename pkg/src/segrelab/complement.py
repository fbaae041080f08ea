"""Affinization: hyperplane complements with their natural parallelism.

Removing a hyperplane leaves every surviving line with a unique deleted
point, its direction; two lines are parallel when they share their
direction.  The parallelism is carried explicitly as the direction map.
The incidence-only parallelism tests in this module are a verification
layer on top of that ground truth, never the representation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from . import pls, segre
from .errors import (
    GeometryError,
    HypothesisFailed,
    NotAHyperplane,
    NotParallelismPreserving,
)
from .pls import IncidenceStructure, ParallelStructure
from .segre import SegreProduct


@dataclass(frozen=True)
class AffinizedStructure:
    ambient: IncidenceStructure
    removed: frozenset
    carrier: ParallelStructure
    survivors: tuple[int, ...]
    line_origin: tuple[int, ...]
    direction: tuple[int, ...]
    product: SegreProduct | None = None

    @cached_property
    def new_index(self) -> dict:
        return {old: new for new, old in enumerate(self.survivors)}

    @cached_property
    def class_direction(self) -> tuple[int, ...]:
        """Ambient direction point of each parallel class."""
        return tuple(self.direction[cls[0]] for cls in self.carrier.classes)


def affinize(structure, hyperplane) -> AffinizedStructure:
    """Remove a hyperplane: surviving points, surviving lines minus their
    deleted point, lines parallel when their deleted points coincide."""
    product = None
    if isinstance(structure, SegreProduct):
        product = structure
        structure = structure.carrier
    if isinstance(hyperplane, segre.HyperplaneHandle):
        hyperplane = hyperplane.points
    removed = frozenset(hyperplane)
    if not pls.is_hyperplane(structure, removed):
        raise NotAHyperplane("cannot affinize by a non-hyperplane")
    survivors = tuple(x for x in range(structure.num_points) if x not in removed)
    new_index = {old: new for new, old in enumerate(survivors)}
    records = []
    for li, line in enumerate(structure.lines):
        kept = [x for x in line if x not in removed]
        if len(kept) == len(line):
            raise GeometryError("hyperplane misses a line")  # unreachable
        if len(kept) + 1 < len(line):
            continue  # line inside the hyperplane
        deleted = next(x for x in line if x in removed)
        records.append((tuple(new_index[x] for x in kept), li, deleted))
    records.sort()
    lines = tuple(r[0] for r in records)
    labels = (tuple(structure.labels[x] for x in survivors)
              if structure.labels is not None else None)
    base = IncidenceStructure(len(survivors), lines, labels)
    direction = tuple(r[2] for r in records)
    groups: dict = {}
    for idx, d in enumerate(direction):
        groups.setdefault(d, []).append(idx)
    classes = tuple(tuple(g) for _d, g in sorted(groups.items()))
    carrier = ParallelStructure(base, classes)
    return AffinizedStructure(structure, removed, carrier, survivors,
                              tuple(r[1] for r in records), direction, product)


# ----------------------------------------------------------------------
# Affine axioms


def _line_data(s: IncidenceStructure):
    point_lines = [0] * s.num_points
    for li, line in enumerate(s.lines):
        for x in line:
            point_lines[x] |= 1 << li
    line_adj = []
    for li, line in enumerate(s.lines):
        m = 0
        for x in line:
            m |= point_lines[x]
        line_adj.append(m & ~(1 << li))
    return point_lines, line_adj


def check_affine_axioms(obj, axiom: str) -> bool:
    """Evaluate one of the four affine axioms exactly.

    axiom: 'partial_affine' (parallel adjacent lines coincide),
    'affine_pls' (a parallel through every point), 'tamaschke', or
    'parallelogram'.
    """
    par = obj.carrier if isinstance(obj, AffinizedStructure) else obj
    s = par.base
    point_lines, line_adj = _line_data(s)
    class_masks = [sum(1 << li for li in cls) for cls in par.classes]

    if axiom == "partial_affine":
        for cls in par.classes:
            for li, kj in itertools.combinations(cls, 2):
                if (line_adj[li] >> kj) & 1:
                    return False
        return True
    if axiom == "affine_pls":
        all_points = (1 << s.num_points) - 1
        for cls in par.classes:
            covered = 0
            for li in cls:
                covered |= s.line_masks[li]
            if covered != all_points:
                return False
        return True
    if axiom == "tamaschke":
        for p in range(s.num_points):
            through = point_lines[p]
            for l1 in _lbits(through):
                for l2 in _lbits(through & ~(1 << l1)):
                    k1s = line_adj[l1] & line_adj[l2] & ~through
                    for k1 in _lbits(k1s):
                        bad = (class_masks[par.class_of[k1]] & line_adj[l1]
                               & ~through & ~line_adj[l2] & ~(1 << l2))
                        if bad:
                            return False
        return True
    if axiom == "parallelogram":
        for cls in par.classes:
            for l1 in cls:
                for l2 in cls:
                    k1s = line_adj[l1] & line_adj[l2]
                    for k1 in _lbits(k1s):
                        bad = (class_masks[par.class_of[k1]] & line_adj[l1]
                               & ~line_adj[l2] & ~(1 << l2))
                        if bad:
                            return False
        return True
    raise ValueError(f"unknown axiom {axiom!r}")


def _lbits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


# ----------------------------------------------------------------------
# Incidence-definable parallelisms


class LineContext:
    """Cached line-level adjacency data for the quadrangle searches."""

    def __init__(self, s: IncidenceStructure):
        self.s = s
        self.point_lines, self.line_adj = _line_data(s)
        self._ast: dict = {}

    def ast_row(self, li: int) -> int:
        """Bitmask of lines quadrangle-opposite to line li."""
        row = self._ast.get(li)
        if row is None:
            row = 0
            for kj in range(len(self.s.lines)):
                if par_ast(self.s, li, kj, self) is not None:
                    row |= 1 << kj
            self._ast[li] = row
        return row


def par_veblen(s: IncidenceStructure, i: int, j: int, ctx: LineContext | None = None):
    """Veblen-configuration parallelism: equal lines, or two non-adjacent
    lines both met by two lines through a common outside point.

    Returns a witness (p, K1, K2) or True for the trivial disjunct, else
    None.
    """
    if i == j:
        return True
    ctx = ctx or LineContext(s)
    if (ctx.line_adj[i] >> j) & 1:
        return None
    both = s.line_masks[i] | s.line_masks[j]
    cand = list(_lbits(ctx.line_adj[i] & ctx.line_adj[j]))
    for a, k1 in enumerate(cand):
        for k2 in cand[a + 1:]:
            shared = s.line_masks[k1] & s.line_masks[k2]
            if shared and not shared & both:
                p = shared.bit_length() - 1
                return (p, k1, k2)
    return None


def par_ast(s: IncidenceStructure, i: int, j: int, ctx: LineContext | None = None):
    """Quadrangle parallelism: the lines are opposite sides of a
    quadrangle without diagonals.  Returns the witness quadrangle
    (p, q, r, s) or None."""
    if i == j:
        return None
    adj = s.adjacency
    for p, q in itertools.permutations(s.lines[i], 2):
        for r, t in itertools.permutations(s.lines[j], 2):
            if ((adj[q] >> r) & 1 and (adj[t] >> p) & 1
                    and not (adj[p] >> r) & 1 and not (adj[q] >> t) & 1):
                return (p, q, r, t)
    return None


def par_quadr(s: IncidenceStructure, i: int, j: int, ctx: LineContext | None = None):
    """Derived quadrangle parallelism: the lines are non-adjacent, one
    meets a quadrangle-opposite pair K1, K2, and the other meets two
    distinct common transversals of K1 and K2.

    Returns a witness (K1, K2, M1, M2) or None.
    """
    ctx = ctx or LineContext(s)
    if i == j or (ctx.line_adj[i] >> j) & 1:
        return None
    for k1 in _lbits(ctx.line_adj[i]):
        partners = ctx.line_adj[i] & ctx.ast_row(k1)
        for k2 in _lbits(partners):
            w = ctx.line_adj[k1] & ctx.line_adj[k2] & ctx.line_adj[j]
            if w and w & (w - 1):
                ms = []
                for m in _lbits(w):
                    ms.append(m)
                    if len(ms) == 2:
                        return (k1, k2, ms[0], ms[1])
    return None


# ----------------------------------------------------------------------
# Decision procedure for the natural parallelism of a product complement


class ComplementContext:
    """Precomputed data for incidence-only parallel decisions on the
    complement of a non-degenerate hyperplane in a Segre product."""

    def __init__(self, a: AffinizedStructure):
        if a.product is None:
            raise HypothesisFailed("product", "complement is not of a product")
        if min(len(l) for f in a.product.factors for l in f.lines) < 4:
            raise HypothesisFailed("line_size", "factor lines must have >= 4 points")
        handle = segre.HyperplaneHandle(a.removed, "enumerated",
                                        a.product.carrier, a.product)
        if not segre.is_nondegenerate(handle):
            raise HypothesisFailed("nondegenerate", "hyperplane is degenerate")
        self.a = a
        base = a.carrier.base
        self.line_ctx = LineContext(base)
        maximal = pls.strong_subspaces(base, maximal_only=True)
        masks = [sum(1 << x for x in m) for m in maximal]
        # chain components: maximal strong subspaces linked by shared lines
        n = len(masks)
        comp = list(range(n))

        def find(x):
            while comp[x] != x:
                comp[x] = comp[comp[x]]
                x = comp[x]
            return x

        line_masks = base.line_masks
        for x in range(n):
            for y in range(x + 1, n):
                inter = masks[x] & masks[y]
                if inter & (inter - 1) and any(
                        lm & inter == lm for lm in line_masks):
                    comp[find(x)] = find(y)
        self._containing = [
            frozenset(find(t) for t, m in enumerate(masks) if lm & m == lm)
            for lm in line_masks]

    def same_slice(self, i: int, j: int) -> bool:
        return bool(self._containing[i] & self._containing[j])

    def decide(self, i: int, j: int) -> bool:
        if i == j:
            return True
        if self.same_slice(i, j):
            return par_veblen(self.a.carrier.base, i, j, self.line_ctx) is not None
        return par_quadr(self.a.carrier.base, i, j, self.line_ctx) is not None


def natural_parallel_decision(a: AffinizedStructure, i: int, j: int,
                              ctx: ComplementContext | None = None) -> bool:
    """Decide the natural parallelism of two complement lines purely from
    incidence: lines in a common slice (detected through chains of strong
    subspaces sharing lines) use the Veblen test, cross-slice pairs the
    quadrangle test."""
    ctx = ctx or ComplementContext(a)
    return ctx.decide(i, j)


# ----------------------------------------------------------------------
# Covering by affine spaces


def _factor_is_good(f: IncidenceStructure, cache={}) -> bool:
    if f not in cache:
        cache[f] = (pls.check_property(f, "gamma")
                    and pls.check_property(f, "veblenian"))
    return cache[f]


def covering(a: AffinizedStructure):
    """The family of maximal strong subspaces of the complement, one
    batch per slot and base tuple, with factor provenance.

    Returns a list of (points, slot, base) with points a frozenset of
    complement carrier indices.
    """
    if a.product is None:
        raise HypothesisFailed("product", "complement is not of a product")
    prod = a.product
    if min(len(l) for f in prod.factors for l in f.lines) < 4:
        raise HypothesisFailed("line_size", "factor lines must have >= 4 points")
    if not all(_factor_is_good(f) for f in prod.factors):
        raise HypothesisFailed("veblenian_gamma", "factors must be Veblenian gamma")
    members = {}
    for i, factor in enumerate(prod.factors):
        stride = prod.strides[i]
        for base in prod.reduced_bases[i]:
            h_slice = segre.slice_points(prod, a.removed, base, i)
            if len(h_slice) == factor.num_points:
                continue
            sub = affinize(factor, h_slice)
            for strong in pls.strong_subspaces(sub.carrier.base, maximal_only=True):
                pts = frozenset(a.new_index[base + sub.survivors[x] * stride]
                                for x in strong)
                members.setdefault(pts, (i, base))
    return [(pts, slot_base[0], slot_base[1])
            for pts, slot_base in sorted(members.items(),
                                         key=lambda kv: sorted(kv[0]))]


def member_substructure(a: AffinizedStructure, points) -> ParallelStructure:
    """A covering member as a structure with the induced parallelism."""
    base = a.carrier.base
    mask = sum(1 << x for x in points)
    inside = [li for li, lm in enumerate(base.line_masks) if lm & mask == lm]
    sub, _ = pls.restrict(base, points, inside)
    sorted_pts = sorted(points)
    remap = {x: i for i, x in enumerate(sorted_pts)}
    groups: dict = {}
    for li in inside:
        new_line = tuple(remap[x] for x in base.lines[li])
        new_idx = sub.line_index[new_line]
        groups.setdefault(a.carrier.class_of[li], []).append(new_idx)
    classes = tuple(tuple(sorted(g)) for _c, g in sorted(groups.items()))
    return ParallelStructure(sub, classes)


# ----------------------------------------------------------------------
# Recovery of the removed hyperplane


def _ambient_good(m: IncidenceStructure, cache={}) -> bool:
    if m not in cache:
        cache[m] = (min(len(l) for l in m.lines) >= 3
                    and pls.check_property(m, "gamma")
                    and pls.check_property(m, "veblenian"))
    return cache[m]


def recover_directions(a: AffinizedStructure):
    """Rebuild the removed hyperplane's incidence from the complement.

    Points are the parallel classes; a class triple is collinear when
    some triangle of the complement has its three side classes equal to
    the triple.  Returns (structure, directions) where ``directions[c]``
    is the ambient point the class c codes, for external comparison.
    """
    if not _ambient_good(a.ambient):
        raise HypothesisFailed("veblenian_gamma",
                               "ambient must be Veblenian gamma with lines >= 3")
    if not pls.is_flappy(a.ambient, a.removed):
        raise HypothesisFailed("flappy", "removed hyperplane is not flappy")
    base = a.carrier.base
    class_of = a.carrier.class_of
    triples = set()
    for x, y, z in pls.triangles(base):
        c1 = class_of[base.line_of(x, y)]
        c2 = class_of[base.line_of(x, z)]
        c3 = class_of[base.line_of(y, z)]
        triples.add(frozenset((c1, c2, c3)))
    lines = set()
    by_pair: dict = {}
    for tr in triples:
        for pair in itertools.combinations(sorted(tr), 2):
            by_pair.setdefault(pair, set()).update(tr)
    for pair, pts in by_pair.items():
        lines.add(tuple(sorted(pts)))
    structure = IncidenceStructure(len(a.carrier.classes), tuple(sorted(lines)))
    return structure, a.class_direction


def induced_hyperplane_structure(a: AffinizedStructure):
    """The incidence the ambient induces on the removed hyperplane:
    hyperplane points with the ambient lines inside it."""
    pts = sorted(a.removed)
    inside = [li for li, lm in enumerate(a.ambient.line_masks)
              if lm & sum(1 << x for x in a.removed) == lm]
    sub, point_map = pls.restrict(a.ambient, pts, inside)
    return sub, point_map


# ----------------------------------------------------------------------
# Automorphism extension


def extend_automorphism(a: AffinizedStructure, f) -> tuple[int, ...]:
    """Extend an automorphism of the complement (respecting the natural
    parallelism) to the unique ambient automorphism preserving the
    removed hyperplane.

    The extension sends each direction point to the direction of the
    image class.
    """
    if not _ambient_good(a.ambient):
        raise HypothesisFailed("veblenian_gamma",
                               "ambient must be Veblenian gamma with lines >= 3")
    if not pls.is_flappy(a.ambient, a.removed):
        raise HypothesisFailed("flappy", "removed hyperplane is not flappy")
    base = a.carrier.base
    f = tuple(f)
    line_images = {}
    for li, line in enumerate(base.lines):
        img = tuple(sorted(f[x] for x in line))
        ki = base.line_index.get(img)
        if ki is None:
            raise NotParallelismPreserving("map does not send lines to lines")
        line_images[li] = ki
    class_image = {}
    for li, ki in line_images.items():
        c1, c2 = a.carrier.class_of[li], a.carrier.class_of[ki]
        if class_image.setdefault(c1, c2) != c2:
            raise NotParallelismPreserving("map does not respect the parallelism")
    if len(set(class_image.values())) != len(class_image):
        raise NotParallelismPreserving("map does not respect the parallelism")

    n = a.ambient.num_points
    big = [-1] * n
    for new, old in enumerate(a.survivors):
        big[old] = a.survivors[f[new]]
    for c1, c2 in class_image.items():
        d1, d2 = a.class_direction[c1], a.class_direction[c2]
        if big[d1] not in (-1, d2):
            raise GeometryError("direction images conflict")
        big[d1] = d2
    if sorted(big) != list(range(n)):
        raise GeometryError("extension is not a bijection")
    for line in a.ambient.lines:
        img = tuple(sorted(big[x] for x in line))
        if img not in a.ambient.line_index:
            raise GeometryError("extension does not preserve ambient lines")
    if {big[x] for x in a.removed} != set(a.removed):
        raise GeometryError("extension does not preserve the hyperplane")
    return tuple(big)


def near_plane(m: IncidenceStructure, p: int, line):
    """Union of the lines through p that meet the given line, with its
    classification tag: 'point_on_line', 'empty', 'line', 'near_plane'."""
    if isinstance(line, int):
        line = m.lines[line]
    lmask = sum(1 << x for x in line)
    pts = 0
    count = 0
    for li in m.lines_through[p]:
        if m.line_masks[li] & lmask:
            pts |= m.line_masks[li]
            count += 1
    point_set = frozenset(x for x in range(m.num_points) if (pts >> x) & 1)
    if (lmask >> p) & 1:
        return point_set, "point_on_line"
    if not point_set:
        return point_set, "empty"
    if count == 1:
        return point_set, "line"
    return point_set, "near_plane"


def nearplane_meets_in_line(m: IncidenceStructure, hyperplane) -> bool:
    """Every near-plane with vertex off the hyperplane and cross line not
    inside it meets the hyperplane in exactly a line."""
    h = frozenset(hyperplane)
    hmask = sum(1 << x for x in h)
    for p in range(m.num_points):
        if p in h:
            continue
        for ki, line in enumerate(m.lines):
            if m.line_masks[ki] & hmask == m.line_masks[ki] or p in line:
                continue
            pts, tag = near_plane(m, p, line)
            if tag != "near_plane":
                continue
            trace = tuple(sorted(x for x in pts if x in h))
            if trace not in m.line_index:
                return False
    return True


def flappy_nearplane_condition(m: IncidenceStructure, hyperplane) -> bool:
    """Every line inside the hyperplane lies in a near-plane with vertex
    off the hyperplane and cross line not inside it."""
    h = frozenset(hyperplane)
    hmask = sum(1 << x for x in h)
    for li, lm in enumerate(m.line_masks):
        if lm & hmask != lm:
            continue
        found = False
        for p in range(m.num_points):
            if p in h:
                continue
            for ki in range(len(m.lines)):
                if m.line_masks[ki] & hmask == m.line_masks[ki]:
                    continue
                if p in m.lines[ki]:
                    continue
                pts, tag = near_plane(m, p, ki)
                if tag == "near_plane" and all((1 << x) & lm == 0 or x in pts
                                               for x in m.lines[li]):
                    found = True
                    break
            if found:
                break
        if not found:
            return False
    return True
