"""Partial linear spaces: the incidence core.

Points are dense integer indices; lines are strictly increasing tuples of
point indices, globally sorted and deduplicated, so a structure has one
canonical representation.  All values are immutable after construction.
Adjacency (collinearity) is irreflexive throughout; in quantifiers of the
form "L is contained in the neighbourhood of a" with a on L, the point a
itself is excluded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from .errors import (
    CapExceeded,
    InvalidStructure,
    IsolatedPoint,
    LineNotInSubset,
    LineTooShort,
    NotAHyperplane,
    NotParallelismPreserving,
    TwoLinesShareTwoPoints,
)

STRONG_SUBSPACE_POINT_CAP = 2 ** 14
AUTOMORPHISM_POINT_CAP = 512
HYPERPLANE_ENUM_POINT_CAP = 40


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class IncidenceStructure:
    num_points: int
    lines: tuple[tuple[int, ...], ...]
    labels: tuple | None = None

    def __post_init__(self):
        seen = set()
        prev = None
        for line in self.lines:
            if len(line) < 2:
                raise LineTooShort(f"line {line} has fewer than 2 points")
            if any(line[i] >= line[i + 1] for i in range(len(line) - 1)):
                raise InvalidStructure(f"line {line} is not strictly increasing")
            if line[0] < 0 or line[-1] >= self.num_points:
                raise InvalidStructure(f"line {line} has out-of-range points")
            if line in seen:
                raise InvalidStructure(f"duplicate line {line}")
            if prev is not None and line < prev:
                raise InvalidStructure("lines are not globally sorted")
            seen.add(line)
            prev = line
        if self.labels is not None and len(self.labels) != self.num_points:
            raise InvalidStructure("labels length differs from point count")

    # -- cached derived data --------------------------------------------

    @cached_property
    def full_mask(self) -> int:
        return (1 << self.num_points) - 1

    @cached_property
    def line_masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << x for x in line) for line in self.lines)

    @cached_property
    def lines_through(self) -> tuple[tuple[int, ...], ...]:
        through = [[] for _ in range(self.num_points)]
        for idx, line in enumerate(self.lines):
            for x in line:
                through[x].append(idx)
        return tuple(tuple(t) for t in through)

    @cached_property
    def adjacency(self) -> tuple[int, ...]:
        adj = [0] * self.num_points
        for mask, line in zip(self.line_masks, self.lines):
            for x in line:
                adj[x] |= mask
        return tuple(a & ~(1 << x) for x, a in enumerate(adj))

    @cached_property
    def line_index(self) -> dict:
        return {line: i for i, line in enumerate(self.lines)}

    @cached_property
    def pair_line(self) -> dict:
        """Map from an adjacent point pair (a < b) to its unique line index."""
        pairs = {}
        for idx, line in enumerate(self.lines):
            for a, b in itertools.combinations(line, 2):
                pairs[(a, b)] = idx
        return pairs

    def line_of(self, a: int, b: int):
        """Index of the line joining a and b, or None."""
        return self.pair_line.get((a, b) if a < b else (b, a))

    def adjacent(self, a: int, b: int) -> bool:
        return a != b and bool(self.adjacency[a] >> b & 1)


def validate_pls(num_points: int, lines, labels=None) -> IncidenceStructure:
    """Validate raw point/line data as a partial linear space.

    Checks: every line has >= 2 in-range points, every point is on a
    line, and two distinct lines share at most one point.  Lines are
    sorted and deduplicated into the canonical representation; idempotent
    on valid input.
    """
    norm = sorted({tuple(sorted(set(line))) for line in lines})
    for line in norm:
        if len(line) < 2:
            raise LineTooShort(f"line {line} has fewer than 2 points")
        if line[0] < 0 or line[-1] >= num_points:
            raise InvalidStructure(f"line {line} has out-of-range points")
    covered = set()
    pair_seen = {}
    for idx, line in enumerate(norm):
        covered.update(line)
        for pair in itertools.combinations(line, 2):
            if pair in pair_seen:
                raise TwoLinesShareTwoPoints(
                    f"lines {norm[pair_seen[pair]]} and {line} share points {pair}")
            pair_seen[pair] = idx
    missing = [x for x in range(num_points) if x not in covered]
    if missing:
        raise IsolatedPoint(f"points {missing[:8]} lie on no line")
    return IncidenceStructure(num_points, tuple(norm),
                              tuple(labels) if labels is not None else None)


@dataclass(frozen=True)
class ParallelStructure:
    """A partial linear space with an equivalence relation on its lines."""

    base: IncidenceStructure
    classes: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        flat = sorted(i for cls in self.classes for i in cls)
        if flat != list(range(len(self.base.lines))):
            raise InvalidStructure("classes are not a partition of the lines")

    @cached_property
    def class_of(self) -> tuple[int, ...]:
        out = [0] * len(self.base.lines)
        for ci, cls in enumerate(self.classes):
            for li in cls:
                out[li] = ci
        return tuple(out)

    def parallel(self, i: int, j: int) -> bool:
        return self.class_of[i] == self.class_of[j]


# ----------------------------------------------------------------------
# Predicates


def is_subspace(s: IncidenceStructure, points) -> bool:
    """True iff every line meeting the set in >= 2 points lies inside it."""
    mask = _as_mask(points)
    for lm in s.line_masks:
        inter = lm & mask
        if inter and inter != lm and inter & (inter - 1):
            return False
    return True


def is_hyperplane(s: IncidenceStructure, points) -> bool:
    """True iff the set is a proper subspace met by every line."""
    mask = _as_mask(points)
    if mask == s.full_mask:
        return False
    for lm in s.line_masks:
        inter = lm & mask
        if not inter:
            return False
        if inter != lm and inter & (inter - 1):
            return False
    return True


def _as_mask(points) -> int:
    if isinstance(points, int):
        return points
    return sum(1 << x for x in set(points))


def _require_hyperplane(s, points) -> int:
    mask = _as_mask(points)
    if not is_hyperplane(s, mask):
        raise NotAHyperplane("the given point set is not a hyperplane")
    return mask


def is_spiky(s: IncidenceStructure, points) -> bool:
    """Every point of the hyperplane is adjacent to a point off it."""
    mask = _require_hyperplane(s, points)
    outside = s.full_mask & ~mask
    return all(s.adjacency[x] & outside for x in _bits(mask))


def is_flappy(s: IncidenceStructure, points) -> bool:
    """Every line inside the hyperplane is fully adjacent to an outside point."""
    mask = _require_hyperplane(s, points)
    outside = s.full_mask & ~mask
    for lm in s.line_masks:
        if lm & mask == lm:
            first = (lm & -lm).bit_length() - 1
            candidates = s.adjacency[first] & outside
            if not any(s.adjacency[a] & lm == lm for a in _bits(candidates)):
                return False
    return True


def check_property(s: IncidenceStructure, prop: str) -> bool:
    if prop == "linear":
        return all(s.adjacency[x] == s.full_mask & ~(1 << x)
                   for x in range(s.num_points))
    if prop == "gamma":
        # none-one-or-all for a point against lines not through it
        for a in range(s.num_points):
            nbhd = s.adjacency[a]
            bit = 1 << a
            for lm in s.line_masks:
                if lm & bit:
                    continue
                inter = lm & nbhd
                if inter and inter != lm and inter & (inter - 1):
                    return False
        return True
    if prop == "veblenian":
        return _is_veblenian(s)
    if prop == "connected":
        return _is_connected(s)
    if prop == "strongly_connected":
        return _is_strongly_connected(s)
    raise ValueError(f"unknown property {prop!r}")


def _is_veblenian(s: IncidenceStructure) -> bool:
    # Two lines through p, both met by two lines missing p => those meet.
    for p in range(s.num_points):
        through = s.lines_through[p]
        bit = 1 << p
        for l1, l2 in itertools.combinations(through, 2):
            m1, m2 = s.line_masks[l1], s.line_masks[l2]
            crossing = [k for k, lm in enumerate(s.line_masks)
                        if not lm & bit and lm & m1 and lm & m2]
            for k1, k2 in itertools.combinations(crossing, 2):
                if not s.line_masks[k1] & s.line_masks[k2]:
                    return False
    return True


def _is_connected(s: IncidenceStructure) -> bool:
    if s.num_points == 0:
        return True
    seen = 1
    frontier = 1
    while frontier:
        reach = 0
        for x in _bits(frontier):
            reach |= s.adjacency[x]
        frontier = reach & ~seen
        seen |= frontier
    return seen == s.full_mask


def _is_strongly_connected(s: IncidenceStructure) -> bool:
    """Connectivity through chains of strong subspaces overlapping in >= 2
    points, evaluated on maximal strong subspaces (every strong subspace
    extends to a maximal one, so chains are preserved)."""
    maximal = strong_subspaces(s, maximal_only=True)
    if not maximal:
        return s.num_points <= 1
    masks = [sum(1 << x for x in m) for m in maximal]
    n = len(masks)
    seen = [False] * n
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in range(n):
            if not seen[j]:
                inter = masks[i] & masks[j]
                if inter and inter & (inter - 1):
                    seen[j] = True
                    stack.append(j)
    if not all(seen):
        return False
    union = 0
    for m in masks:
        union |= m
    return union == s.full_mask


# ----------------------------------------------------------------------
# Strong subspaces


def _closure(s: IncidenceStructure, mask: int) -> int:
    changed = True
    while changed:
        changed = False
        for lm in s.line_masks:
            if lm & ~mask:
                inter = lm & mask
                if inter & (inter - 1):
                    mask |= lm
                    changed = True
    return mask


def _is_clique(s: IncidenceStructure, mask: int) -> bool:
    for x in _bits(mask):
        rest = mask & ~(1 << x)
        if rest & ~s.adjacency[x]:
            return False
    return True


def strong_subspaces(s: IncidenceStructure, maximal_only: bool = True):
    """Strong subspaces (subspaces whose points are pairwise collinear).

    With ``maximal_only`` the inclusion-maximal ones are returned.  The
    search grows closures upward from lines (and singletons, when all
    strong subspaces are requested); any strong subspace is reachable
    this way because closures stay inside an enclosing strong subspace.
    Results are sorted point sets in deterministic order.
    """
    if s.num_points > STRONG_SUBSPACE_POINT_CAP:
        raise CapExceeded("structure too large for strong-subspace search")
    seeds = [_as_mask(line) for line in s.lines]
    if not maximal_only:
        seeds += [1 << x for x in range(s.num_points)]
    seen = set()
    maximal = []
    all_strong = set()
    stack = sorted(set(seeds))
    while stack:
        mask = stack.pop()
        if mask in seen:
            continue
        seen.add(mask)
        all_strong.add(mask)
        common = s.full_mask & ~mask
        for x in _bits(mask):
            common &= s.adjacency[x]
        extended = False
        for q in _bits(common):
            bigger = _closure(s, mask | (1 << q))
            if _is_clique(s, bigger):
                extended = True
                if bigger not in seen:
                    stack.append(bigger)
        if not extended:
            maximal.append(mask)
    chosen = sorted(set(maximal)) if maximal_only else sorted(all_strong)
    return tuple(tuple(_bits(m)) for m in chosen)


def triangles(s: IncidenceStructure):
    """All triangles (pairwise adjacent, non-collinear triples), ordered."""
    for a in range(s.num_points):
        higher = s.adjacency[a] >> (a + 1) << (a + 1)
        for b in _bits(higher):
            line_ab = s.line_of(a, b)
            third = s.adjacency[a] & s.adjacency[b]
            third = third >> (b + 1) << (b + 1)
            lm = s.line_masks[line_ab]
            for c in _bits(third & ~lm):
                yield (a, b, c)


def restrict(s: IncidenceStructure, points, line_indices):
    """Substructure on a point subset with a chosen subset of lines.

    Returns ``(structure, point_map)`` where ``point_map`` sends old
    point indices to new ones.  Each chosen line must lie inside the
    point subset.
    """
    pts = sorted(set(points))
    point_map = {x: i for i, x in enumerate(pts)}
    new_lines = []
    for li in line_indices:
        line = s.lines[li]
        if any(x not in point_map for x in line):
            raise LineNotInSubset(f"line {line} is not inside the point subset")
        new_lines.append(tuple(point_map[x] for x in line))
    labels = tuple(s.labels[x] for x in pts) if s.labels is not None else None
    sub = IncidenceStructure(len(pts), tuple(sorted(new_lines)), labels)
    return sub, point_map


# ----------------------------------------------------------------------
# Hyperplane enumeration (constraint search)

_IN, _OUT, _UNKNOWN = 1, 2, 0


def enumerate_hyperplanes(s: IncidenceStructure):
    """All hyperplanes of a desk-scale structure, as sorted point tuples.

    Backtracking over point statuses with unit propagation on the two
    hyperplane rules: a line with two in-points lies inside, and a line
    must keep at least one point available.  Capped at 40 points.
    """
    n = s.num_points
    if n > HYPERPLANE_ENUM_POINT_CAP:
        raise CapExceeded("hyperplane enumeration capped at 40 points")
    lines = s.lines
    lines_through = s.lines_through
    status = [_UNKNOWN] * n
    results = []

    def propagate(queue, trail):
        while queue:
            x = queue.pop()
            for li in lines_through[x]:
                line = lines[li]
                n_in = n_out = 0
                unknown = None
                for y in line:
                    st = status[y]
                    if st == _IN:
                        n_in += 1
                    elif st == _OUT:
                        n_out += 1
                    else:
                        unknown = y
                if n_out == len(line):
                    return False
                if n_in >= 2:
                    for y in line:
                        if status[y] == _OUT:
                            return False
                        if status[y] == _UNKNOWN:
                            status[y] = _IN
                            trail.append(y)
                            queue.append(y)
                elif n_out == len(line) - 1 and n_in == 0:
                    status[unknown] = _IN
                    trail.append(unknown)
                    queue.append(unknown)
        return True

    def choose():
        # prefer a point on a line that already has one in-point
        best = None
        for li, line in enumerate(lines):
            n_in = 0
            cand = None
            for y in line:
                if status[y] == _IN:
                    n_in += 1
                elif status[y] == _UNKNOWN:
                    cand = y
            if cand is not None and n_in == 1:
                return cand
            if cand is not None and best is None:
                best = cand
        return best

    def search():
        x = choose()
        if x is None:
            mask = sum(1 << i for i in range(n) if status[i] == _IN)
            if mask != s.full_mask and is_hyperplane(s, mask):
                results.append(tuple(i for i in range(n) if status[i] == _IN))
            return
        for value in (_OUT, _IN):
            status[x] = value
            trail = [x]
            if propagate([x], trail):
                search()
            for y in trail:
                status[y] = _UNKNOWN

    search()
    return tuple(sorted(results))


# ----------------------------------------------------------------------
# Automorphisms and isomorphisms


@dataclass(frozen=True)
class AutomorphismGroup:
    order: int
    generators: tuple[tuple[int, ...], ...]
    elements: tuple[tuple[int, ...], ...] | None


def _invariants(s: IncidenceStructure) -> tuple:
    degs = [bin(a).count("1") for a in s.adjacency]
    line_profiles = [tuple(sorted(len(s.lines[li]) for li in s.lines_through[x]))
                     for x in range(s.num_points)]
    dist_profiles = []
    for x in range(s.num_points):
        dist = {x: 0}
        frontier = [x]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for y in frontier:
                for z in _bits(s.adjacency[y]):
                    if z not in dist:
                        dist[z] = d
                        nxt.append(z)
            frontier = nxt
        dist_profiles.append(tuple(sorted(dist.values())))
    return tuple((degs[x], line_profiles[x], dist_profiles[x])
                 for x in range(s.num_points))


def _search_maps(s1, s2, par1, par2, preserve, limit=None):
    """Bijections s1 -> s2 carrying lines to lines (and parallel classes
    to parallel classes / marked subsets to marked subsets when given).

    Yields mappings as tuples.  Backtracking with point-invariant
    filtering, adjacency pruning and partial-line pruning; assignment
    order picks the most constrained point, ties broken by index.
    """
    n = s1.num_points
    if n != s2.num_points or len(s1.lines) != len(s2.lines):
        return
    if sorted(map(len, s1.lines)) != sorted(map(len, s2.lines)):
        return
    inv1, inv2 = _invariants(s1), _invariants(s2)
    if sorted(inv1) != sorted(inv2):
        return
    candidates = [sum(1 << v for v in range(n) if inv2[v] == inv1[u])
                  for u in range(n)]
    pre_pairs = []
    for p1, p2 in preserve:
        m1, m2 = _as_mask(p1), _as_mask(p2)
        if bin(m1).count("1") != bin(m2).count("1"):
            return
        pre_pairs.append((m1, m2))

    img = [-1] * n
    assigned_mask = 0
    image_mask = 0
    line_assigned = [0] * len(s1.lines)
    cmap: dict = {}
    cmap_rev: dict = {}
    found = 0

    lines1 = s1.lines
    adj1, adj2 = s1.adjacency, s2.adjacency

    def line_check(u: int) -> bool:
        for li in s1.lines_through[u]:
            line = lines1[li]
            pts = [img[y] for y in line if img[y] >= 0]
            if len(pts) < 2:
                continue
            ki = s2.line_of(pts[0], pts[1])
            if ki is None:
                return False
            if len(s2.lines[ki]) != len(line):
                return False
            km = s2.line_masks[ki]
            if any(not (km >> v) & 1 for v in pts[2:]):
                return False
        return True

    def select():
        best, best_key = None, None
        for u in _bits(s1.full_mask & ~assigned_mask):
            pinned = total = 0
            for li in s1.lines_through[u]:
                c = line_assigned[li]
                if c > pinned:
                    pinned = c
                total += c
            key = (-pinned, -total,
                   -bin(adj1[u] & assigned_mask).count("1"), u)
            if best_key is None or key < best_key:
                best, best_key = u, key
        return best

    def forced_mask(u: int) -> int:
        # lines through u with two assigned points pin the image line
        mask = candidates[u] & ~image_mask
        for li in s1.lines_through[u]:
            if line_assigned[li] < 2:
                continue
            pts = [img[y] for y in lines1[li] if img[y] >= 0]
            ki = s2.line_of(pts[0], pts[1])
            if ki is None:
                return 0
            mask &= s2.line_masks[ki]
            if not mask:
                return 0
        return mask

    def extend(u: int, v: int) -> bool:
        # assigned neighbours of u must map exactly onto assigned nbhd of v
        mapped = 0
        for w in _bits(adj1[u] & assigned_mask):
            mapped |= 1 << img[w]
        if mapped != adj2[v] & image_mask:
            return False
        for m1, m2 in pre_pairs:
            if bool((m1 >> u) & 1) != bool((m2 >> v) & 1):
                return False
        return True

    def par_check(u: int, bound: list) -> bool:
        # bind parallel classes of lines that became fully assigned
        if par1 is None:
            return True
        for li in s1.lines_through[u]:
            if line_assigned[li] != len(lines1[li]):
                continue
            pts = [img[y] for y in lines1[li]]
            ki = s2.line_of(pts[0], pts[1])
            c1, c2 = par1.class_of[li], par2.class_of[ki]
            if c1 in cmap:
                if cmap[c1] != c2:
                    return False
            elif c2 in cmap_rev:
                return False
            else:
                cmap[c1] = c2
                cmap_rev[c2] = c1
                bound.append(c1)
        return True

    def search():
        nonlocal assigned_mask, image_mask, found
        u = select()
        if u is None:
            found += 1
            yield tuple(img)
            return
        for v in _bits(forced_mask(u)):
            if not extend(u, v):
                continue
            img[u] = v
            assigned_mask |= 1 << u
            image_mask |= 1 << v
            for li in s1.lines_through[u]:
                line_assigned[li] += 1
            bound: list = []
            if line_check(u) and par_check(u, bound):
                yield from search()
            for c1 in bound:
                del cmap_rev[cmap[c1]]
                del cmap[c1]
            for li in s1.lines_through[u]:
                line_assigned[li] -= 1
            img[u] = -1
            assigned_mask &= ~(1 << u)
            image_mask &= ~(1 << v)
            if limit is not None and found >= limit:
                return

    yield from search()


def _generated_group(gens, n: int) -> set:
    identity = tuple(range(n))
    have = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for x in frontier:
            for h in gens:
                y = tuple(x[i] for i in h)
                if y not in have:
                    have.add(y)
                    nxt.append(y)
        frontier = nxt
    return have


def _small_generating_set(elements):
    """Greedy generating set for a permutation group given all elements."""
    elements = sorted(elements)
    n = len(elements[0])
    gens: list = []
    have = _generated_group(gens, n)
    for g in elements:
        if g not in have:
            gens.append(g)
            have = _generated_group(gens, n)
            if len(have) == len(elements):
                break
    return tuple(gens)


def automorphisms(s: IncidenceStructure, parallelism: ParallelStructure | None = None,
                  preserve=(), count_only: bool = False) -> AutomorphismGroup:
    """All line-preserving point bijections of the structure onto itself.

    ``parallelism`` restricts to maps carrying parallel classes to
    parallel classes; ``preserve`` is an iterable of point sets each of
    which must be stabilised setwise.  Exact and deterministic.
    """
    if s.num_points > AUTOMORPHISM_POINT_CAP:
        raise CapExceeded("automorphism search capped at 512 points")
    pairs = [(p, p) for p in preserve]
    elements = tuple(sorted(_search_maps(s, s, parallelism, parallelism, pairs)))
    gens = _small_generating_set(elements) if elements else ()
    return AutomorphismGroup(order=len(elements), generators=gens,
                             elements=None if count_only else elements)


def isomorphic(s1: IncidenceStructure, s2: IncidenceStructure,
               par1: ParallelStructure | None = None,
               par2: ParallelStructure | None = None):
    """A witness bijection s1 -> s2, or None when none exists."""
    if max(s1.num_points, s2.num_points) > AUTOMORPHISM_POINT_CAP:
        raise CapExceeded("isomorphism search capped at 512 points")
    if (par1 is None) != (par2 is None):
        raise NotParallelismPreserving(
            "both structures need a parallelism to compare with one")
    for f in _search_maps(s1, s2, par1, par2, (), limit=1):
        return f
    return None
