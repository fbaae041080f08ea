"""Exact linear and multilinear algebra over prime fields GF(p).

Vectors are tuples of ints in ``[0, p)`` and matrices are tuples of such
tuples.  Subspaces are stored in reduced row-echelon form (RREF) so that
two subspaces are equal iff their representations compare equal, and so
that every enumeration has one fixed deterministic order: pivot sets in
lexicographic order, then free entries in lexicographic (row-major)
order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .errors import AmbientMismatch, InvalidDimension, ShapeMismatch

Vector = tuple[int, ...]
Matrix = tuple[Vector, ...]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def fp_inv(a: int, p: int) -> int:
    """Multiplicative inverse of ``a`` modulo the prime ``p``.

    Raises ZeroDivisionError when ``a`` is 0 mod p.
    """
    a %= p
    if a == 0:
        raise ZeroDivisionError("0 has no multiplicative inverse")
    return pow(a, p - 2, p)


@dataclass(frozen=True)
class PrimeField:
    """The field GF(p); primality is checked at construction."""

    p: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"modulus {self.p} is not prime")

    def inv(self, a: int) -> int:
        return fp_inv(a, self.p)

    def neg(self, a: int) -> int:
        return (-a) % self.p


def rref(matrix, p: int) -> tuple[Matrix, int]:
    """Reduced row-echelon form over GF(p) with zero rows dropped.

    Returns ``(rows, rank)``.  The result is the unique canonical
    representative of the row space; the function is idempotent.
    """
    rows = [[int(x) % p for x in row] for row in matrix]
    if not rows:
        return (), 0
    ncols = len(rows[0])
    for row in rows:
        if len(row) != ncols:
            raise ShapeMismatch("ragged matrix")
    rank = 0
    for col in range(ncols):
        pivot = None
        for r in range(rank, len(rows)):
            if rows[r][col]:
                pivot = r
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = fp_inv(rows[rank][col], p)
        if inv != 1:
            rows[rank] = [(x * inv) % p for x in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                c = rows[r][col]
                rows[r] = [(x - c * y) % p for x, y in zip(rows[r], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return tuple(tuple(r) for r in rows[:rank]), rank


def matrix_rank(matrix, p: int) -> int:
    return rref(matrix, p)[1]


def nullspace(matrix, ncols: int, p: int) -> tuple[Vector, ...]:
    """Basis of the right nullspace ``{x : M x = 0}`` over GF(p).

    One basis vector per free column, in increasing free-column order;
    the free coordinate is set to 1.
    """
    reduced, rank = rref(matrix, p)
    pivots = []
    for row in reduced:
        for j, x in enumerate(row):
            if x:
                pivots.append(j)
                break
    pivot_set = set(pivots)
    basis = []
    for f in range(ncols):
        if f in pivot_set:
            continue
        vec = [0] * ncols
        vec[f] = 1
        for row, pj in zip(reduced, pivots):
            vec[pj] = (-row[f]) % p
        basis.append(tuple(vec))
    return tuple(basis)


def solve(matrix, rhs, p: int):
    """One solution of ``M x = b`` over GF(p), or None when inconsistent.

    Free variables are set to 0.
    """
    rows = [tuple(row) + (b % p,) for row, b in zip(matrix, rhs)]
    ncols = len(rows[0]) - 1 if rows else 0
    reduced, _ = rref(rows, p)
    x = [0] * ncols
    for row in reduced:
        for j, v in enumerate(row):
            if v:
                if j == ncols:
                    return None
                x[j] = row[ncols]
                break
    # pivot coefficients are 1 and pivot columns are cleared elsewhere,
    # but pivot rows may still involve free columns; with free vars at 0
    # the pivot value is exactly the augmented entry.
    return tuple(x)


def det_mod(matrix, p: int) -> int:
    """Determinant of a square matrix over GF(p), by elimination."""
    rows = [[int(x) % p for x in row] for row in matrix]
    n = len(rows)
    det = 1
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if rows[r][col]:
                pivot = r
                break
        if pivot is None:
            return 0
        if pivot != col:
            rows[col], rows[pivot] = rows[pivot], rows[col]
            det = (-det) % p
        det = (det * rows[col][col]) % p
        inv = fp_inv(rows[col][col], p)
        for r in range(col + 1, n):
            if rows[r][col]:
                c = (rows[r][col] * inv) % p
                rows[r] = [(x - c * y) % p for x, y in zip(rows[r], rows[col])]
    return det


@lru_cache(maxsize=None)
def all_vectors(n: int, p: int) -> tuple[Vector, ...]:
    """All of GF(p)^n in lexicographic order."""
    return tuple(itertools.product(range(p), repeat=n))


@lru_cache(maxsize=None)
def projective_representatives(n: int, p: int) -> tuple[Vector, ...]:
    """One scaling representative per nonzero vector class: first nonzero
    coordinate equals 1; lexicographic order."""
    return tuple(v for v in all_vectors(n, p) if next((x for x in v if x), None) == 1)


def gaussian_binomial(n: int, k: int, p: int) -> int:
    """Number of k-subspaces of GF(p)^n by the product formula."""
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= p ** (n - i) - 1
        den *= p ** (k - i) - 1
    return num // den


@dataclass(frozen=True)
class Subspace:
    """A subspace of GF(p)^n held as a canonical RREF basis.

    ``basis`` rows are nonzero with strictly increasing pivots and pivot
    columns cleared elsewhere, so equality is plain tuple comparison.
    """

    ambient_dim: int
    p: int
    basis: Matrix

    def __post_init__(self):
        for row in self.basis:
            if len(row) != self.ambient_dim:
                raise ShapeMismatch("basis row width differs from ambient dim")
            if any(not (0 <= x < self.p) for x in row):
                raise ValueError("entries must be reduced mod p")
        canon, rank = rref(self.basis, self.p)
        if canon != self.basis or rank != len(self.basis):
            raise ValueError("basis is not in canonical RREF")

    @classmethod
    def from_vectors(cls, vectors, ambient_dim: int, p: int) -> "Subspace":
        canon, _ = rref(vectors, p) if vectors else ((), 0)
        return cls(ambient_dim, p, canon)

    @classmethod
    def zero(cls, ambient_dim: int, p: int) -> "Subspace":
        return cls(ambient_dim, p, ())

    @classmethod
    def full(cls, ambient_dim: int, p: int) -> "Subspace":
        ident = tuple(tuple(1 if i == j else 0 for j in range(ambient_dim))
                      for i in range(ambient_dim))
        return cls(ambient_dim, p, ident)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains_vector(self, v) -> bool:
        v = [int(x) % self.p for x in v]
        for row in self.basis:
            pj = next(j for j, x in enumerate(row) if x)
            if v[pj]:
                c = v[pj]
                v = [(x - c * y) % self.p for x, y in zip(v, row)]
        return not any(v)

    def contains(self, other: "Subspace") -> bool:
        if other.ambient_dim != self.ambient_dim or other.p != self.p:
            raise AmbientMismatch("subspaces live in different ambient spaces")
        return all(self.contains_vector(row) for row in other.basis)

    def vectors(self) -> tuple[Vector, ...]:
        """All vectors in the subspace (p^dim of them), deterministic order."""
        out = []
        for coeffs in itertools.product(range(self.p), repeat=self.dim):
            v = [0] * self.ambient_dim
            for c, row in zip(coeffs, self.basis):
                if c:
                    v = [(x + c * y) % self.p for x, y in zip(v, row)]
            out.append(tuple(v))
        return tuple(out)


@lru_cache(maxsize=None)
def enumerate_subspaces(n: int, k: int, p: int) -> tuple[Subspace, ...]:
    """All k-subspaces of GF(p)^n, each exactly once.

    Order: pivot sets lexicographic, then free entries lexicographic in
    row-major position order.  The length equals the Gaussian binomial.
    """
    if k < 0 or k > n:
        raise InvalidDimension(f"no {k}-subspaces in dimension {n}")
    if k == 0:
        return (Subspace.zero(n, p),)
    result = []
    for pivots in itertools.combinations(range(n), k):
        pivot_set = set(pivots)
        free_positions = [(i, j) for i in range(k)
                          for j in range(pivots[i] + 1, n) if j not in pivot_set]
        for assignment in itertools.product(range(p), repeat=len(free_positions)):
            rows = [[0] * n for _ in range(k)]
            for i, pj in enumerate(pivots):
                rows[i][pj] = 1
            for (i, j), val in zip(free_positions, assignment):
                rows[i][j] = val
            result.append(Subspace(n, p, tuple(tuple(r) for r in rows)))
    return tuple(result)


def join(u: Subspace, w: Subspace) -> Subspace:
    """Sum of subspaces U + W in canonical form."""
    _check_compatible(u, w)
    return Subspace.from_vectors(u.basis + w.basis, u.ambient_dim, u.p)


def meet(u: Subspace, w: Subspace) -> Subspace:
    """Intersection of subspaces in canonical form."""
    _check_compatible(u, w)
    if u.dim == 0 or w.dim == 0:
        return Subspace.zero(u.ambient_dim, u.p)
    p = u.p
    # Residuals of U's basis after reduction against W; a combination of
    # U's basis lies in W iff the same combination of residuals vanishes.
    residuals = []
    for row in u.basis:
        v = list(row)
        for wrow in w.basis:
            pj = next(j for j, x in enumerate(wrow) if x)
            if v[pj]:
                c = v[pj]
                v = [(x - c * y) % p for x, y in zip(v, wrow)]
        residuals.append(tuple(v))
    # Combinations are indexed by columns: nullspace of residuals^T.
    transposed = tuple(tuple(res[j] for res in residuals) for j in range(u.ambient_dim))
    coeffs = nullspace(transposed, u.dim, p)
    vectors = []
    for c in coeffs:
        v = [0] * u.ambient_dim
        for ci, row in zip(c, u.basis):
            if ci:
                v = [(x + ci * y) % p for x, y in zip(v, row)]
        vectors.append(tuple(v))
    return Subspace.from_vectors(vectors, u.ambient_dim, p)


def _check_compatible(u: Subspace, w: Subspace):
    if u.ambient_dim != w.ambient_dim or u.p != w.p:
        raise AmbientMismatch("subspaces live in different ambient spaces")


def wedge_coords(vectors, n: int, p: int) -> Vector:
    """Grassmann (Pluecker) coordinates of a k-tuple of vectors in GF(p)^n.

    Entry order: k-subsets of columns in lexicographic order.  The result
    is the zero vector iff the input is linearly dependent, and two bases
    of one subspace give projectively proportional results.
    """
    k = len(vectors)
    if k > n:
        raise InvalidDimension("more vectors than the ambient dimension")
    rows = [tuple(int(x) % p for x in v) for v in vectors]
    for r in rows:
        if len(r) != n:
            raise ShapeMismatch("vector width differs from ambient dim")
    out = []
    for cols in itertools.combinations(range(n), k):
        sub = [[row[j] for j in cols] for row in rows]
        out.append(det_mod(sub, p))
    return tuple(out)


# ----------------------------------------------------------------------
# Bilinear forms


@dataclass(frozen=True)
class BilinearForm:
    """A reflexive bilinear form given by its Gram matrix.

    kind 'symmetric' requires M == M^T; kind 'alternating' requires a
    skew matrix with zero diagonal.  Either way the induced orthogonality
    relation is symmetric.
    """

    matrix: Matrix
    p: int
    kind: str

    def __post_init__(self):
        n = len(self.matrix)
        for row in self.matrix:
            if len(row) != n:
                raise ShapeMismatch("form matrix must be square")
            if any(not (0 <= x < self.p) for x in row):
                raise ValueError("entries must be reduced mod p")
        if self.kind == "symmetric":
            if any(self.matrix[i][j] != self.matrix[j][i]
                   for i in range(n) for j in range(n)):
                raise ValueError("symmetric form requires M == M^T")
        elif self.kind == "alternating":
            if any(self.matrix[i][i] for i in range(n)):
                raise ValueError("alternating form requires zero diagonal")
            if any(self.matrix[i][j] != (-self.matrix[j][i]) % self.p
                   for i in range(n) for j in range(n)):
                raise ValueError("alternating form requires a skew matrix")
        else:
            raise ValueError(f"unknown form kind {self.kind!r}")

    @property
    def n(self) -> int:
        return len(self.matrix)

    def evaluate(self, u, v) -> int:
        total = 0
        for ui, row in zip(u, self.matrix):
            if ui:
                total += ui * sum(x * vj for x, vj in zip(row, v))
        return total % self.p

    def perp(self, u: Subspace) -> Subspace:
        """The orthogonal complement {v : xi(b, v) = 0 for b in U}."""
        rows = tuple(tuple(self.evaluate_row(b, j) for j in range(self.n))
                     for b in u.basis)
        basis = nullspace(rows, self.n, self.p)
        return Subspace.from_vectors(basis, self.n, self.p)

    def evaluate_row(self, u, j: int) -> int:
        return sum(ui * self.matrix[i][j] for i, ui in enumerate(u)) % self.p

    def radical(self) -> Subspace:
        return self.perp(Subspace.full(self.n, self.p))

    @property
    def nondegenerate(self) -> bool:
        return self.radical().dim == 0

    def is_totally_isotropic(self, u: Subspace) -> bool:
        rows = u.basis
        for i, a in enumerate(rows):
            for b in rows[i:]:
                if self.evaluate(a, b):
                    return False
        return True


def symplectic_form(n: int, p: int) -> BilinearForm:
    """The standard nondegenerate alternating form on GF(p)^n (n even)."""
    if n % 2:
        raise InvalidDimension("symplectic form needs even dimension")
    m = n // 2
    rows = [[0] * n for _ in range(n)]
    for i in range(m):
        rows[i][m + i] = 1
        rows[m + i][i] = (-1) % p
    return BilinearForm(tuple(tuple(r) for r in rows), p, "alternating")


def diagonal_form(entries, p: int) -> BilinearForm:
    n = len(entries)
    rows = [[0] * n for _ in range(n)]
    for i, e in enumerate(entries):
        rows[i][i] = e % p
    return BilinearForm(tuple(tuple(r) for r in rows), p, "symmetric")


def reflexive_form(matrix, p: int) -> BilinearForm:
    """Wrap a user matrix, inferring the reflexive kind or failing."""
    m = tuple(tuple(int(x) % p for x in row) for row in matrix)
    n = len(m)
    if all(m[i][j] == m[j][i] for i in range(n) for j in range(n)):
        return BilinearForm(m, p, "symmetric")
    if (all(m[i][i] == 0 for i in range(n))
            and all(m[i][j] == (-m[j][i]) % p for i in range(n) for j in range(n))):
        return BilinearForm(m, p, "alternating")
    raise ValueError("matrix is neither symmetric nor alternating")


# ----------------------------------------------------------------------
# Segment-wise alternating multilinear forms


@dataclass(frozen=True, eq=False)
class MultiForm:
    """A segment-wise alternating multilinear form.

    The form takes ``arities[i]`` vectors from GF(p)^{dims[i]} in segment
    ``i`` and is alternating within each segment.  It is stored sparsely
    through its coefficient tensor: the key ``(A_1, ..., A_n)`` (each
    ``A_i`` a sorted ``arities[i]``-tuple of coordinate indices) holds the
    value on the corresponding tuple of basis vectors; absent keys are 0.
    Evaluation contracts the tensor with per-segment Grassmann coordinates.
    """

    segment_dims: tuple[int, ...]
    segment_arities: tuple[int, ...]
    p: int
    coefficients: dict

    def __post_init__(self):
        if len(self.segment_dims) != len(self.segment_arities):
            raise ShapeMismatch("dims and arities differ in length")
        for d, k in zip(self.segment_dims, self.segment_arities):
            if not (1 <= k <= d):
                raise InvalidDimension(f"arity {k} invalid for dimension {d}")
        clean = {}
        for key, value in self.coefficients.items():
            if len(key) != len(self.segment_dims):
                raise ShapeMismatch("coefficient key has wrong segment count")
            norm_key = []
            for a, d, k in zip(key, self.segment_dims, self.segment_arities):
                a = tuple(a)
                if len(a) != k or any(not (0 <= x < d) for x in a) \
                        or any(a[i] >= a[i + 1] for i in range(len(a) - 1)):
                    raise ShapeMismatch(f"bad index set {a} for segment")
                norm_key.append(a)
            v = int(value) % self.p
            if v:
                clean[tuple(norm_key)] = v
        object.__setattr__(self, "coefficients", dict(sorted(clean.items())))

    def __eq__(self, other):
        if not isinstance(other, MultiForm):
            return NotImplemented
        return (self.segment_dims == other.segment_dims
                and self.segment_arities == other.segment_arities
                and self.p == other.p
                and self.coefficients == other.coefficients)

    @property
    def num_segments(self) -> int:
        return len(self.segment_dims)

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    @classmethod
    def zero(cls, dims, arities, p) -> "MultiForm":
        return cls(tuple(dims), tuple(arities), p, {})

    @classmethod
    def from_matrix(cls, matrix, p: int) -> "MultiForm":
        """Bilinear form (two arity-1 segments) from a coefficient matrix."""
        n1 = len(matrix)
        n2 = len(matrix[0]) if n1 else 0
        coeffs = {((i,), (j,)): matrix[i][j]
                  for i in range(n1) for j in range(n2) if matrix[i][j] % p}
        return cls((n1, n2), (1, 1), p, coeffs)

    @classmethod
    def from_alternating_matrix(cls, matrix, p: int) -> "MultiForm":
        """Alternating 2-linear form (one arity-2 segment) from a skew matrix."""
        n = len(matrix)
        coeffs = {}
        for i in range(n):
            if matrix[i][i] % p:
                raise ValueError("alternating form requires zero diagonal")
            for j in range(i + 1, n):
                if (matrix[i][j] + matrix[j][i]) % p:
                    raise ValueError("matrix is not skew")
                if matrix[i][j] % p:
                    coeffs[((i, j),)] = matrix[i][j]
        return cls((n,), (2,), p, coeffs)


def _segment_minors(vectors, dim: int, p: int) -> dict:
    subsets = itertools.combinations(range(dim), len(vectors))
    return dict(zip(subsets, wedge_coords(vectors, dim, p)))


def _check_segments(mu: MultiForm, segments):
    if len(segments) != mu.num_segments:
        raise ShapeMismatch("wrong number of segments")
    for seg, d, k in zip(segments, mu.segment_dims, mu.segment_arities):
        if len(seg) != k:
            raise ShapeMismatch("segment has wrong number of vectors")
        for v in seg:
            if len(v) != d:
                raise ShapeMismatch("vector width differs from segment dimension")


def eval_multiform(mu: MultiForm, segments) -> int:
    """Evaluate the form on one tuple of vectors per segment slot.

    By construction the value is multilinear in every vector slot,
    alternating within each segment, and 0 whenever some segment is
    linearly dependent.
    """
    _check_segments(mu, segments)
    minors = [_segment_minors(tuple(tuple(int(x) % mu.p for x in v) for v in seg), d, mu.p)
              for seg, d in zip(segments, mu.segment_dims)]
    total = 0
    for key, c in mu.coefficients.items():
        prod = c
        for i, a in enumerate(key):
            m = minors[i][a]
            if not m:
                prod = 0
                break
            prod *= m
        total += prod
    return total % mu.p


def segment_restriction(mu: MultiForm, u, i: int) -> MultiForm:
    """The form obtained by plugging ``u``'s vectors into every segment
    except the i-th, as a single-segment MultiForm on V_i.

    Entries of ``u`` at position ``i`` are ignored (may be None).
    """
    if not (0 <= i < mu.num_segments):
        raise IndexError(f"segment index {i} out of range")
    if len(u) != mu.num_segments:
        raise ShapeMismatch("wrong number of segments")
    minors = []
    for j, (d, k) in enumerate(zip(mu.segment_dims, mu.segment_arities)):
        if j == i:
            minors.append(None)
            continue
        seg = tuple(tuple(int(x) % mu.p for x in v) for v in u[j])
        if len(seg) != k or any(len(v) != d for v in seg):
            raise ShapeMismatch("segment has wrong shape")
        minors.append(_segment_minors(seg, d, mu.p))
    coeffs: dict = {}
    for key, c in mu.coefficients.items():
        prod = c
        for j, a in enumerate(key):
            if j == i:
                continue
            m = minors[j][a]
            if not m:
                prod = 0
                break
            prod *= m
        if prod % mu.p:
            key_i = (key[i],)
            coeffs[key_i] = (coeffs.get(key_i, 0) + prod) % mu.p
    return MultiForm((mu.segment_dims[i],), (mu.segment_arities[i],), mu.p,
                     {k: v for k, v in coeffs.items() if v})


def _other_segment_assignments(mu: MultiForm, i: int):
    """Tuples of canonical bases for every segment except i.

    Scaling or changing a segment basis multiplies the restricted form by
    a nonzero scalar, so canonical RREF bases of subspaces suffice for
    the vanishing questions below.
    """
    pools = []
    for j, (d, k) in enumerate(zip(mu.segment_dims, mu.segment_arities)):
        if j == i:
            pools.append((None,))
        else:
            pools.append(tuple(s.basis for s in enumerate_subspaces(d, k, mu.p)))
    return itertools.product(*pools)


def segment_nonzero(mu: MultiForm, i: int) -> bool:
    """True iff every admissible filling of the other segments leaves a
    nonzero form on segment i."""
    for u in _other_segment_assignments(mu, i):
        if segment_restriction(mu, u, i).is_zero:
            return False
    return True


def segment_nondegenerate(mu: MultiForm, i: int) -> bool:
    """True iff, for every admissible filling of the other segments, any
    independent (k_i - 1)-system in V_i completes to a nonzero value."""
    d, k = mu.segment_dims[i], mu.segment_arities[i]
    p = mu.p
    prefixes = tuple(s.basis for s in enumerate_subspaces(d, k - 1, p))
    unit = [tuple(1 if t == m else 0 for t in range(d)) for m in range(d)]
    for u in _other_segment_assignments(mu, i):
        restricted = segment_restriction(mu, u, i)
        if restricted.is_zero:
            return False
        for prefix in prefixes:
            if not any(eval_multiform(restricted, (prefix + (e,),)) for e in unit):
                return False
    return True


def is_gkz_nondegenerate(mu: MultiForm) -> bool:
    """No assignment of nonzero vectors to all slots kills every
    single-slot replacement; checked over projective representatives."""
    p = mu.p
    slots = [(seg, pos) for seg, k in enumerate(mu.segment_arities) for pos in range(k)]
    reps = [projective_representatives(mu.segment_dims[seg], p) for seg, _ in slots]
    units = [tuple(tuple(1 if t == m else 0 for t in range(mu.segment_dims[seg]))
                   for m in range(mu.segment_dims[seg])) for seg, _ in slots]

    def build_segments(choice):
        segs = [[] for _ in mu.segment_dims]
        for (seg, _pos), v in zip(slots, choice):
            segs[seg].append(v)
        return tuple(tuple(s) for s in segs)

    for choice in itertools.product(*reps):
        if eval_multiform(mu, build_segments(choice)):
            continue
        found = False
        for s, (seg, pos) in enumerate(slots):
            for e in units[s]:
                replaced = list(choice)
                replaced[s] = e
                if eval_multiform(mu, build_segments(replaced)):
                    found = True
                    break
            if found:
                break
        if not found:
            return False
    return True
