"""Constructors turning linear algebra over GF(p) into incidence
structures: projective, Grassmann, polar Grassmann, and affine spaces.

Every point carries its underlying subspace as a label, so downstream
hyperplane constructions can evaluate forms on canonical coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from . import complement, pls
from .errors import EmptyPointSet, InvalidDimension
from .linalg import (
    BilinearForm,
    Subspace,
    diagonal_form,
    enumerate_subspaces,
    reflexive_form,
    symplectic_form,
)
from .pls import IncidenceStructure, ParallelStructure, validate_pls


@dataclass(frozen=True)
class SpaceSpec:
    """Parameters for one constructed space, as used by the CLI."""

    kind: str  # projective | grassmann | polar | polar_grassmann | affine
    p: int
    n: int
    k: int | None = None
    form: BilinearForm | None = None


@lru_cache(maxsize=None)
def projective_space(n: int, p: int) -> IncidenceStructure:
    """Projective space of GF(p)^n: 1-subspaces as points, 2-subspaces as
    lines.  Every line has p + 1 points."""
    if n < 2:
        raise InvalidDimension("projective space needs dimension >= 2")
    return grassmann_space(n, 1, p)


@lru_cache(maxsize=None)
def grassmann_space(n: int, k: int, p: int) -> IncidenceStructure:
    """k-subspaces as points; pencils (all k-subspaces between a fixed
    (k-1)-subspace and a fixed (k+1)-subspace) as lines."""
    if not 1 <= k <= n - 1:
        raise InvalidDimension(f"grade {k} invalid for dimension {n}")
    points = enumerate_subspaces(n, k, p)
    index = {u: i for i, u in enumerate(points)}
    pencils: dict = {}
    below = enumerate_subspaces(n, k - 1, p)
    above = enumerate_subspaces(n, k + 1, p)
    for u in points:
        subs = [h for h in below if u.contains(h)]
        sups = [b for b in above if b.contains(u)]
        for h in subs:
            for b in sups:
                pencils.setdefault((h, b), []).append(index[u])
    lines = sorted(tuple(sorted(members)) for members in pencils.values())
    return IncidenceStructure(len(points), tuple(lines), points)


@lru_cache(maxsize=None)
def polar_grassmann_space(form: BilinearForm, k: int) -> IncidenceStructure:
    """Totally isotropic k-subspaces with isotropic pencils as lines.

    An isotropic pencil is a pencil whose top space is itself isotropic,
    so its members are automatically points.  Points and lines are points
    and lines of the surrounding Grassmann space.
    """
    n, p = form.n, form.p
    if not 1 <= k <= n - 1:
        raise InvalidDimension(f"grade {k} invalid for dimension {n}")
    points = tuple(u for u in enumerate_subspaces(n, k, p)
                   if form.is_totally_isotropic(u))
    if not points:
        raise EmptyPointSet("the form admits no isotropic subspaces of this grade")
    index = {u: i for i, u in enumerate(points)}
    tops = tuple(b for b in enumerate_subspaces(n, k + 1, p)
                 if form.is_totally_isotropic(b))
    below = enumerate_subspaces(n, k - 1, p)
    lines = set()
    for b in tops:
        inside = [u for u in points if b.contains(u)]
        for h in below:
            if not b.contains(h):
                continue
            members = tuple(sorted(index[u] for u in inside if u.contains(h)))
            lines.add(members)
    return validate_pls(len(points), sorted(lines), points)


def affine_reduct(n: int, p: int) -> complement.AffinizedStructure:
    """The projective space of GF(p)^n minus the hyperplane of points with
    vanishing first coordinate, with its natural parallelism."""
    if n < 2:
        raise InvalidDimension("affine space needs dimension >= 2")
    pg = projective_space(n, p)
    removed = [i for i, lab in enumerate(pg.labels) if lab.basis[0][0] == 0]
    return complement.affinize(pg, removed)


@lru_cache(maxsize=None)
def affine_space(n: int, p: int) -> ParallelStructure:
    """Affine space with p^(n-1) points, built by affinizing the
    projective space of GF(p)^n; parallel classes are the directions."""
    return affine_reduct(n, p).carrier


def build_space(spec: SpaceSpec):
    if spec.kind == "projective":
        return projective_space(spec.n, spec.p)
    if spec.kind == "grassmann":
        return grassmann_space(spec.n, spec.k, spec.p)
    if spec.kind in ("polar", "polar_grassmann"):
        form = spec.form or symplectic_form(spec.n, spec.p)
        return polar_grassmann_space(form, spec.k if spec.k is not None else 1)
    if spec.kind == "affine":
        return affine_space(spec.n, spec.p)
    raise ValueError(f"unknown space kind {spec.kind!r}")


def form_from_dict(data: dict, n: int, p: int) -> BilinearForm:
    kind = data.get("type", "symplectic")
    if kind == "symplectic":
        return symplectic_form(n, p)
    if kind == "diagonal":
        return diagonal_form(data["entries"], p)
    if kind == "matrix":
        return reflexive_form(data["matrix"], p)
    raise ValueError(f"unknown form type {kind!r}")


def spec_from_dict(data: dict) -> SpaceSpec:
    kind = data["kind"]
    p, n = int(data["p"]), int(data["n"])
    k = data.get("k")
    form = None
    if "form" in data:
        form = form_from_dict(data["form"], n, p)
    return SpaceSpec(kind, p, n, int(k) if k is not None else None, form)
