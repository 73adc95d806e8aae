"""Spectral local controllability over the projected simplex.

Each flag J turns the spectrum flow into an affine tangent field
v_J(x) = b_J + A_J x.  A point x is spectrally locally controllable (SLC)
when 0 lies in the interior of the convex hull of the available tangent
vectors: any spectral direction can then be realized by switching between
flags.  Because the hull of finitely many points is the union of the
simplices spanned by its n-point subsets, membership is decided by
exhaustive barycentric solves over n-subsets; no optimizer is involved.

The distinguished flags at the maximally mixed state are the eigenframe of

    A_iota = sum_k [L_k, L_k^dag]

together with its n! column permutations.  At iota every flag's tangent
vector is the frame diagonal of A_iota / n, so the permuted eigenframes
realize the extreme points Gamma/n (majorization: all realizable diagonals
lie in the permutohedron of the spectrum of A_iota).

Where 0 crosses the hull boundary, the balancing weights s solve
(sum s_J A_J) x = -sum s_J b_J; running that map over the facets of the
weight simplex for every (n-1)-subset of invertible flags sweeps out every
candidate boundary patch: C(6,2) = 15 arcs for the 6 iota-flags at n = 3,
C(24,3) = 2024 surfaces at n = 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from .core import LindbladSystem, dagger, decompose_hermitian, hermitize
from .errors import (
    DimensionMismatchError,
    SingularCombinationError,
    TooFewFlagsError,
    ValidationError,
)
from .orbit import AffineField, Flag, OmegaMatrix, compute_w, project_field
from .simplex import ProjectionMap, barycentric_lattice, build_projection

MEMBERSHIP_TOL = 1e-7
DET_RTOL = 1e-12
AFFINE_INDEPENDENCE_TOL = 1e-12

INTERIOR, BOUNDARY, EXTERIOR = 1, 0, -1
CATEGORY_NAMES = {INTERIOR: "interior", BOUNDARY: "boundary", EXTERIOR: "exterior"}


# -- iota flags ---------------------------------------------------------------


@dataclass(frozen=True)
class IotaFlagSet:
    """Eigenframe of A_iota and its column permutations.

    ``gamma`` holds the eigenvalues of A_iota aligned with the base frame
    columns (non-increasing); ``perms`` lists the permutations in
    lexicographic order and ``flags[i]`` has slot j carrying base column
    perms[i][j].
    """

    a_iota: np.ndarray
    base: Flag
    gamma: np.ndarray
    perms: tuple
    flags: tuple


def compute_a_iota(sys: LindbladSystem) -> np.ndarray:
    """A_iota = sum_k [L_k, L_k^dag]; Hermitian and traceless.

    Zero for a system with no dissipation, in which case the distinguished
    frame degenerates to the identity and every spectral tangent vanishes.
    """
    out = np.zeros((sys.dim, sys.dim), dtype=complex)
    for op in sys.lindblad_ops:
        opd = dagger(op)
        out += op @ opd - opd @ op
    return hermitize(out)


def iota_flag_set(sys: LindbladSystem) -> IotaFlagSet:
    a = compute_a_iota(sys)
    dec = decompose_hermitian(a, crossing_tol=0.0)
    base = Flag(dec.frame)
    perms = tuple(permutations(range(sys.dim)))
    flags = tuple(base.permuted(p) for p in perms)
    return IotaFlagSet(a_iota=a, base=base, gamma=dec.lam, perms=perms, flags=flags)


def tangent_set_at_iota(iota_set: IotaFlagSet) -> np.ndarray:
    """Spectral velocities at the maximally mixed state, one row per flag:
    row i equals gamma[perms[i]] / n."""
    n = iota_set.gamma.shape[0]
    return np.array([iota_set.gamma[list(p)] / n for p in iota_set.perms])


# -- field sets ---------------------------------------------------------------


@dataclass(frozen=True)
class FlagFieldSet:
    """Affine tangent fields of a family of flags, with invertibility and
    duplicate bookkeeping.

    ``unique_index`` lists the first occurrence of each distinct field
    (fingerprinted to 9 decimals); duplicates contribute nothing to hulls
    or boundary patches and are skipped when ``dedup`` is requested.
    """

    dim: int
    flags: tuple
    fields: tuple
    dets: np.ndarray
    invertible: np.ndarray
    unique_index: tuple
    pmap: ProjectionMap

    @property
    def num_flags(self) -> int:
        return len(self.fields)

    def usable(self, dedup: bool = True):
        """Indices eligible for B maps: invertible, optionally deduplicated."""
        idx = self.unique_index if dedup else range(self.num_flags)
        return [i for i in idx if self.invertible[i]]

    def members(self, dedup: bool = True):
        """Indices whose tangent vectors enter hull membership."""
        return list(self.unique_index) if dedup else list(range(self.num_flags))

    def tangent_vectors(self, x: np.ndarray, indices) -> np.ndarray:
        v = np.asarray(x, dtype=float)
        return np.array([self.fields[i].b + self.fields[i].a @ v for i in indices])

    def all_zero(self) -> bool:
        return all(
            float(np.abs(f.b).max(initial=0.0) + np.abs(f.a).max(initial=0.0)) == 0.0
            for f in self.fields
        )

    def field_scale(self) -> float:
        """Magnitude scale of the tangent fields over the simplex; used to
        make degeneracy thresholds independent of which points are batched
        together."""
        scale = 0.0
        for f in self.fields:
            scale = max(scale, float(np.abs(f.b).max(initial=0.0)), float(np.abs(f.a).max(initial=0.0)))
        return max(scale, 1e-300)


def _fingerprint(field: AffineField) -> bytes:
    data = np.concatenate([field.b.ravel(), field.a.ravel()])
    rounded = np.round(data, 9) + 0.0  # normalize -0.0
    return rounded.tobytes()


def build_field_set(sys: LindbladSystem, flags, pmap: ProjectionMap | None = None) -> FlagFieldSet:
    """Project every flag's rate matrix to an affine field and classify it.

    A field is invertible when |det A| > 1e-12 ||A||_F^(n-1); only invertible
    fields can pin the balance point of a weight combination.
    """
    flags = tuple(flags)
    if not flags:
        raise TooFewFlagsError("no flags given")
    pmap = pmap or build_projection(sys.dim)
    fields = []
    dets = []
    invertible = []
    for flag in flags:
        om: OmegaMatrix = compute_w(sys, flag)
        field = project_field(pmap, om)
        det = float(np.linalg.det(field.a))
        norm = float(np.linalg.norm(field.a))
        fields.append(field)
        dets.append(det)
        invertible.append(abs(det) > DET_RTOL * max(norm, 1e-30) ** (sys.dim - 1))
    seen = {}
    unique = []
    for i, f in enumerate(fields):
        key = _fingerprint(f)
        if key not in seen:
            seen[key] = i
            unique.append(i)
    return FlagFieldSet(
        dim=sys.dim,
        flags=flags,
        fields=tuple(fields),
        dets=np.asarray(dets),
        invertible=np.asarray(invertible, dtype=bool),
        unique_index=tuple(unique),
        pmap=pmap,
    )


def b_map(fset: FlagFieldSet, subset, s) -> np.ndarray:
    """Balance point of weighted fields: solves (sum s_J A_J) x = -sum s_J b_J.

    ``subset`` indexes flags, ``s`` are the barycentric weights (summing to
    one, non-negative).  Uses a linear solve, never an explicit inverse.
    """
    subset = list(subset)
    weights = np.asarray(s, dtype=float)
    if weights.shape != (len(subset),):
        raise DimensionMismatchError(f"{len(subset)} weights needed, got {weights.shape}")
    if abs(weights.sum() - 1.0) > 1e-9 or weights.min() < -1e-12:
        raise ValidationError(f"weights must be barycentric, got {weights}")
    for i in subset:
        if not fset.invertible[i]:
            raise ValidationError(f"flag {i} has a singular field; not usable in B maps")
    a = sum(w * fset.fields[i].a for w, i in zip(weights, subset))
    b = sum(w * fset.fields[i].b for w, i in zip(weights, subset))
    try:
        x = np.linalg.solve(a, -b)
    except np.linalg.LinAlgError as exc:
        raise SingularCombinationError(f"singular combination at s={weights}") from exc
    residual = float(np.linalg.norm(a @ x + b))
    scale = max(1.0, float(np.linalg.norm(b)))
    if residual > 1e-8 * scale:
        raise SingularCombinationError(
            f"combination at s={weights} numerically singular (residual {residual:.3e})"
        )
    return x


# -- candidate boundaries ------------------------------------------------------


@dataclass(frozen=True)
class BoundaryPatch:
    """Image of the B map over the weight simplex of one (n-1)-subset.

    For n = 3 this is an arc traced over pair weights (s, 1 - s); for n = 4
    a surface over a barycentric triangle.  ``residuals`` report
    || sum s_J v_J(x) || at each sample; by construction they sit at solver
    precision, and they are recorded so downstream checks need not trust
    the construction.
    """

    subset: tuple
    weights: np.ndarray
    points: np.ndarray
    residuals: np.ndarray


def _facet_weights(k: int, samples_per_edge: int) -> np.ndarray:
    """Barycentric sample weights for a (k-1)-simplex with the given number
    of points per edge (endpoints included)."""
    m = samples_per_edge
    if k == 2:
        t = np.linspace(0.0, 1.0, m)
        return np.column_stack([1.0 - t, t])
    grid = []
    for comp in combinations(range(m + k - 2), k - 1):
        prev = -1
        parts = []
        for c in comp:
            parts.append(c - prev - 1)
            prev = c
        parts.append(m + k - 3 - prev)
        grid.append(parts)
    return np.asarray(grid, dtype=float) / float(m - 1)


def boundary_candidates(
    fset: FlagFieldSet,
    samples_per_facet: int | None = None,
    dedup: bool = True,
):
    """All candidate boundary patches: B over every (n-1)-subset of usable
    flags.

    The boundary of the reachable balance set is contained in the images of
    the weight-simplex facets, and every facet is the full weight simplex of
    an (n-1)-subset, so enumerating those subsets enumerates every candidate
    patch exactly once.  Arc endpoints (n = 3) are the fixed points
    -A_J^{-1} b_J of the participating flags.
    """
    n = fset.dim
    usable = fset.usable(dedup=dedup)
    if len(usable) < n:
        raise TooFewFlagsError(
            f"need at least {n} invertible flags, have {len(usable)}"
        )
    if samples_per_facet is None:
        samples_per_facet = 200 if n == 3 else 15
    patches = []
    for subset in combinations(usable, n - 1):
        weights = _facet_weights(n - 1, samples_per_facet)
        a_stack = np.stack([fset.fields[i].a for i in subset])
        b_stack = np.stack([fset.fields[i].b for i in subset])
        a_comb = np.einsum("sk,kij->sij", weights, a_stack)
        b_comb = weights @ b_stack
        try:
            # keep an explicit vector axis: a 2-D rhs would be read as one
            # matrix rather than a stack of vectors
            points = np.linalg.solve(a_comb, -b_comb[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError as exc:
            raise SingularCombinationError(
                f"singular weight combination on subset {subset}"
            ) from exc
        residuals = np.linalg.norm(
            np.einsum("sij,sj->si", a_comb, points) + b_comb, axis=1
        )
        patches.append(
            BoundaryPatch(
                subset=tuple(subset),
                weights=weights,
                points=points,
                residuals=residuals,
            )
        )
    return patches


# -- membership ----------------------------------------------------------------


@dataclass(frozen=True)
class MembershipResult:
    category: str
    code: int
    margin: float
    witness_subset: tuple | None
    witness_weights: np.ndarray | None
    note: str = ""


def classify_points(
    fset: FlagFieldSet,
    xs: np.ndarray,
    tol: float = MEMBERSHIP_TOL,
    dedup: bool = True,
):
    """Classify hyperplane points against the tangent-vector hulls.

    Returns (codes, margins, best_subsets): codes are +1 interior, 0
    boundary, -1 exterior; margins are the best (largest) minimal
    barycentric coordinate over all affinely independent n-subsets, so
    margin > tol means 0 is strictly inside some tangent simplex and
    margin < -tol means 0 is strictly outside all of them.

    Entirely zero field sets short-circuit to exterior (nothing can move,
    so no interior exists anywhere); a point where some tangent vectors
    vanish but the fields are not all zero can still classify boundary
    through its margin.
    """
    pts = np.atleast_2d(np.asarray(xs, dtype=float))
    m = pts.shape[0]
    n = fset.dim
    members = fset.members(dedup=dedup)
    codes = np.full(m, EXTERIOR, dtype=np.int8)
    margins = np.full(m, -np.inf)
    best_subsets = np.full(m, -1, dtype=np.int64)
    if fset.all_zero() or len(members) < n:
        return codes, margins, best_subsets

    # tangent vectors for every member flag at every point: (m, F, n-1)
    b_all = np.stack([fset.fields[i].b for i in members])
    a_all = np.stack([fset.fields[i].a for i in members])
    v_all = b_all[None, :, :] + np.einsum("fij,mj->mfi", a_all, pts)
    scale = max(1.0, fset.field_scale())

    subsets = list(combinations(range(len(members)), n))
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    active = np.arange(m)
    v_act = v_all
    best_margin = np.full(m, -np.inf)
    seen_valid = np.zeros(m, dtype=bool)
    for si, sub in enumerate(subsets):
        mats = np.empty((v_act.shape[0], n, n))
        mats[:, :-1, :] = np.transpose(v_act[:, sub, :], (0, 2, 1))
        mats[:, -1, :] = 1.0
        dets = np.linalg.det(mats)
        good = np.abs(dets) > AFFINE_INDEPENDENCE_TOL * scale ** (n - 1)
        if not np.any(good):
            continue
        safe = np.where(good[:, None, None], mats, np.eye(n)[None, :, :])
        sols = np.linalg.solve(safe, rhs)
        mins = sols.min(axis=1)
        mins = np.where(good, mins, -np.inf)
        improved = mins > best_margin[active]
        best_margin[active[improved]] = mins[improved]
        best_subsets[active[improved]] = si
        seen_valid[active[good]] = True
        # drop points already certified interior from further scans
        done = best_margin[active] > tol
        if np.any(done) and si < len(subsets) - 1:
            keep = ~done
            active = active[keep]
            if active.shape[0] == 0:
                break
            v_act = v_all[active]

    margins = best_margin
    codes = np.where(
        margins > tol, INTERIOR, np.where(margins < -tol, EXTERIOR, BOUNDARY)
    ).astype(np.int8)
    # points where no subset was affinely independent: hull has empty
    # interior; a vanishing tangent vector still pins 0 to the hull
    degenerate = ~seen_valid
    if np.any(degenerate):
        vmin = np.linalg.norm(v_all, axis=2).min(axis=1)
        codes[degenerate] = np.where(
            vmin[degenerate] <= tol * scale, BOUNDARY, EXTERIOR
        )
        margins[degenerate] = np.where(codes[degenerate] == BOUNDARY, 0.0, -np.inf)
    return codes, margins, best_subsets


def slc_membership(
    fset: FlagFieldSet,
    x,
    tol: float = MEMBERSHIP_TOL,
    dedup: bool = True,
) -> MembershipResult:
    """Classify one point; interior results carry a witness subset and its
    barycentric weights."""
    members = fset.members(dedup=dedup)
    n = fset.dim
    if fset.all_zero():
        return MembershipResult(
            category="exterior", code=EXTERIOR, margin=-math.inf,
            witness_subset=None, witness_weights=None,
            note="all fields vanish: empty hull, nothing is controllable",
        )
    if len(members) < n:
        raise TooFewFlagsError(f"membership needs >= {n} distinct flags, have {len(members)}")
    codes, margins, best = classify_points(fset, np.asarray(x, dtype=float)[None, :], tol, dedup)
    code = int(codes[0])
    margin = float(margins[0])
    witness_subset = None
    witness_weights = None
    if code == INTERIOR and best[0] >= 0:
        subsets = list(combinations(range(len(members)), n))
        local = subsets[int(best[0])]
        witness_subset = tuple(members[i] for i in local)
        v = fset.tangent_vectors(np.asarray(x, dtype=float), witness_subset)
        mat = np.vstack([v.T, np.ones(n)])
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        witness_weights = np.linalg.solve(mat, rhs)
    return MembershipResult(
        category=CATEGORY_NAMES[code],
        code=code,
        margin=margin,
        witness_subset=witness_subset,
        witness_weights=witness_weights,
    )


# -- rasterization --------------------------------------------------------------


@dataclass(frozen=True)
class SLCRegion:
    """Classified spectral grid plus the candidate boundary patches."""

    resolution: int
    tol: float
    lambdas: np.ndarray
    xs: np.ndarray
    codes: np.ndarray
    margins: np.ndarray
    patches: tuple
    metadata: dict

    def counts(self) -> dict:
        return {
            name: int(np.sum(self.codes == code))
            for code, name in CATEGORY_NAMES.items()
        }


def rasterize_region(
    fset: FlagFieldSet,
    resolution: int = 64,
    tol: float = MEMBERSHIP_TOL,
    samples_per_facet: int | None = None,
    dedup: bool = True,
    include_boundaries: bool = True,
    chunk: int = 4096,
    threads: int = 1,
) -> SLCRegion:
    """Classify the full barycentric lattice of the simplex at the given
    resolution and attach the candidate boundary patches.

    ``threads`` parallelizes the chunked classification.  Chunk boundaries
    are fixed by ``chunk`` alone and each chunk's result is independent of
    where it sits, so the output is identical for any thread count.
    """
    if resolution < 16:
        raise ValidationError(f"resolution must be >= 16, got {resolution}")
    n = fset.dim
    lams = barycentric_lattice(n, resolution)
    xs = fset.pmap.project_many(lams)
    codes = np.empty(xs.shape[0], dtype=np.int8)
    margins = np.empty(xs.shape[0])
    starts = list(range(0, xs.shape[0], chunk))

    def run_chunk(start: int):
        sl = slice(start, min(start + chunk, xs.shape[0]))
        c, g, _ = classify_points(fset, xs[sl], tol, dedup)
        return sl, c, g

    if threads > 1 and len(starts) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for sl, c, g in pool.map(run_chunk, starts):
                codes[sl], margins[sl] = c, g
    else:
        for start in starts:
            sl, c, g = run_chunk(start)
            codes[sl], margins[sl] = c, g
    patches = ()
    if include_boundaries:
        try:
            patches = tuple(
                boundary_candidates(fset, samples_per_facet=samples_per_facet, dedup=dedup)
            )
        except TooFewFlagsError:
            patches = ()
    meta = {
        "num_flags": fset.num_flags,
        "num_distinct_fields": len(fset.unique_index),
        "num_invertible": int(fset.invertible.sum()),
        "dedup": dedup,
        "tol": tol,
        "num_patches": len(patches),
    }
    return SLCRegion(
        resolution=resolution,
        tol=tol,
        lambdas=lams,
        xs=xs,
        codes=codes,
        margins=margins,
        patches=patches,
        metadata=meta,
    )
