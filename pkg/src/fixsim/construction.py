"""From an admissible labeling to a map whose fixed points sit in fully
labeled cells, verified in exact rational arithmetic.

Each grid vertex moves down by tau in its labeled coordinate and up by tau/n
in every other coordinate; the map extends to the whole simplex by convex
combination over each cell's vertices.  On a cell missing some label i the
i-th coordinate gains the constant tau/n (every vertex pushes it up), so
residuals cannot vanish there; on a fully labeled cell the displacement is
zero exactly at the barycenter.  Locating that fixed point therefore locates a fully labeled
cell — and the floating-point solver, run on the same map, must land next to
one.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NoFixedPointFound, RoundTripMismatch, TauTooLarge
from .labeling import check_admissible, is_fully_labeled
from .simplex import BarycentricPoint, locate_batch
from .sperner import find_fully_labeled


class VertexMap:
    """Vertex images of the labeling-induced displacement map, all exact."""

    def __init__(self, grid, labeling, tau, images):
        self.grid = grid
        self.labeling = labeling
        self.tau = tau
        self.images = images
        self._images_float = None

    @property
    def images_float(self):
        if self._images_float is None:
            self._images_float = np.asarray(
                [[float(c) for c in img] for img in self.images], dtype=np.float64
            )
        return self._images_float

    @property
    def lipschitz(self):
        """Max-norm Lipschitz bound of the extended map: piecewise affine."""
        n, m = self.grid.n, self.grid.m
        return 1.0 + (1.0 + 1.0 / n) * float(self.tau) * m


def min_labeled_coordinate(grid, labeling):
    """Min over vertices of the embedded coordinate the label points at."""
    picked = grid.vertex_coords[
        np.arange(grid.num_vertices), labeling.labels
    ]
    return Fraction(int(picked.min()), grid.m)


def build_vertex_map(grid, labeling, tau=None):
    """Vertex images: down tau at the labeled coordinate, up tau/n elsewhere.

    tau defaults to half the smallest labeled coordinate; it must stay
    strictly below that minimum so every image remains on the simplex.
    """
    violations = check_admissible(grid, labeling)
    if violations:
        _raise_inadmissible(violations)
    bound = min_labeled_coordinate(grid, labeling)
    if tau is None:
        tau = bound / 2
    else:
        tau = Fraction(tau)
    if not 0 < tau < bound:
        raise TauTooLarge(
            f"tau={tau} must lie strictly between 0 and the smallest labeled "
            f"coordinate {bound}"
        )
    n, m = grid.n, grid.m
    step = tau / n
    images = []
    for i in range(grid.num_vertices):
        coords = grid.vertex_coords[i]
        label = int(labeling.labels[i])
        img = [Fraction(int(c), m) + step for c in coords]
        img[label] = Fraction(int(coords[label]), m) - tau
        assert img[label] > 0 and sum(img) == 1
        images.append(tuple(img))
    return VertexMap(grid, labeling, tau, tuple(images))


def _raise_inadmissible(violations):
    from .errors import InvalidInput

    first = violations[0]
    raise InvalidInput(
        f"labeling is not admissible: vertex {first.int_coords} labeled "
        f"{first.label} ({first.reason}); {len(violations)} violations total"
    )


def eval_constructed(vm, point):
    """Evaluate the extended map at a point; exact iff the point is exact."""
    if getattr(point, "exact", False):
        cell, weights = vm.grid.locate_cell(point)
        out = [Fraction(0)] * (vm.grid.n + 1)
        for w, vid in zip(weights, cell.vertex_ids):
            img = vm.images[vid]
            for j in range(vm.grid.n + 1):
                out[j] += w * img[j]
        return BarycentricPoint(tuple(out), exact=True)
    coords = point.coords if isinstance(point, BarycentricPoint) else point
    row = eval_constructed_batch(vm, np.asarray([coords], dtype=np.float64))[0]
    return BarycentricPoint(tuple(float(c) for c in row))


def eval_constructed_batch(vm, points):
    """Vectorized float evaluation for (B, n+1) rows."""
    grid = vm.grid
    lam, verts = locate_batch(grid.n, grid.m, points)
    ids = grid.vertex_ids(verts)
    return np.einsum("bt,btj->bj", lam, vm.images_float[ids])


def constructed_map(vm):
    """Wrap a VertexMap as a MapSpec for the floating-point solver."""
    from .mapspec import MapSpec

    return MapSpec(
        n=vm.grid.n,
        kind="constructed",
        vertex_map=vm,
        lipschitz=vm.lipschitz,
        source=f"constructed m={vm.grid.m} tau={vm.tau}",
    )


@dataclass(frozen=True)
class CoordinateDisplacement:
    """How coordinate `coord` moves on one cell: f_coord(z) - z_coord as an
    affine function sum_t coeffs[t] * lambda_t of the cell weights."""

    coord: int
    positions: tuple  # canonical vertex positions carrying this label
    kind: str  # "absent" | "single" | "multiple"
    constant: Fraction  # set iff kind == "absent": (1 + 1/n) * tau everywhere
    coeffs: tuple


def displacement_on_cell(vm, cell):
    """Per-coordinate displacement description on one cell.

    Labels absent from the cell displace by the constant tau/n (every
    vertex pushes that coordinate up by tau/n); labels carried once displace
    by ((1/n) * sum of the other weights minus the carrying weight) * tau.
    Multi-carried labels get the same affine form, flagged "multiple" (no
    constant-sign guarantee).
    """
    n = vm.grid.n
    tau = vm.tau
    ids = (
        cell.vertex_ids
        if cell.vertex_ids is not None
        else tuple(int(i) for i in vm.grid.vertex_ids(np.asarray(cell.int_coords)))
    )
    labels = [int(vm.labeling.labels[i]) for i in ids]
    reports = []
    for coord in range(n + 1):
        positions = tuple(t for t, l in enumerate(labels) if l == coord)
        coeffs = tuple(
            -tau if t in positions else tau / n for t in range(n + 1)
        )
        if not positions:
            kind, constant = "absent", tau / n
        elif len(positions) == 1:
            kind, constant = "single", None
        else:
            kind, constant = "multiple", None
        reports.append(
            CoordinateDisplacement(coord, positions, kind, constant, coeffs)
        )
    return reports


def fixed_point_of_construction(vm):
    """Barycenter of a fully labeled cell, verified exactly: f(z) = z."""
    try:
        cell = find_fully_labeled(vm.grid, vm.labeling, strategy="exhaustive")
    except Exception as exc:
        raise NoFixedPointFound(f"no fully labeled cell found: {exc}") from exc
    z = cell.barycenter(exact=True)
    fz = eval_constructed(vm, z)
    if fz.coords != z.coords:
        raise NoFixedPointFound(
            f"exact verification failed: f({z.coords}) = {fz.coords}"
        )
    return z, cell


@dataclass(frozen=True)
class RoundTripReport:
    tau: Fraction
    exact_point: BarycentricPoint
    exact_cell: object
    solver_point: BarycentricPoint
    solver_residual: float
    solver_cell: object
    solver_cell_fully_labeled: bool
    neighbor_cell: object

    def to_json_dict(self):
        final = self.neighbor_cell or self.solver_cell
        return {
            "tau": str(self.tau),
            "fixedPoint": [str(c) for c in self.exact_point.coords],
            "cell": [int(i) for i in self.exact_cell.vertex_ids],
            "exact": True,
            "solver": {
                "point": [float(c) for c in self.solver_point.coords],
                "residual": self.solver_residual,
                "cell": [int(i) for i in final.vertex_ids],
                "landedDirectly": self.solver_cell_fully_labeled,
            },
        }


def roundtrip_check(grid, labeling, tau=None, tol=1e-6, seed=0, budget=None):
    """Cross-validate the two routes from labeling to fixed point.

    Exact route: barycenter of a fully labeled cell with f(z) = z in rational
    arithmetic.  Float route: the refinement solver on the same map must land
    in a fully labeled cell or next to one (sharing a vertex).
    """
    from .fixedpoint import refine_fixed_point

    vm = build_vertex_map(grid, labeling, tau)
    exact_point, exact_cell = fixed_point_of_construction(vm)
    result = refine_fixed_point(
        constructed_map(vm), tol=tol, seed=seed, budget=budget
    )
    if result.status != "converged":
        raise RoundTripMismatch(
            f"solver reported {result.status} on the constructed map; "
            f"witness={result.witness}"
        )
    located, _ = grid.locate_cell(result.point)
    neighbor = None
    if not is_fully_labeled(located, labeling):
        shares = np.isin(grid.cells, located.vertex_ids).any(axis=1)
        for ci in np.flatnonzero(shares):
            candidate = grid.cell(int(ci))
            if is_fully_labeled(candidate, labeling):
                neighbor = candidate
                break
        else:
            raise RoundTripMismatch(
                f"solver point {result.point.coords} (residual "
                f"{result.residual}) is not within one lattice step of a "
                "fully labeled cell"
            )
    return RoundTripReport(
        tau=vm.tau,
        exact_point=exact_point,
        exact_cell=exact_cell,
        solver_point=result.point,
        solver_residual=result.residual,
        solver_cell=located,
        solver_cell_fully_labeled=neighbor is None,
        neighbor_cell=neighbor,
    )
