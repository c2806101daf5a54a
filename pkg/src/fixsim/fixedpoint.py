"""Approximate fixed points and the refinement loop with its pair diagnostic.

A fully labeled cell of an m-fold grid pins an approximate fixed point: with
cell diameter d = 1/m, every point of the cell has residual at most
n * (d + variation(d)), where variation(d) bounds how much the map can move
over distance d.  Choosing m from that bound and returning the best vertex of
a fully labeled cell realizes any requested residual.

The refinement loop halves the target residual each level; it declares
convergence when consecutive iterates agree to tolerance, and reports a
non-contraction witness when two far-apart points both carry residuals below
a configured floor — the constructive dichotomy between a Cauchy iterate
sequence and an explicit failure of the pair condition.

Grids beyond the exhaustive-scan limit are never materialized: the solver
locates the previous iterate and scans a lattice box around it for a fully
labeled cell (vectorized), falling back to a lazy door-to-door walk from the
boundary.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    EmptyPairSet,
    ModulusRangeError,
    ResourceLimit,
    SearchExhausted,
)
from .labeling import (
    Labeling,
    batch_eval,
    check_map_range,
    induced_labels_from_values,
)
from .simplex import (
    BarycentricPoint,
    GridCell,
    cell_budget,
    encode_cell,
    locate_lattice,
    max_norm_dist,
    path_vertices,
    pivot_cell,
    subdivide,
)
from .sperner import fully_labeled_indices

EXHAUSTIVE_LIMIT = 10**6
_HINTED_LIMIT = 20_000
_BOX_VERTEX_CAP = 2_000_000
_WALK_STEP_CAP = 4_000_000
_PROBE_SAMPLES = 192
_GRID_CACHE_CELLS = 2_000_000
_grid_cache = {}


# ---------------------------------------------------------------------------
# continuity data


@dataclass(frozen=True)
class ModulusOfContinuity:
    """Uniform-continuity certificate: either a Lipschitz constant or a table
    of (eps, delta) pairs with |x-y| <= delta implying |f(x)-f(y)| <= eps.

    heuristic=True marks data estimated by sampling rather than supplied.
    """

    lipschitz: float = None
    table: tuple = None
    heuristic: bool = False

    def __post_init__(self):
        if (self.lipschitz is None) == (self.table is None):
            raise ValueError("give exactly one of lipschitz or table")
        if self.lipschitz is not None:
            if self.lipschitz < 0:
                raise ValueError("Lipschitz constant must be >= 0")
            return
        table = tuple((float(e), float(d)) for e, d in self.table)
        if not table:
            raise ValueError("modulus table is empty")
        last_e, last_d = 0.0, 0.0
        for e, d in table:
            if e <= 0 or d <= 0:
                raise ValueError("modulus table entries must be positive")
            if e <= last_e or d < last_d:
                raise ValueError("modulus table must be increasing in eps, "
                                 "nondecreasing in delta")
            last_e, last_d = e, d
        object.__setattr__(self, "table", table)

    def delta_for(self, eps):
        """Largest certified delta with |x-y| <= delta => |f(x)-f(y)| <= eps."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        if self.lipschitz is not None:
            return math.inf if self.lipschitz == 0 else eps / self.lipschitz
        best = None
        for e, d in self.table:
            if e <= eps:
                best = d
        if best is None:
            raise ModulusRangeError(f"modulus table certifies nothing below eps={eps}")
        return best

    def variation_within(self, delta):
        """Certified bound on |f(x)-f(y)| over |x-y| <= delta."""
        if self.lipschitz is not None:
            return self.lipschitz * delta
        for e, d in self.table:
            if d >= delta:
                return e
        raise ModulusRangeError(
            f"modulus table has no entry covering distance {delta}"
        )

    def grid_scale_for(self, n, eps):
        """Smallest m whose fully-labeled-cell residual bound beats eps."""
        if self.lipschitz is not None:
            m = math.floor(n * (1.0 + self.lipschitz) / eps) + 1
            return max(m, 1)
        floor_eps = self.table[0][0]
        if n * floor_eps >= eps:
            raise ModulusRangeError(
                f"modulus table floor {floor_eps} cannot certify residual {eps}"
            )

        def bound(m):
            try:
                return n * (1.0 / m + self.variation_within(1.0 / m))
            except ModulusRangeError:
                return math.inf

        hi = 1
        while bound(hi) >= eps:
            hi *= 2
            if hi > 2**40:
                raise ModulusRangeError("no grid scale certifies the target residual")
        lo = hi // 2
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if bound(mid) < eps:
                hi = mid
            else:
                lo = mid
        return hi


def estimate_modulus(f, samples=2048, seed=0):
    """Sampling-based Lipschitz estimate; flagged heuristic, may undershoot."""
    rng = np.random.default_rng(seed)
    n = f.n
    pts = rng.dirichlet(np.ones(n + 1), size=samples)
    jitter = rng.dirichlet(np.ones(n + 1), size=samples)
    mix = rng.uniform(1e-4, 0.5, size=(samples, 1))
    others = (1 - mix) * pts + mix * jitter
    fa = batch_eval(f, pts)
    fb = batch_eval(f, others)
    num = np.abs(fa - fb).max(axis=1)
    den = np.abs(pts - others).max(axis=1)
    ok = den > 1e-12
    ratio = float(np.max(num[ok] / den[ok])) if ok.any() else 0.0
    return ModulusOfContinuity(lipschitz=ratio, heuristic=True)


def _resolve_modulus(f, modulus):
    if modulus is not None:
        return modulus
    if getattr(f, "lipschitz", None) is not None:
        return ModulusOfContinuity(lipschitz=f.lipschitz)
    raise ModulusRangeError(
        "no continuity data: pass a ModulusOfContinuity or use a map with a "
        "declared Lipschitz constant"
    )


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class ApproxInfo:
    point: BarycentricPoint
    residual: float
    cell: GridCell
    m: int


@dataclass(frozen=True)
class TraceStep:
    m: int
    residual: float
    point: BarycentricPoint
    eps: float = None  # requested residual target; None for the initial probe


@dataclass(frozen=True)
class WitnessPair:
    x: BarycentricPoint
    y: BarycentricPoint
    residual_x: float
    residual_y: float
    distance: float
    epsilon: float
    delta: float

    def to_json_dict(self):
        return {
            "x": list(self.x.coords),
            "y": list(self.y.coords),
            "residuals": [self.residual_x, self.residual_y],
            "distance": self.distance,
            "epsilon": self.epsilon,
            "delta": self.delta,
        }


@dataclass(frozen=True)
class FixedPointResult:
    status: str  # "converged" | "non_contraction_witness"
    point: BarycentricPoint
    residual: float
    trace: tuple
    witness: WitnessPair = None

    def to_json_dict(self):
        return {
            "status": self.status,
            "point": [float(c) for c in self.point.coords],
            "residual": self.residual,
            "trace": [{"m": s.m, "residual": s.residual} for s in self.trace],
            "witness": None if self.witness is None else self.witness.to_json_dict(),
        }


# ---------------------------------------------------------------------------
# approximate fixed points


def _residuals(points, values):
    return np.abs(values - points).max(axis=1)


def _get_grid(n, m, budget):
    """Materialize (or fetch) a grid; small ones are cached across calls."""
    limit = cell_budget() if budget is None else budget
    if m**n > limit:
        raise ResourceLimit(
            f"grid would have {m**n} cells, over the budget of {limit}"
        )
    key = (n, m)
    grid = _grid_cache.get(key)
    if grid is not None:
        return grid
    grid = subdivide(n, m, budget)
    if grid.num_cells <= _GRID_CACHE_CELLS // 8:
        while (
            sum(g.num_cells for g in _grid_cache.values()) + grid.num_cells
            > _GRID_CACHE_CELLS
        ):
            _grid_cache.pop(next(iter(_grid_cache)))
        _grid_cache[key] = grid
    return grid


def approx_on_grid(f, m, budget=None, threads=1):
    """Best vertex of any fully labeled cell of the materialized m-fold grid."""
    n = f.n
    grid = _get_grid(n, m, budget)
    emb = grid.embedded_vertices()
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(np.arange(grid.num_vertices), threads)
        values = np.empty_like(emb)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(lambda idx: batch_eval(f, emb[idx]), chunks)
            for idx, part in zip(chunks, parts):
                values[idx] = part
    else:
        values = batch_eval(f, emb)
    check_map_range(values)
    labels = induced_labels_from_values(grid.vertex_coords, emb, values)
    fl = fully_labeled_indices(grid, Labeling(grid, labels))
    if fl.size == 0:
        raise SearchExhausted("induced labeling has no fully labeled cell; bug")
    res = _residuals(emb, values)
    cand = np.unique(grid.cells[fl])
    best_vid = int(cand[np.argmin(res[cand])])
    row = int(fl[np.argmax(np.any(grid.cells[fl] == best_vid, axis=1))])
    point = BarycentricPoint(tuple(float(c) for c in emb[best_vid]))
    return ApproxInfo(point, float(res[best_vid]), grid.cell(row), m)


def _radius_schedule(n):
    r_max = max(2, int((_BOX_VERTEX_CAP ** (1.0 / n) - 2) / 2))
    radii = []
    r = 8
    while r < r_max:
        radii.append(r)
        r *= 4
    radii.append(r_max)
    return radii


def _box_scan(f, n, m, center, radius):
    """Search the lattice box of the given radius around a staircase point for
    fully labeled cells; returns the best-vertex ApproxInfo or None."""
    lo = np.maximum(np.asarray(center, dtype=np.int64) - radius, 0)
    hi = np.minimum(np.asarray(center, dtype=np.int64) + radius, m)
    sizes = hi - lo + 1
    if np.any(sizes < 2) or sizes.prod() > 4 * _BOX_VERTEX_CAP:
        return None
    axes = [np.arange(lo[j], hi[j] + 1, dtype=np.int64) for j in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    u_pts = np.stack([g.ravel() for g in mesh], axis=1)
    valid = np.ones(u_pts.shape[0], dtype=bool)
    for j in range(n - 1):
        valid &= u_pts[:, j] >= u_pts[:, j + 1]
    coords = kernels.staircase_to_bary(u_pts, m)
    emb = coords.astype(np.float64) / m
    labels = np.full(u_pts.shape[0], n + 1, dtype=np.int64)
    res = np.full(u_pts.shape[0], np.inf)
    if valid.any():
        values = batch_eval(f, emb[valid])
        check_map_range(values)
        labels[valid] = induced_labels_from_values(
            coords[valid], emb[valid], values
        )
        res[valid] = _residuals(emb[valid], values)

    strides = np.ones(n, dtype=np.int64)
    for j in range(n - 2, -1, -1):
        strides[j] = strides[j + 1] * sizes[j + 1]
    k_hi = hi - 1
    if np.any(k_hi < lo):
        return None
    k_axes = [np.arange(lo[j], k_hi[j] + 1, dtype=np.int64) for j in range(n)]
    k_mesh = np.meshgrid(*k_axes, indexing="ij")
    bases = np.stack([g.ravel() for g in k_mesh], axis=1)
    diffs = bases[:, :-1] - bases[:, 1:] if n > 1 else None
    keep = np.ones(bases.shape[0], dtype=bool)
    if n > 1:
        keep = (diffs >= 0).all(axis=1)
    bases = bases[keep]
    if diffs is not None:
        diffs = diffs[keep]
    base_flat = (bases - lo) @ strides
    full_mask = (np.int64(1) << (n + 1)) - 1

    best = None
    for perm in itertools.permutations(range(n)):
        pos = [0] * n
        for t, j in enumerate(perm):
            pos[j] = t
        strict = [j for j in range(n - 1) if pos[j] > pos[j + 1]]
        if strict:
            ok = (diffs[:, strict] >= 1).all(axis=1)
            if not ok.any():
                continue
            sub_flat = base_flat[ok]
            sub_bases = bases[ok]
        else:
            sub_flat = base_flat
            sub_bases = bases
        offs = np.empty(n + 1, dtype=np.int64)
        offs[0] = 0
        acc = 0
        for t in range(n):
            acc += strides[perm[t]]
            offs[t + 1] = acc
        idx = sub_flat[:, None] + offs[None, :]
        labs = labels[idx]
        mask = np.bitwise_or.reduce(np.int64(1) << labs, axis=1) == full_mask
        if not mask.any():
            continue
        rows = np.flatnonzero(mask)
        cell_res = res[idx[rows]]
        vert_pos = np.argmin(cell_res, axis=1)
        cell_best = cell_res[np.arange(rows.size), vert_pos]
        winner = int(np.argmin(cell_best))
        if best is None or cell_best[winner] < best[0]:
            base = tuple(int(v) for v in sub_bases[rows[winner]])
            vflat = int(idx[rows[winner], vert_pos[winner]])
            best = (float(cell_best[winner]), base, perm, vflat)
    if best is None:
        return None
    residual, base, perm, vflat = best
    verts = path_vertices(m, base, perm)
    order = sorted(range(len(verts)), key=lambda t: verts[t])
    cell = GridCell(
        encode_cell(m, base, perm), None, tuple(verts[t] for t in order), m
    )
    point = BarycentricPoint(tuple(float(c) / m for c in coords[vflat]))
    return ApproxInfo(point, residual, cell, m)


def _label_one(f, int_coords, m, n):
    emb = np.asarray(int_coords, dtype=np.float64) / m
    value = batch_eval(f, emb[None, :])[0]
    best, best_slack = None, math.inf
    for i in range(n + 1):
        if int_coords[i] > 0:
            if value[i] <= emb[i]:
                return i
            slack = value[i] - emb[i]
            if slack < best_slack:
                best, best_slack = i, slack
    return best


def _lazy_fl_cell(f, n, m, d, steps, step_cap):
    """Fully labeled cell of the d-face spanned by corners 0..d, found by a
    lazy door-to-door walk; labels are evaluated on demand, one per pivot."""
    if d == 0:
        return (), ()

    def pad(v):
        return tuple(v) + (0,) * (n - d)

    base, perm = _lazy_fl_cell(f, n, m, d - 1, steps, step_cap)
    base, perm = base + (0,), perm + (d - 1,)
    labels = [_label_one(f, pad(v), m, n) for v in path_vertices(m, base, perm)]
    t_in = d
    while True:
        steps[0] += 1
        if steps[0] > step_cap:
            raise ResourceLimit(
                f"lazy door walk exceeded the {step_cap}-step budget at "
                f"scale m={m}"
            )
        val = labels[t_in]
        if val == d:
            return base, perm
        t_dup = next(t for t in range(d + 1) if t != t_in and labels[t] == val)
        piv = pivot_cell(m, base, perm, t_dup)
        if piv is None:
            raise SearchExhausted(
                "lazy door walk exited through the boundary; the labeling "
                "pairs this door with another boundary door"
            )
        base, perm, t_in = piv
        if t_dup == 0:
            labels = labels[1:] + [None]
        elif t_dup == d:
            labels = [None] + labels[:-1]
        verts = path_vertices(m, base, perm)
        labels[t_in] = _label_one(f, pad(verts[t_in]), m, n)


def _walk_virtual(f, n, m, budget):
    steps = [0]
    base, perm = _lazy_fl_cell(f, n, m, n, steps, min(budget, _WALK_STEP_CAP))
    verts = path_vertices(m, base, perm)
    emb = np.asarray(verts, dtype=np.float64) / m
    values = batch_eval(f, emb)
    res = _residuals(emb, values)
    best = int(np.argmin(res))
    order = sorted(range(len(verts)), key=lambda t: verts[t])
    cell = GridCell(
        encode_cell(m, base, perm), None, tuple(verts[t] for t in order), m
    )
    point = BarycentricPoint(tuple(float(c) for c in emb[best]))
    return ApproxInfo(point, float(res[best]), cell, m)


def _approx_with_info(f, eps, modulus=None, hint=None, budget=None, threads=1):
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = f.n
    mod = _resolve_modulus(f, modulus)
    m = mod.grid_scale_for(n, eps)
    budget = cell_budget() if budget is None else budget
    cells = m**n
    materializable = cells <= min(budget, EXHAUSTIVE_LIMIT)
    if materializable and (hint is None or cells <= _HINTED_LIMIT):
        return approx_on_grid(f, m, budget=budget, threads=threads)
    if hint is not None:
        center, _, _, _ = locate_lattice(n, m, hint.coords)
        for radius in _radius_schedule(n):
            found = _box_scan(f, n, m, center, radius)
            if found is not None:
                return found
    if materializable:
        return approx_on_grid(f, m, budget=budget, threads=threads)
    return _walk_virtual(f, n, m, budget)


def approx_fixed_point(f, eps, modulus=None, hint=None, budget=None, threads=1):
    """A point with residual < eps: best vertex of a fully labeled cell of a
    grid chosen from the residual bound n * (1/m + variation(1/m))."""
    info = _approx_with_info(f, eps, modulus, hint, budget, threads)
    return info.point, info.residual


# ---------------------------------------------------------------------------
# pair diagnostic


def _pair_search(f, cell, delta, samples, rng):
    verts = cell.embedded()
    n = verts.shape[1] - 1
    weights = rng.dirichlet(np.ones(n + 1), size=samples)
    pts = np.vstack([verts, verts.mean(axis=0, keepdims=True), weights @ verts])
    values = batch_eval(f, pts)
    res = _residuals(pts, values)
    dist = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=2)
    iu = np.triu_indices(pts.shape[0], k=1)
    far = dist[iu] >= delta
    if not far.any():
        raise EmptyPairSet(
            f"no sampled pair is {delta} apart inside a cell of diameter "
            f"{1.0 / cell.m}"
        )
    worst = np.maximum(res[iu[0]], res[iu[1]])
    worst = np.where(far, worst, np.inf)
    at = int(np.argmin(worst))
    i, j = int(iu[0][at]), int(iu[1][at])
    return float(worst[at]), (pts[i], pts[j], float(res[i]), float(res[j]),
                              float(dist[i, j]))


def sampled_pair_infimum(f, cell, delta, samples, seed=0):
    """Minimum over sampled far-apart pairs (x, y) in the cell of
    max(|f(x)-x|, |f(y)-y|); an upper estimate of the pair-set infimum."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    value, _ = _pair_search(f, cell, delta, samples, rng)
    return value


def _witness_probe(f, point, residual, history, delta_check, floor, seed,
                   modulus=None):
    lows = [(p, r) for p, r in history if r < floor]
    if residual < floor:
        lows.append((point, residual))
    for i in range(len(lows)):
        for j in range(i + 1, len(lows)):
            d = max_norm_dist(lows[i][0].coords, lows[j][0].coords)
            if d >= delta_check:
                return WitnessPair(
                    lows[i][0], lows[j][0], lows[i][1], lows[j][1], d,
                    floor, delta_check,
                )
    m_bar = max(1, int(1.0 / (2.0 * delta_check)))
    if modulus is not None:
        # sampled points stay within the probe cell, so their residuals are at
        # least residual - variation(cell diameter); skip hopeless probes
        try:
            spread = modulus.variation_within(1.0 / m_bar)
        except ModulusRangeError:
            spread = math.inf
        if residual > floor + spread:
            return None
    base, perm, _, verts = locate_lattice(f.n, m_bar, point.coords)
    order = sorted(range(len(verts)), key=lambda t: verts[t])
    cell = GridCell(
        encode_cell(m_bar, base, perm), None, tuple(verts[t] for t in order), m_bar
    )
    try:
        value, pair = _pair_search(
            f, cell, delta_check, _PROBE_SAMPLES, np.random.default_rng(seed)
        )
    except EmptyPairSet:
        return None
    if value >= floor:
        return None
    x, y, rx, ry, d = pair
    return WitnessPair(
        BarycentricPoint(tuple(float(c) for c in x)),
        BarycentricPoint(tuple(float(c) for c in y)),
        rx, ry, d, floor, delta_check,
    )


# ---------------------------------------------------------------------------
# refinement


def refine_fixed_point(
    f,
    tol,
    modulus=None,
    delta_check=None,
    witness_floor=1e-9,
    budget=None,
    threads=1,
    seed=0,
    max_levels=80,
):
    """Refine approximate fixed points until consecutive iterates agree.

    Produces iterates at target residuals 2^-k starting where the m=4 probe
    leaves off.  Converged: consecutive iterates within tol and residual at
    most tol.  Witness: two points at distance >= delta_check whose residuals
    are both below witness_floor, found among iterates or by sampling a
    coarse cell around the latest iterate.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    delta_check = 10.0 * tol if delta_check is None else delta_check
    if not 0.0 < delta_check <= 1.0:
        raise ValueError("delta_check must be in (0, 1]")
    mod = _resolve_modulus(f, modulus)

    info = approx_on_grid(f, 4, budget=budget, threads=threads)
    trace = [TraceStep(info.m, info.residual, info.point)]
    history = []
    witness = _witness_probe(
        f, info.point, info.residual, history, delta_check, witness_floor, seed,
        modulus=mod,
    )
    if witness is not None:
        return FixedPointResult(
            "non_contraction_witness", info.point, info.residual, tuple(trace),
            witness,
        )
    history.append((info.point, info.residual))

    r0 = info.residual
    k0 = math.ceil(-math.log2(r0)) if r0 > 0 else math.ceil(-math.log2(tol))
    k0 = max(1, k0)
    x_prev = info.point
    for k in range(k0, k0 + max_levels):
        eps = 2.0**-k
        info = _approx_with_info(f, eps, mod, hint=x_prev, budget=budget,
                                 threads=threads)
        trace.append(TraceStep(info.m, info.residual, info.point, eps))
        witness = _witness_probe(
            f, info.point, info.residual, history, delta_check, witness_floor,
            seed, modulus=mod,
        )
        if witness is not None:
            return FixedPointResult(
                "non_contraction_witness", info.point, info.residual,
                tuple(trace), witness,
            )
        history.append((info.point, info.residual))
        if (
            max_norm_dist(info.point.coords, x_prev.coords) <= tol
            and info.residual <= tol
        ):
            return FixedPointResult(
                "converged", info.point, info.residual, tuple(trace), None
            )
        x_prev = info.point
    raise ResourceLimit(f"no convergence after {max_levels} refinement levels")
