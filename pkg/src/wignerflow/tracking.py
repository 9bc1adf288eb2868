"""Stagnation points through time: frame linking, events and charge bookkeeping.

Frames are linked by a charge-respecting assignment on predicted positions.
Intervals where the assignment is ambiguous or leaves points unlinked are
bisected, and a track of some charge that breaks off next to a new track of
the same charge is stitched to it. Track ends are then labelled:

    start   born | split-from | entered-window
    end     died | merged-with | left-window
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter
from scipy.optimize import brentq, linear_sum_assignment

from .flow import DEFAULT_CUTOFF, flow_field
from .io import thread_count
from .topology import SIGNIFICANCE, StagnationPoint, StagnationSet, fit_circle, stagnation_points, zero_contours
from .wigner import PhaseSpaceGrid, TwoStateSpec, superposition_field

LINK_CELLS = 3.0
MAX_REFINEMENT = 3
FRAMES_PER_PERIOD = 100
# points whose local |W| is within this factor of the detection threshold sit
# on the edge of the detectable region and may cross it between frames
FAINT_FACTOR = 10.0


@dataclass
class Frame:
    time: float
    points: StagnationSet
    circle: tuple | None = None
    faint: tuple = ()

    @property
    def charge(self) -> int:
        return self.points.total_charge()


@dataclass
class Track:
    ident: int
    charge: int | None
    frames: list[int] = field(default_factory=list)
    indices: list[int] = field(default_factory=list)
    start: str = "present"
    end: str = "present"
    start_partner: list[int] = field(default_factory=list)
    end_partner: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.ident,
            "omega": self.charge,
            "frames": self.frames,
            "indices": self.indices,
            "start": self.start,
            "end": self.end,
            "start_partner": self.start_partner,
            "end_partner": self.end_partner,
        }


@dataclass
class TrackRecord:
    frames: list[Frame]
    tracks: list[Track]
    window: tuple
    link_radius: float
    unlinked: list[int] = field(default_factory=list)
    repulsions: list[dict] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self.frames])

    def charge_sums(self) -> list[int]:
        return [f.charge for f in self.frames]

    def position(self, track: Track, k: int) -> np.ndarray:
        return self.frames[track.frames[k]].points.points[track.indices[k]].position

    def path(self, track: Track) -> np.ndarray:
        return np.array([self.position(track, k) for k in range(len(track.frames))])

    def events(self) -> list[dict]:
        out = []
        last = len(self.frames) - 1
        for tr in self.tracks:
            if tr.frames[0] > 0:
                out.append({"track": tr.ident, "type": tr.start, "frame": tr.frames[0], "time": self.frames[tr.frames[0]].time, "omega": tr.charge, "partners": tr.start_partner})
            if tr.frames[-1] < last:
                out.append({"track": tr.ident, "type": tr.end, "frame": tr.frames[-1], "time": self.frames[tr.frames[-1]].time, "omega": tr.charge, "partners": tr.end_partner})
        return sorted(out, key=lambda e: (e["frame"], e["track"]))

    def boundary_flux(self) -> list[int]:
        """Charge entering (positive) minus leaving through the window, per interval."""
        flux = [0] * max(0, len(self.frames) - 1)
        for tr in self.tracks:
            c = tr.charge or 0
            if tr.start == "entered-window" and tr.frames[0] > 0:
                flux[tr.frames[0] - 1] += c
            if tr.end == "left-window" and tr.frames[-1] < len(self.frames) - 1:
                flux[tr.frames[-1]] -= c
        return flux

    def charge_ledger(self) -> list[dict]:
        sums = self.charge_sums()
        flux = self.boundary_flux()
        return [
            {"from": k, "to": k + 1, "change": sums[k + 1] - sums[k], "boundary": flux[k], "balanced": sums[k + 1] - sums[k] == flux[k]}
            for k in range(len(flux))
        ]

    def to_dict(self) -> dict:
        return {
            "window": [list(self.window[0]), list(self.window[1])],
            "link_radius": self.link_radius,
            "times": [float(t) for t in self.times],
            "frames": [
                {
                    "time": f.time,
                    "points": [pt.to_dict() for pt in f.points.points],
                    "lines": len(f.points.lines),
                    "circle": None if f.circle is None else {"center": list(map(float, f.circle[0])), "radius": float(f.circle[1])},
                    "faint": [i for i, v in enumerate(f.faint) if v],
                }
                for f in self.frames
            ],
            "tracks": [tr.to_dict() for tr in self.tracks],
            "events": self.events(),
            "charge_ledger": self.charge_ledger(),
            "unlinked": self.unlinked,
            "repulsions": self.repulsions,
        }


def _main_circle(w_values, grid):
    """Circle fitted to the longest closed W zero line, or None."""
    lines = [ln for ln in zero_contours(w_values, grid, "W", significance=1e-3) if ln.closed]
    if not lines:
        return None
    longest = max(lines, key=lambda ln: len(ln.points))
    return fit_circle(longest.points)


def compute_frame(spec: TwoStateSpec, t: float, grid: PhaseSpaceGrid, cutoff: int, window=None) -> Frame:
    w = superposition_field(spec.at(t), grid)
    flow = flow_field(w, spec.basis.potential, cutoff)
    pts = stagnation_points(flow, window=window)
    return Frame(float(t), pts, _main_circle(w.values, grid), _faint(w.values, grid, pts))


def _faint(w_values, grid, pts: StagnationSet) -> tuple:
    env = maximum_filter(np.abs(w_values), size=5)
    level = FAINT_FACTOR * SIGNIFICANCE * np.max(np.abs(w_values))
    out = []
    for pt in pts.points:
        i = min(len(grid.x) - 1, max(0, int(round((pt.x - grid.x[0]) / grid.dx))))
        j = min(len(grid.p) - 1, max(0, int(round((pt.p - grid.p[0]) / grid.dp))))
        out.append(bool(env[i, j] < level))
    return tuple(out)


def _frame_task(args):
    return compute_frame(*args)


def _compute_frames(spec, times, grid, cutoff, window, workers) -> list[Frame]:
    workers = workers or thread_count() or 1
    tasks = [(spec, t, grid, cutoff, window) for t in times]
    if workers <= 1 or len(tasks) < 2:
        return [_frame_task(a) for a in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_frame_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _needs_split(a: Frame, b: Frame, radius: float) -> bool:
    links, ambiguous = _assign(a.points, b.points, np.zeros((len(a.points), 2)), radius)
    return ambiguous or len(links) < max(len(a.points), len(b.points))


def _full_window(grid: PhaseSpaceGrid):
    return ((float(grid.x[0]), float(grid.x[-1])), (float(grid.p[0]), float(grid.p[-1])))


def _near_boundary(r, window, distance) -> bool:
    (x_lo, x_hi), (p_lo, p_hi) = window
    return min(r[0] - x_lo, x_hi - r[0], r[1] - p_lo, p_hi - r[1]) < distance


def _assign(prev: StagnationSet, cur: StagnationSet, velocity: np.ndarray, radius: float):
    """Charge-compatible minimum-distance links within ``radius``; returns (links, ambiguous)."""
    a, b = prev.positions(), cur.positions()
    if len(a) == 0 or len(b) == 0:
        return {}, False
    pred = a + velocity
    dist = np.hypot(pred[:, None, 0] - b[None, :, 0], pred[:, None, 1] - b[None, :, 1])
    qa, qb = prev.charges(), cur.charges()
    big = 1e6
    cost = dist.copy()
    for i in range(len(a)):
        for j in range(len(b)):
            if qa[i] != qb[j] or dist[i, j] > radius:
                cost[i, j] = big
    rows, cols = linear_sum_assignment(cost)
    links = {int(i): int(j) for i, j in zip(rows, cols) if cost[i, j] < big}
    same = np.array([[qa[i] == qb[j] for j in range(len(b))] for i in range(len(a))])
    ambiguous = False
    for i, j in links.items():
        # a rival within twice the chosen distance makes the link a guess
        rivals_j = [jj for jj in range(len(b)) if jj != j and same[i, jj] and dist[i, jj] < min(radius, 2.0 * dist[i, j])]
        rivals_i = [ii for ii in range(len(a)) if ii != i and same[ii, j] and dist[ii, j] < min(radius, 2.0 * dist[i, j])]
        if rivals_j or rivals_i:
            ambiguous = True
    return links, ambiguous


def evolve_and_track(
    spec: TwoStateSpec,
    times,
    cutoff: int = DEFAULT_CUTOFF,
    window=None,
    *,
    grid: PhaseSpaceGrid | None = None,
    link_cells: float = LINK_CELLS,
    max_refinement: int = MAX_REFINEMENT,
    workers: int | None = None,
) -> TrackRecord:
    """Stagnation points of the spec's flow at ``times``, linked into tracks.

    Frames are independent and computed by ``workers`` processes (default:
    WIGNERFLOW_THREADS, else 1); linking is a sequential pass over them.
    """
    from .wigner import default_phase_grid

    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")
    grid = grid or default_phase_grid(spec.basis.potential)
    window = window or _full_window(grid)
    radius = link_cells * min(grid.dx, grid.dp)
    frames = _compute_frames(spec, times, grid, cutoff, window, workers)

    # bisect intervals whose linking is ambiguous or leaves points unlinked
    # (births, deaths, fast moves); breadth-first so each pass is one batch
    depth = [0] * (len(frames) - 1)
    open_ = [True] * (len(frames) - 1)
    while True:
        todo = []
        for k in range(len(frames) - 1):
            if not open_[k]:
                continue
            if depth[k] < max_refinement and _needs_split(frames[k], frames[k + 1], radius):
                todo.append(k)
            else:
                open_[k] = False
        if not todo:
            break
        mids = _compute_frames(spec, [0.5 * (frames[k].time + frames[k + 1].time) for k in todo], grid, cutoff, window, workers)
        for k, mid in reversed(list(zip(todo, mids))):
            frames.insert(k + 1, mid)
            depth[k : k + 1] = [depth[k] + 1] * 2
            open_[k : k + 1] = [True, True]
    unlinked = [k for k in range(len(frames) - 1) if _assign(frames[k].points, frames[k + 1].points, np.zeros((len(frames[k].points), 2)), radius)[1]]

    tracks: list[Track] = []
    active = {}
    velocity = {}
    for j, pt in enumerate(frames[0].points.points):
        tr = Track(len(tracks), pt.charge, [0], [j])
        tracks.append(tr)
        active[j] = tr
    for k in range(len(frames) - 1):
        prev, cur = frames[k].points, frames[k + 1].points
        vel = np.array([velocity.get(active[i].ident, np.zeros(2)) for i in range(len(prev))]).reshape(-1, 2)
        links, _ = _assign(prev, cur, vel, radius)
        new_active = {}
        for i, j in links.items():
            tr = active[i]
            tr.frames.append(k + 1)
            tr.indices.append(j)
            velocity[tr.ident] = cur.points[j].position - prev.points[i].position
            new_active[j] = tr
        for j, pt in enumerate(cur.points):
            if j not in new_active:
                tr = Track(len(tracks), pt.charge, [k + 1], [j])
                tracks.append(tr)
                new_active[j] = tr
        active = new_active

    tracks = _stitch(frames, tracks, 3.0 * radius)
    record = TrackRecord(frames, tracks, window, radius, unlinked)
    _label_events(record)
    return record


def _stitch(frames: list[Frame], tracks: list[Track], reach: float) -> list[Track]:
    """Join a track ending in frame k to one of equal charge starting in k + 1.

    A charged point cannot vanish alone, so such an end/start pair is one point
    that outran the link radius. Pairs within ``reach`` are joined first; ends
    and starts that no neutral partner explains are then joined within ten
    times ``reach`` (points leaving a pair birth move like sqrt(t - t0)).
    """
    def pos(tr, j):
        return frames[tr.frames[j]].points.points[tr.indices[j]].position

    def join(ends, starts, limit):
        cost = np.full((len(ends), len(starts)), 1e6)
        for i, a in enumerate(ends):
            for j, b in enumerate(starts):
                if a.charge is None or a.charge != b.charge:
                    continue
                d = float(np.hypot(*(pos(a, -1) - pos(b, 0))))
                if d < limit:
                    cost[i, j] = d
        rows, cols = linear_sum_assignment(cost)
        for i, j in zip(rows, cols):
            if cost[i, j] < 1e6:
                ends[i].frames += starts[j].frames
                ends[i].indices += starts[j].indices
                alive.remove(starts[j])

    def unpaired(group, j, limit):
        left = list(group)
        for a in list(left):
            if a not in left or not a.charge:
                continue
            rivals = [b for b in left if b is not a and b.charge == -a.charge]
            dist = [float(np.hypot(*(pos(a, j) - pos(b, j)))) for b in rivals]
            if dist and min(dist) < limit:
                left.remove(a)
                left.remove(rivals[int(np.argmin(dist))])
        return left

    alive = list(tracks)
    for k in range(len(frames) - 1):
        ends = [tr for tr in alive if tr.frames[-1] == k]
        starts = [tr for tr in alive if tr.frames[0] == k + 1]
        if not ends or not starts:
            continue
        join(ends, starts, reach)
        ends = unpaired([tr for tr in alive if tr.frames[-1] == k], -1, 10 * reach)
        starts = unpaired([tr for tr in alive if tr.frames[0] == k + 1], 0, 10 * reach)
        if ends and starts:
            join(ends, starts, 10 * reach)
    for ident, tr in enumerate(alive):
        tr.ident = ident
    return alive


def _label_events(record: TrackRecord):
    """Classify track starts and ends by proximity to the window and to each other."""
    last = len(record.frames) - 1
    reach = 3.0 * record.link_radius
    by_start, by_end = {}, {}
    for tr in record.tracks:
        by_start.setdefault(tr.frames[0], []).append(tr)
        by_end.setdefault(tr.frames[-1], []).append(tr)

    for k, ending in by_end.items():
        if k == last:
            continue
        survivors = [tr for tr in record.tracks if tr.frames[0] <= k + 1 <= tr.frames[-1]]
        _pair_up(record, ending, k, survivors, k + 1, reach, start=False)
    for k, starting in by_start.items():
        if k == 0:
            continue
        parents = [tr for tr in record.tracks if tr.frames[0] <= k - 1 <= tr.frames[-1]]
        _pair_up(record, starting, k, parents, k - 1, reach, start=True)

    # near-approaches of charges that cannot merge
    for k, frame in enumerate(record.frames):
        pts = frame.points.points
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                qi, qj = pts[i].charge, pts[j].charge
                if qi is None or qj is None or abs(qi + qj) <= 1:
                    continue
                if np.hypot(*(pts[i].position - pts[j].position)) < record.link_radius:
                    record.repulsions.append({"frame": k, "points": [i, j], "omega": [qi, qj]})


def _pair_up(record, group, k, others, k_other, reach, *, start):
    """Label the ends (or starts) in frame ``k``: window crossing, pair event, or merge/split.

    Neutral pairs are matched first. An unpaired point ending or starting at
    the window edge or in a faint region crossed the edge of the detectable
    region and counts as a window crossing.
    """
    kind_pair = "born" if start else "died"
    kind_join = "split-from" if start else "merged-with"
    kind_edge = "entered-window" if start else "left-window"
    idx = 0 if start else -1

    def pos(tr, at=None):
        j = tr.frames.index(at) if at is not None else (0 if start else len(tr.frames) - 1)
        return record.position(tr, j)

    def faint(tr):
        flags = record.frames[tr.frames[idx]].faint
        return bool(flags) and flags[tr.indices[idx]]

    # charge-neutral clusters appear or vanish together, also at the edges
    pending = list(group)
    used = set()
    for a in pending:
        if a.ident in used:
            continue
        best, best_d = None, math.inf
        for b in pending:
            if b is a or b.ident in used or (a.charge or 0) + (b.charge or 0) != 0:
                continue
            d = float(np.hypot(*(pos(a) - pos(b))))
            if d < best_d:
                best, best_d = b, d
        if best is not None and best_d < 10 * reach:
            for tr, partner in ((a, best), (best, a)):
                setattr(tr, "start" if start else "end", kind_pair)
                (tr.start_partner if start else tr.end_partner).append(partner.ident)
            used.update({a.ident, best.ident})
    for a in pending:
        if a.ident in used:
            continue
        if _near_boundary(pos(a), record.window, reach) or faint(a):
            setattr(a, "start" if start else "end", kind_edge)
            continue
        near = []
        for b in others:
            if b in group:
                continue
            d = float(np.hypot(*(pos(a) - pos(b, k_other))))
            if d < 10 * reach:
                near.append((d, b))
        if near:
            _, b = min(near, key=lambda t: t[0])
            setattr(a, "start" if start else "end", kind_join)
            (a.start_partner if start else a.end_partner).append(b.ident)
        else:
            setattr(a, "start" if start else "end", kind_pair)


def rabi_spec(basis, rabi_ratio: float, m: int = 0, n: int = 1) -> TwoStateSpec:
    """Rabi-driven pair: theta(t) = Omega_R t / 2 + pi/2, pure psi_n at t = 0.

    ``rabi_ratio`` is Omega_R over the harmonic frequency, which is 1 in the
    rescaled units.
    """
    if not rabi_ratio > 0:
        raise ValueError("Rabi frequency must be positive")
    return TwoStateSpec(basis, m, n, rabi_frequency=float(rabi_ratio))


def rabi_track(basis, rabi_ratio: float, times, cutoff: int = DEFAULT_CUTOFF, *, grid=None, window=None, require_full_period: bool = True) -> TrackRecord:
    spec = rabi_spec(basis, rabi_ratio)
    times = np.asarray(times, dtype=float)
    period = 4.0 * math.pi / spec.rabi_frequency
    if require_full_period and times[-1] - times[0] < period:
        raise ValueError(f"times span {times[-1] - times[0]:.4g} but one Rabi period is {period:.4g}")
    return evolve_and_track(spec, times, cutoff, window, grid=grid)


def match_sets(a: StagnationSet, b: StagnationSet, tolerance: float) -> bool:
    """Same number of points and a charge-respecting matching within ``tolerance``."""
    if len(a) != len(b):
        return False
    if len(a) == 0:
        return True
    links, _ = _assign(a, b, np.zeros((len(a), 2)), tolerance)
    return len(links) == len(a)


def origin_vortex_track(spec: TwoStateSpec, times, cutoff: int = DEFAULT_CUTOFF, *, grid=None, search: float = 0.5) -> np.ndarray:
    """x-position of the on-axis stagnation point continued from the one nearest the origin."""
    from .wigner import default_phase_grid

    grid = grid or default_phase_grid(spec.basis.potential)
    xs = []
    x_prev = 0.0
    for t in np.atleast_1d(times):
        w = superposition_field(spec.at(float(t)), grid)
        flow = flow_field(w, spec.basis.potential, cutoff)
        probe = x_prev + np.linspace(-search, search, 201) + 0.5 * (2 * search / 200)
        _, jp = flow.evaluate(probe, np.zeros_like(probe))
        f = lambda x: float(flow.evaluate([x], [0.0])[1][0])
        roots = [brentq(f, probe[i], probe[i + 1], xtol=1e-14) for i in np.flatnonzero(np.sign(jp[:-1]) * np.sign(jp[1:]) < 0)]
        exact = [probe[i] for i in np.flatnonzero(jp == 0)]
        roots += exact
        if not roots:
            xs.append(math.nan)
            continue
        x_prev = min(roots, key=lambda r: abs(r - x_prev))
        xs.append(x_prev)
    return np.array(xs)


@dataclass(frozen=True)
class AlignmentReport:
    deviations: list
    max_deviation: float
    excluded: list[int]


def ferris_alignment(record: TrackRecord, *, axis_tolerance: float | None = None) -> AlignmentReport:
    """Angles of the four diagonal points about the fitted zero-circle center.

    Per frame, the deviation of each diagonal point's angle from the nearest
    odd multiple of 45 degrees. Frames without a circle or without exactly
    four diagonal points are excluded and listed.
    """
    deviations, excluded = [], []
    for k, frame in enumerate(record.frames):
        if frame.circle is None:
            excluded.append(k)
            deviations.append(None)
            continue
        center, radius = frame.circle
        tol = axis_tolerance or 2.0 * record.link_radius
        diag = []
        for pt in frame.points.points:
            r = pt.position - center
            if abs(pt.p) < tol or abs(pt.x) < tol:
                continue
            if abs(np.hypot(*r) - radius) > 0.25 * radius:
                continue
            diag.append(r)
        if len(diag) != 4:
            excluded.append(k)
            deviations.append(None)
            continue
        devs = []
        for r in diag:
            ang = math.degrees(math.atan2(r[1], r[0])) % 360.0
            devs.append(abs(ang % 90.0 - 45.0))
        deviations.append(devs)
    finite = [d for row in deviations if row for d in row]
    return AlignmentReport(deviations, max(finite) if finite else math.nan, excluded)
