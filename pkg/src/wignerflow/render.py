"""Deterministic SVG panels of Wigner flow dumps and contact sheets of panels.

A panel draws, back to front: speed-coloured streamlines, zero lines of W,
J_x and J_p, unit-length flow glyphs (filled where W > 0, hollow where
W < 0, so flow reversal shows as a change of glyph), an overlay of arrows
scaled by |J|, and stagnation markers (+ for omega = +1, - for -1, a ring
for 0 or undetermined). Coordinates are printed with fixed precision so equal
inputs give equal bytes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .flow import integrate_streamline
from .io import MANIFEST_NAME, RunManifest, read_dump
from .topology import SIGNIFICANCE, zero_contours
from .wigner import PhaseSpaceGrid

# viridis-like ramp from slow to fast
SPEED_COLOURS = ("#440154", "#46327e", "#365c8d", "#277f8e", "#1fa187", "#4ac16d", "#a0da39", "#fde725")
GLYPH_FLOOR = 1e-8
LINE_STYLES = {
    "W": 'stroke="#2ca02c" stroke-width="2.4"',
    "Jx": 'stroke="#d62728" stroke-width="1.4" stroke-dasharray="5,3"',
    "Jp": 'stroke="#1f77b4" stroke-width="2.0"',
    "stagnation": 'stroke="#ff7f0e" stroke-width="3.0" stroke-dasharray="2,2"',
}


class MixedGridError(ValueError):
    """Dumps combined into one panel sit on different grids."""


@dataclass(frozen=True)
class RenderStyle:
    size: int = 480
    margin: int = 28
    glyphs: int = 21
    overlay: bool = True
    streamline_seeds: int = 6
    streamline_length: float = 12.0
    title: str | None = None


@dataclass
class PanelData:
    grid: PhaseSpaceGrid
    w: np.ndarray
    jx: np.ndarray | None = None
    jp: np.ndarray | None = None
    points: list = field(default_factory=list)
    lines: list = field(default_factory=list)
    stagnation_lines: list = field(default_factory=list)
    label: str = ""


class _GridFlow:
    """Just enough of a flow field for streamline integration on sampled data."""

    def __init__(self, grid, jx, jp):
        self.grid, self.jx, self.jp = grid, jx, jp

    def magnitude(self):
        return np.hypot(self.jx, self.jp)


def _fmt(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def load_panel(path) -> PanelData:
    """Collect field, flow, stagnation and contour dumps from a run directory."""
    path = Path(path)
    files = []
    if path.is_dir():
        names = RunManifest.read(path).outputs if (path / MANIFEST_NAME).exists() else [
            str(p.relative_to(path)) for p in sorted(path.rglob("*")) if p.is_file()
        ]
        files = [path / n for n in names if not n.endswith(".svg")]
    else:
        files = [path]
    panel = {}
    grid = None
    label = ""
    for f in files:
        data = read_dump(f)
        kind = data["kind"]
        header = data["header"]
        if "grid" in header:
            g = PhaseSpaceGrid.from_dict(header["grid"])
            if grid is not None and g != grid:
                raise MixedGridError(f"{f} is on a different grid from the other dumps")
            grid = g
        if kind in ("W", "Jx", "Jp") and "values" in data:
            panel[kind] = data["values"]
            label = label or header.get("label", "")
        elif kind == "contours":
            panel["contours"] = data["rows"]
        elif kind == "stagnation":
            panel["report"] = data["report"]
            if "grid" in data["report"]:
                g = PhaseSpaceGrid.from_dict(data["report"]["grid"])
                if grid is not None and g != grid:
                    raise MixedGridError(f"{f} is on a different grid from the other dumps")
                grid = g
    if "W" not in panel or grid is None:
        raise ValueError(f"no Wigner field dump found under {path}")
    out = PanelData(grid, panel["W"], panel.get("Jx"), panel.get("Jp"), label=label)
    report = panel.get("report")
    if report:
        out.points = report.get("points", [])
        out.stagnation_lines = [np.array(ln["points"]) for ln in report.get("lines", [])]
    if "contours" in panel:
        out.lines = _lines_from_rows(panel["contours"])
    else:
        out.lines = default_lines(out)
    return out


def _lines_from_rows(rows) -> list:
    groups: dict = {}
    for component, ident, closed, x, p in rows:
        groups.setdefault((component, ident), (closed, []))[1].append((x, p))
    return [(comp, closed, np.array(pts)) for (comp, _), (closed, pts) in groups.items()]


def default_lines(panel: PanelData) -> list:
    """Zero lines computed from the sampled fields themselves."""
    out = []
    for comp, values in (("W", panel.w), ("Jp", panel.jp)):
        if values is None:
            continue
        for ln in zero_contours(values, panel.grid, comp, significance=SIGNIFICANCE):
            out.append((comp, ln.closed, ln.points))
    if panel.jx is not None:
        g = panel.grid
        out.append(("Jx", False, np.array([[g.x[0], 0.0], [g.x[-1], 0.0]])))
    return out


class _Canvas:
    def __init__(self, grid: PhaseSpaceGrid, style: RenderStyle):
        self.x0, self.x1 = float(grid.x[0]), float(grid.x[-1])
        self.p0, self.p1 = float(grid.p[0]), float(grid.p[-1])
        self.inner = style.size - 2 * style.margin
        self.m = style.margin

    def px(self, x):
        return self.m + (x - self.x0) / (self.x1 - self.x0) * self.inner

    def py(self, p):
        return self.m + (self.p1 - p) / (self.p1 - self.p0) * self.inner

    def path(self, pts) -> str:
        return " ".join(f"{'M' if i == 0 else 'L'}{_fmt(self.px(x))},{_fmt(self.py(p))}" for i, (x, p) in enumerate(pts))


def _arrow(c: _Canvas, x, p, ux, up, length, cls) -> str:
    """Arrow centred on (x, p) pointing along (ux, up) in data orientation."""
    sx, sy = c.px(x), c.py(p)
    dx, dy = ux * length, -up * length
    tx, ty = sx + 0.5 * dx, sy + 0.5 * dy
    bx, by = sx - 0.5 * dx, sy - 0.5 * dy
    # arrow head: two barbs at +-150 degrees from the shaft
    hl = 0.35 * length
    cos, sin = -0.866, 0.5
    h1 = (tx + hl * (ux * cos - (-up) * sin), ty + hl * (ux * sin + (-up) * cos))
    h2 = (tx + hl * (ux * cos + (-up) * sin), ty + hl * (-ux * sin + (-up) * cos))
    return (
        f'<path class="{cls}" d="M{_fmt(bx)},{_fmt(by)} L{_fmt(tx)},{_fmt(ty)} '
        f'M{_fmt(h1[0])},{_fmt(h1[1])} L{_fmt(tx)},{_fmt(ty)} L{_fmt(h2[0])},{_fmt(h2[1])}"/>'
    )


def _glyphs(panel: PanelData, c: _Canvas, style: RenderStyle) -> list[str]:
    if panel.jx is None or panel.jp is None:
        return []
    g = panel.grid
    nx, np_ = g.shape
    ii = np.linspace(0, nx - 1, style.glyphs + 2)[1:-1].round().astype(int)
    jj = np.linspace(0, np_ - 1, style.glyphs + 2)[1:-1].round().astype(int)
    mag = np.hypot(panel.jx, panel.jp)
    peak = float(mag.max()) or 1.0
    w_floor = GLYPH_FLOOR * float(np.max(np.abs(panel.w)))
    cell = c.inner / (style.glyphs + 1)
    out = []
    for i in ii:
        for j in jj:
            m = mag[i, j]
            # directions in the decayed tails are rounding noise
            if m < 1e-12 * peak or abs(panel.w[i, j]) < w_floor:
                continue
            ux, up = panel.jx[i, j] / m, panel.jp[i, j] / m
            cls = "glyph pos" if panel.w[i, j] >= 0 else "glyph neg"
            out.append(_arrow(c, g.x[i], g.p[j], ux, up, 0.7 * cell, cls))
            if style.overlay:
                out.append(_arrow(c, g.x[i], g.p[j], ux, up, 1.2 * cell * m / peak, "overlay"))
    return out


def _streamlines(panel: PanelData, c: _Canvas, style: RenderStyle) -> list[str]:
    if panel.jx is None or panel.jp is None or style.streamline_seeds <= 0:
        return []
    g = panel.grid
    flow = _GridFlow(g, panel.jx, panel.jp)
    peak = float(flow.magnitude().max()) or 1.0
    xs = np.linspace(g.x[0], g.x[-1], style.streamline_seeds + 2)[1:-1]
    ps = np.linspace(g.p[0], g.p[-1], style.streamline_seeds + 2)[1:-1]
    step = 2.0 * max(g.dx, g.dp)
    out = []
    for x in xs:
        for p in ps:
            line = integrate_streamline(flow, (x, p), step, style.streamline_length)
            if len(line.points) < 2:
                continue
            bucket = np.minimum((line.speed / peak * len(SPEED_COLOURS)).astype(int), len(SPEED_COLOURS) - 1)
            start = 0
            for k in range(1, len(bucket) + 1):
                if k == len(bucket) or bucket[k] != bucket[start]:
                    seg = line.points[start:k + 1]
                    if len(seg) >= 2:
                        out.append(f'<path class="stream" stroke="{SPEED_COLOURS[bucket[start]]}" d="{c.path(seg)}"/>')
                    start = k
    return out


def _marker(c: _Canvas, pt: dict) -> str:
    sx, sy = c.px(pt["x"]), c.py(pt["p"])
    omega = pt.get("omega")
    title = f"<title>omega={omega} at ({pt['x']:.6f}, {pt['p']:.6f})</title>"
    r = 6.0
    ring = f'<circle cx="{_fmt(sx)}" cy="{_fmt(sy)}" r="{_fmt(r)}"/>'
    if omega == 1:
        body = ring + f'<path d="M{_fmt(sx - 4)},{_fmt(sy)} L{_fmt(sx + 4)},{_fmt(sy)} M{_fmt(sx)},{_fmt(sy - 4)} L{_fmt(sx)},{_fmt(sy + 4)}"/>'
        cls = "marker plus"
    elif omega == -1:
        body = ring + f'<path d="M{_fmt(sx - 4)},{_fmt(sy)} L{_fmt(sx + 4)},{_fmt(sy)}"/>'
        cls = "marker minus"
    else:
        body = f'<circle cx="{_fmt(sx)}" cy="{_fmt(sy)}" r="{_fmt(0.6 * r)}"/>'
        cls = "marker zero"
    return f'<g class="{cls}">{title}{body}</g>'


_CSS = (
    "<style>"
    ".glyph{stroke-width:1.1;fill:none}"
    ".glyph.pos{stroke:#111111}"
    ".glyph.neg{stroke:#c0392b;stroke-dasharray:2,1.5}"
    ".overlay{stroke:#8c8c8c;stroke-width:0.6;fill:none}"
    ".stream{fill:none;stroke-width:1.0;stroke-opacity:0.8}"
    ".zero{fill:none}"
    ".marker{stroke:#000000;stroke-width:1.4}"
    ".marker.plus{fill:#ffffff}"
    ".marker.minus{fill:#ffffff}"
    ".marker.zero{fill:none}"
    "text{font-family:monospace;font-size:11px}"
    "</style>"
)


def render_panel(panel: PanelData, style: RenderStyle = RenderStyle()) -> str:
    c = _Canvas(panel.grid, style)
    s = style.size
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">',
        _CSS,
        f'<rect x="0" y="0" width="{s}" height="{s}" fill="#ffffff"/>',
        f'<rect x="{c.m}" y="{c.m}" width="{_fmt(c.inner)}" height="{_fmt(c.inner)}" fill="none" stroke="#000000"/>',
    ]
    parts += _streamlines(panel, c, style)
    for comp, closed, pts in panel.lines:
        d = c.path(pts) + (" Z" if closed else "")
        parts.append(f'<path class="zero {comp}" {LINE_STYLES[comp]} fill="none" d="{d}"/>')
    for pts in panel.stagnation_lines:
        parts.append(f'<path class="zero stagnation" {LINE_STYLES["stagnation"]} fill="none" d="{c.path(pts)}"/>')
    parts += _glyphs(panel, c, style)
    parts += [_marker(c, pt) for pt in panel.points]
    title = style.title if style.title is not None else panel.label
    if title:
        parts.append(f'<text x="{c.m}" y="{c.m - 8}">{_escape(title)}</text>')
    g = panel.grid
    parts.append(
        f'<text x="{c.m}" y="{s - 8}">x [{g.x[0]:.3g}, {g.x[-1]:.3g}]  p [{g.p[0]:.3g}, {g.p[-1]:.3g}]</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_sheet(panels: list[str], columns: int, labels: list[str] | None = None, gap: int = 8) -> str:
    """Lay out panel SVGs row by row, ``columns`` per row, as one document."""
    if not panels:
        raise ValueError("a contact sheet needs at least one panel")
    if columns < 1:
        raise ValueError("columns must be positive")
    sizes = []
    bodies = []
    for svg in panels:
        body = svg.split("?>", 1)[-1].strip()
        w = int(body.split('width="', 1)[1].split('"', 1)[0])
        h = int(body.split('height="', 1)[1].split('"', 1)[0])
        sizes.append((w, h))
        bodies.append(body)
    cw = max(w for w, _ in sizes)
    ch = max(h for _, h in sizes)
    rows = -(-len(panels) // columns)
    label_h = 14 if labels else 0
    width = columns * cw + (columns + 1) * gap
    height = rows * (ch + label_h) + (rows + 1) * gap
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for k, body in enumerate(bodies):
        r, col = divmod(k, columns)
        x = gap + col * (cw + gap)
        y = gap + r * (ch + label_h + gap)
        if labels:
            out.append(f'<text x="{x}" y="{y + 11}" font-family="monospace" font-size="11">{_escape(labels[k])}</text>')
        out.append(f'<g transform="translate({x},{y + label_h})">')
        out.append(body)
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


TRACK_COLOURS = {1: "#d62728", -1: "#e6b800", 0: "#7f7f7f", None: "#7f7f7f"}


def render_tracks(path, size: int = 480) -> str:
    """Stagnation-point paths in the phase plane, red for omega = +1, yellow for -1."""
    data = read_dump(path)
    if data["kind"] != "track_points":
        raise ValueError(f"{path} is not a track dump")
    grid = PhaseSpaceGrid.from_dict(data["header"]["grid"])
    c = _Canvas(grid, RenderStyle(size=size))
    paths: dict = {}
    for frame, _, track, x, p, omega in data["rows"]:
        paths.setdefault(track, (omega, []))[1].append((x, p))
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="#ffffff"/>',
        f'<rect x="{c.m}" y="{c.m}" width="{_fmt(c.inner)}" height="{_fmt(c.inner)}" fill="none" stroke="#000000"/>',
    ]
    for track in sorted(paths):
        omega, pts = paths[track]
        colour = TRACK_COLOURS.get(omega, "#7f7f7f")
        if len(pts) == 1:
            x, p = pts[0]
            parts.append(f'<circle class="track" cx="{_fmt(c.px(x))}" cy="{_fmt(c.py(p))}" r="1.5" fill="{colour}"/>')
        else:
            parts.append(f'<path class="track" stroke="{colour}" stroke-width="1.2" fill="none" d="{c.path(pts)}"/>')
    label = data["header"].get("label", "")
    if label:
        parts.append(f'<text x="{c.m}" y="{c.m - 8}" font-family="monospace" font-size="11">{_escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
