"""Report writers: delimited text, JSON summaries, simplex SVG, PNG figures.

Text outputs are byte-deterministic.  Floats are rendered with repr(float(x))
— the shortest round-trip form — after casting numpy scalars to Python
floats, because repr(np.float64(x)) carries the dtype wrapper on numpy 2.x.
Newlines are always "\\n" regardless of platform.

The SVG writer is deliberately dependency-free and only supports n=3, where
the reduced coordinate plane is literally a drawing surface.  PNG rendering
goes through matplotlib's Agg backend and is best-effort (pixel output is
not part of any determinism contract).
"""

from __future__ import annotations

import json

import numpy as np

from .errors import UnsupportedDimensionForSvgError, ValidationError


def fmt(x) -> str:
    """Shortest exact decimal form of a float (numpy scalars included)."""
    return repr(float(x))


def write_csv(path, header, rows):
    """Write rows of mixed str/number cells; numbers go through fmt()."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, str):
                cells.append(cell)
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            else:
                cells.append(fmt(cell))
        lines.append(",".join(cells))
    data = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(data)
    return path


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    return obj


def write_json(path, payload):
    text = json.dumps(_jsonify(payload), sort_keys=True, indent=2, separators=(",", ": "))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text + "\n")
    return path


# ---------------------------------------------------------------------------
# SVG rendering of the reduced simplex for n = 3.
#
# The reduced plane coordinates x = (x1, x2) already live in 2-D; we map them
# to the canvas with y flipped (SVG y grows downward).  All coordinates are
# printed with %.4f so output is stable across runs and platforms.

_SVG_SIZE = 640.0
_SVG_MARGIN = 60.0


class SvgCanvas:
    def __init__(self, xs_extent):
        lo = np.min(xs_extent, axis=0)
        hi = np.max(xs_extent, axis=0)
        span = np.maximum(hi - lo, 1e-12)
        scale = (_SVG_SIZE - 2 * _SVG_MARGIN) / span.max()
        self._lo = lo
        self._scale = scale
        self._mid = (lo + hi) / 2.0
        self.elements = []

    def to_px(self, x):
        cx = _SVG_SIZE / 2 + (x[0] - self._mid[0]) * self._scale
        cy = _SVG_SIZE / 2 - (x[1] - self._mid[1]) * self._scale
        return cx, cy

    def polygon(self, points, fill, stroke, width=1.0, opacity=1.0):
        pts = " ".join("%.4f,%.4f" % self.to_px(p) for p in points)
        self.elements.append(
            f'<polygon points="{pts}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="%.4f" fill-opacity="%.4f"/>' % (width, opacity)
        )

    def polyline(self, points, stroke, width=1.0, dash=None):
        pts = " ".join("%.4f,%.4f" % self.to_px(p) for p in points)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.elements.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
            f'stroke-width="%.4f"{extra}/>' % width
        )

    def circle(self, x, radius, fill):
        cx, cy = self.to_px(x)
        self.elements.append(
            '<circle cx="%.4f" cy="%.4f" r="%.4f" fill="%s"/>' % (cx, cy, radius, fill)
        )

    def text(self, x, label, size=14.0, anchor="middle", dy=0.0):
        cx, cy = self.to_px(x)
        self.elements.append(
            '<text x="%.4f" y="%.4f" font-size="%.4f" text-anchor="%s" '
            'font-family="sans-serif" fill="#333333">%s</text>'
            % (cx, cy + dy, size, anchor, label)
        )

    def render(self):
        head = (
            '<svg xmlns="http://www.w3.org/2000/svg" '
            'width="%.0f" height="%.0f" viewBox="0 0 %.0f %.0f">'
            % (_SVG_SIZE, _SVG_SIZE, _SVG_SIZE, _SVG_SIZE)
        )
        body = "\n".join(self.elements)
        return head + "\n" + body + "\n</svg>\n"


def render_region_svg(path, region, pmap, arcs=()):
    """Reduced-simplex picture: outline, chamber edges, membership dots, arcs.

    Only n = 3 fits on a flat canvas; other dimensions get the PNG path.
    """
    if pmap.dim != 3:
        raise UnsupportedDimensionForSvgError(
            f"svg rendering needs n = 3, got n = {pmap.dim}"
        )
    verts = pmap.vertices()
    canvas = SvgCanvas(verts)

    canvas.polygon(verts, fill="#ffffff", stroke="#222222", width=1.5)

    # Permutation-chamber walls: lambda_i = lambda_j lines through the center.
    center = verts.mean(axis=0)
    for i, j in ((0, 1), (1, 2), (0, 2)):
        lam = np.zeros(3)
        lam[i] = lam[j] = 0.5
        edge_mid = pmap.project(lam).x
        canvas.polyline([center, edge_mid], stroke="#bbbbbb", width=1.0, dash="4,4")
    # shade the descending chamber lambda_1 >= lambda_2 >= lambda_3:
    # the triangle (vertex_1, midpoint of edge 1-2, barycenter)
    chamber = [pmap.project(np.array([1.0, 0.0, 0.0])).x,
               pmap.project(np.array([0.5, 0.5, 0.0])).x,
               center]
    canvas.polygon(chamber, fill="#88aadd", stroke="none", width=0.0, opacity=0.12)

    # interior dots shade the region; boundary dots get an accent; exterior
    # points are left blank (they are the background)
    codes = np.asarray(region.codes)
    xs = np.asarray(region.xs)
    colors = {1: "#2a7fff", 0: "#ff9900"}
    radii = {1: 2.2, 0: 2.8}
    for code in (1, 0):
        sel = xs[codes == code]
        for row in sel:
            canvas.circle(row, radii[code], colors[code])

    for arc in arcs:
        pts = np.asarray(arc)
        if len(pts) >= 2:
            canvas.polyline(pts, stroke="#cc2222", width=1.6)

    labels = ["(1,0,0)", "(0,1,0)", "(0,0,1)"]
    offsets = [(-18.0), (-18.0), (24.0)]
    for v, lab, dy in zip(verts, labels, offsets):
        canvas.text(v, lab, dy=dy)

    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(canvas.render())
    return path


# ---------------------------------------------------------------------------
# matplotlib figures (Agg, file output only)

def _plt():
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt
    return plt


def render_region_png(path, region, pmap, arcs=()):
    plt = _plt()
    n = pmap.dim
    if n == 3:
        fig, ax = plt.subplots(figsize=(7, 6.5), dpi=110)
        verts = pmap.vertices()
        loop = np.vstack([verts, verts[:1]])
        ax.plot(loop[:, 0], loop[:, 1], color="0.15", lw=1.2)
        xs = np.asarray(region.xs)
        codes = np.asarray(region.codes)
        for code, color, size, label in (
            (-1, "0.8", 2.0, "exterior"),
            (1, "tab:blue", 4.0, "interior"),
            (0, "tab:orange", 8.0, "boundary"),
        ):
            sel = xs[codes == code]
            if len(sel):
                ax.scatter(sel[:, 0], sel[:, 1], s=size, c=color, label=label, lw=0)
        for arc in arcs:
            pts = np.asarray(arc)
            if len(pts) >= 2:
                ax.plot(pts[:, 0], pts[:, 1], color="tab:red", lw=1.4)
        ax.set_aspect("equal")
        ax.set_xlabel("$x_1$")
        ax.set_ylabel("$x_2$")
        ax.legend(loc="upper right", fontsize=8, frameon=False)
    elif n == 4:
        fig = plt.figure(figsize=(7.5, 6.5), dpi=110)
        ax = fig.add_subplot(projection="3d")
        xs = np.asarray(region.xs)
        codes = np.asarray(region.codes)
        for code, color, size, label in (
            (-1, "0.85", 1.0, "exterior"),
            (1, "tab:blue", 3.0, "interior"),
            (0, "tab:orange", 6.0, "boundary"),
        ):
            sel = xs[codes == code]
            if len(sel):
                ax.scatter(sel[:, 0], sel[:, 1], sel[:, 2], s=size, c=color,
                           label=label, lw=0, alpha=0.8 if code != -1 else 0.15)
        verts = pmap.vertices()
        for i in range(len(verts)):
            for j in range(i + 1, len(verts)):
                seg = np.vstack([verts[i], verts[j]])
                ax.plot(seg[:, 0], seg[:, 1], seg[:, 2], color="0.2", lw=0.7)
        ax.set_xlabel("$x_1$")
        ax.set_ylabel("$x_2$")
        ax.set_zlabel("$x_3$")
        ax.legend(loc="upper right", fontsize=8)
    else:
        raise ValidationError(f"region figures support n = 3 or 4, got n = {n}")
    counts = region.counts()
    ax.set_title(
        "reachable-set raster: %d interior / %d boundary / %d exterior"
        % (counts.get(1, 0), counts.get(0, 0), counts.get(-1, 0)),
        fontsize=10,
    )
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_trajectory_png(path, times, lambdas, title="spectral trajectory"):
    plt = _plt()
    times = np.asarray(times)
    lambdas = np.asarray(lambdas)
    fig, ax = plt.subplots(figsize=(7, 4.2), dpi=110)
    for j in range(lambdas.shape[1]):
        ax.plot(times, lambdas[:, j], label=r"$\lambda_{%d}$" % (j + 1))
    ax.set_xlabel("t")
    ax.set_ylabel("eigenvalue")
    ax.set_title(title, fontsize=10)
    ax.legend(loc="best", fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_bound_png(path, deltas, distances, bounds):
    plt = _plt()
    deltas = np.asarray(deltas, dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 4.4), dpi=110)
    ax.loglog(deltas, distances, "o-", label="trace distance")
    ax.loglog(deltas, bounds, "s--", label="linear bound")
    ax.set_xlabel(r"$\Delta$")
    ax.set_ylabel("deviation")
    ax.set_title("book-end deviation against the linear-in-$\\Delta$ bound", fontsize=10)
    ax.legend(loc="best", fontsize=9, frameon=False)
    ax.grid(True, which="both", ls=":", lw=0.5)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
