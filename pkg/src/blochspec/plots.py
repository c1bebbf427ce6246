"""Deterministic SVG emitters: no timestamps, fixed fonts and sizes, fixed
float formatting, so golden-file comparisons are byte-stable."""

from __future__ import annotations

import math

from .errors import BlochspecError

WIDTH, HEIGHT = 640, 420
MARGIN = 54
FONT = "font-family=\"monospace\" font-size=\"11\""


class EmptyPlotError(BlochspecError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _header(title: str, comment: str) -> list:
    return [
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>",
        f"<!-- {comment} -->",
        f"<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" "
        f"viewBox=\"0 0 {WIDTH} {HEIGHT}\">",
        f"<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>",
        f"<text x=\"{WIDTH // 2}\" y=\"20\" text-anchor=\"middle\" {FONT}>{title}</text>",
    ]


def _axes(x_label: str, y_label: str) -> list:
    x0, y0, x1, y1 = MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN
    return [
        f"<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>",
        f"<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>",
        f"<text x=\"{(x0 + x1) // 2}\" y=\"{HEIGHT - 12}\" text-anchor=\"middle\" {FONT}>{x_label}</text>",
        f"<text x=\"14\" y=\"{(y0 + y1) // 2}\" text-anchor=\"middle\" {FONT} "
        f"transform=\"rotate(-90 14 {(y0 + y1) // 2})\">{y_label}</text>",
    ]


def _scale(vals, lo_px, hi_px):
    vmin, vmax = min(vals), max(vals)
    if vmax == vmin:
        vmax = vmin + 1.0
    span = vmax - vmin

    def to_px(v):
        return lo_px + (v - vmin) / span * (hi_px - lo_px)

    return to_px, vmin, vmax


def band_structure_svg(entries, comment: str) -> str:
    """Re(lambda) vs sigma for a spectrum sweep."""
    pts = [(e.sigma, lam.real) for e in entries if e.eigenvalues is not None
           for lam in e.eigenvalues]
    if not pts:
        raise EmptyPlotError("band-structure plot: no eigenvalues to draw")
    sx, *_ = _scale([p[0] for p in pts], MARGIN, WIDTH - MARGIN)
    sy, ymin, ymax = _scale([p[1] for p in pts], HEIGHT - MARGIN, MARGIN)
    lines = _header("band structure: Re(lambda) vs sigma", comment)
    lines += _axes("sigma", "Re(lambda)")
    lines.append(f"<text x=\"{MARGIN}\" y=\"{MARGIN - 6}\" {FONT}>"
                 f"Re range [{_fmt(ymin)}, {_fmt(ymax)}]</text>")
    for s, re in sorted(pts):
        lines.append(f"<circle cx=\"{_fmt(sx(s))}\" cy=\"{_fmt(sy(re))}\" r=\"1.5\" fill=\"navy\"/>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def evans_landscape_svg(re_vals, im_vals, log_mags, comment: str) -> str:
    """Grayscale log-magnitude heat map over a lambda grid."""
    if not log_mags or not re_vals or not im_vals:
        raise EmptyPlotError("evans-landscape plot: empty grid")
    lo = min(min(row) for row in log_mags)
    hi = max(max(row) for row in log_mags)
    lo = max(lo, hi - 60.0)  # clip deep zero wells so structure stays visible
    span = (hi - lo) or 1.0
    nx, ny = len(re_vals), len(im_vals)
    cw = (WIDTH - 2 * MARGIN) / nx
    ch = (HEIGHT - 2 * MARGIN) / ny
    lines = _header("Evans landscape: log|D| over lambda", comment)
    lines += _axes("Re(lambda)", "Im(lambda)")
    for iy in range(ny):
        for ix in range(nx):
            v = max(log_mags[iy][ix], lo)
            shade = int(round(235 * (v - lo) / span)) + 20
            x = MARGIN + ix * cw
            y = HEIGHT - MARGIN - (iy + 1) * ch
            lines.append(
                f"<rect x=\"{_fmt(x)}\" y=\"{_fmt(y)}\" width=\"{_fmt(cw + 0.5)}\" "
                f"height=\"{_fmt(ch + 0.5)}\" fill=\"rgb({shade},{shade},{255 - shade // 4})\"/>"
            )
    lines.append(f"<text x=\"{MARGIN}\" y=\"{MARGIN - 6}\" {FONT}>"
                 f"log|D| in [{_fmt(lo)}, {_fmt(hi)}] (dark = small)</text>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def convergence_svg(J_values, errors, fitted_rate, comment: str) -> str:
    """log error vs log J with the fitted power-law line."""
    pts = [(J, e) for J, e in zip(J_values, errors) if e > 0 and math.isfinite(e)]
    if not pts:
        raise EmptyPlotError("convergence plot: no positive errors to draw")
    lx = [math.log10(J) for J, _ in pts]
    ly = [math.log10(e) for _, e in pts]
    sx, *_ = _scale(lx, MARGIN, WIDTH - MARGIN)
    sy, ymin, ymax = _scale(ly, HEIGHT - MARGIN, MARGIN)
    lines = _header("convergence: log10 error vs log10 J", comment)
    lines += _axes("log10 J", "log10 error")
    for x, y in zip(lx, ly):
        lines.append(f"<circle cx=\"{_fmt(sx(x))}\" cy=\"{_fmt(sy(y))}\" r=\"3\" fill=\"crimson\"/>")
    if fitted_rate is not None and len(pts) >= 2:
        # least-squares line through the plotted points with the fitted slope
        x_mean = sum(lx) / len(lx)
        y_mean = sum(ly) / len(ly)
        slope10 = fitted_rate  # slope is invariant under log-base change
        xs = [min(lx), max(lx)]
        ys = [y_mean + slope10 * (x - x_mean) for x in xs]
        lines.append(f"<line x1=\"{_fmt(sx(xs[0]))}\" y1=\"{_fmt(sy(ys[0]))}\" "
                     f"x2=\"{_fmt(sx(xs[1]))}\" y2=\"{_fmt(sy(ys[1]))}\" "
                     f"stroke=\"gray\" stroke-dasharray=\"4 3\"/>")
        lines.append(f"<text x=\"{WIDTH - MARGIN}\" y=\"{MARGIN - 6}\" text-anchor=\"end\" {FONT}>"
                     f"fitted slope {fitted_rate:.3f}</text>")
    else:
        lines.append(f"<text x=\"{WIDTH - MARGIN}\" y=\"{MARGIN - 6}\" text-anchor=\"end\" {FONT}>"
                     f"errors at floating-point floor (exact)</text>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
