"""Campaign CSV, per-feature SVG charts and the run manifest."""

import csv
import hashlib
import io
import json
from pathlib import Path

from .. import __version__
from .._jsonable import plain
from ..errors import DataError, EmptyInput
from .campaign import CampaignReport, CampaignRow

CAMPAIGN_HEADER = ["feature", "checkpoint", "mean_l2", "surrogate_misclass", "target_model",
                   "target_misclass", "n"]


def _num(v):
    return "" if v is None else repr(float(v))


def campaign_csv_text(report):
    """One line per (cell, target); a cell without targets gets one line."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CAMPAIGN_HEADER)
    for r in report.rows:
        targets = list(report.target_names) or [None]
        for name in targets:
            rate = r.target_misclass.get(name) if name is not None else None
            w.writerow([r.feature, r.checkpoint, _num(r.mean_l2), _num(r.surrogate_misclass),
                        name or "", _num(rate), r.n])
    return buf.getvalue()


def _opt_float(text):
    return float(text) if text != "" else None


def read_campaign_csv(path):
    """Rebuild a :class:`CampaignReport` (without batches) from ``campaign.csv``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CAMPAIGN_HEADER:
            raise DataError(f"{path}: expected header {','.join(CAMPAIGN_HEADER)}")
        cells = {}
        targets = []
        for row in reader:
            if not row:
                continue
            feature, cp, l2, sur, target, rate, n = row
            key = (feature, int(cp))
            if key not in cells:
                cells[key] = {"l2": _opt_float(l2), "sur": _opt_float(sur), "n": int(n), "t": {}}
            if target:
                cells[key]["t"][target] = _opt_float(rate)
                if target not in targets:
                    targets.append(target)
    rows = [CampaignRow(f, cp, c["l2"], c["sur"], c["t"], c["n"],
                        error=None if c["l2"] is not None else "failed")
            for (f, cp), c in cells.items()]
    return CampaignReport(rows=rows, target_names=tuple(targets))


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_W, _H = 640, 360
_PAD_L, _PAD_R, _PAD_T, _PAD_B = 70, 70, 40, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _fmt(v):
    return f"{v:.2f}"


def _polyline(xs, ys, color, dashed=False):
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return (f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"{dash}/>')


def feature_svg(feature, rows, target_names=()):
    """Line chart of mean L2 (left axis) and misclassification rates (right axis)."""
    rows = [r for r in rows if not r.failed]
    plot_w = _W - _PAD_L - _PAD_R
    plot_h = _H - _PAD_T - _PAD_B
    n = len(rows)
    xs = [_PAD_L + (plot_w * i / (n - 1) if n > 1 else plot_w / 2) for i in range(n)]
    l2 = [r.mean_l2 for r in rows]
    l2_max = max(l2) if l2 and max(l2) > 0 else 1.0

    def y_l2(v):
        return _PAD_T + plot_h * (1.0 - v / l2_max)

    def y_rate(v):
        return _PAD_T + plot_h * (1.0 - v)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="22" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15">{feature}: mean L2 and misclassification vs checkpoint</text>',
        f'<line x1="{_PAD_L}" y1="{_PAD_T + plot_h}" x2="{_PAD_L + plot_w}" '
        f'y2="{_PAD_T + plot_h}" stroke="black"/>',
        f'<line x1="{_PAD_L}" y1="{_PAD_T}" x2="{_PAD_L}" y2="{_PAD_T + plot_h}" stroke="black"/>',
        f'<line x1="{_PAD_L + plot_w}" y1="{_PAD_T}" x2="{_PAD_L + plot_w}" '
        f'y2="{_PAD_T + plot_h}" stroke="black"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        y = _fmt(_PAD_T + plot_h * (1.0 - frac))
        out.append(f'<text x="{_PAD_L - 6}" y="{y}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">{l2_max * frac:.4g}</text>')
        out.append(f'<text x="{_PAD_L + plot_w + 6}" y="{y}" font-family="sans-serif" '
                   f'font-size="11">{frac:.1f}</text>')
    for x, r in zip(xs, rows):
        out.append(f'<text x="{_fmt(x)}" y="{_PAD_T + plot_h + 16}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{r.checkpoint}</text>')
    out.append(f'<text x="{_W // 2}" y="{_H - 10}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12">checkpoint</text>')

    series = [("mean L2", [(x, y_l2(v)) for x, v in zip(xs, l2)], False),
              ("surrogate misclass",
               [(x, y_rate(r.surrogate_misclass)) for x, r in zip(xs, rows)], True)]
    for name in target_names:
        pts = [(x, r.target_misclass.get(name)) for x, r in zip(xs, rows)]
        series.append((f"{name} misclass", [(x, y_rate(v)) for x, v in pts if v is not None], True))
    for i, (label, pts, dashed) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        if pts:
            out.append(_polyline([p[0] for p in pts], [p[1] for p in pts], color, dashed))
        ly = _PAD_T + 14 * i + 4
        out.append(f'<text x="{_PAD_L + 8}" y="{ly}" font-family="sans-serif" font-size="11" '
                   f'fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(report, directory):
    """Write ``campaign.csv`` and ``<feature>.svg`` per attacked feature.

    All content is rendered before anything touches the disk, so an empty
    or unrenderable report leaves no partial files. Returns written paths.
    """
    if not report.rows:
        raise EmptyInput("campaign report has no rows")
    files = {"campaign.csv": campaign_csv_text(report)}
    features = list(dict.fromkeys(r.feature for r in report.rows))
    for f in features:
        rows = [r for r in report.rows if r.feature == f]
        files[f"{f}.svg"] = feature_svg(f, rows, report.target_names)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in files.items():
        p = directory / name
        p.write_text(text, encoding="utf-8", newline="")
        paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

def config_hash(config):
    text = json.dumps(plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def file_sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, config, seed, artifacts=(), command=None):
    """Manifest with config hash, seed, tool version and artifact digests.

    No timestamps or absolute paths are recorded, so identical runs give
    identical manifests.
    """
    path = Path(path)
    doc = {
        "tool": "flowgauntlet",
        "version": __version__,
        "command": command,
        "seed": plain(seed),
        "config_sha256": config_hash(config),
        "config": plain(config),
        "artifacts": {Path(a).name: file_sha256(a) for a in artifacts},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
