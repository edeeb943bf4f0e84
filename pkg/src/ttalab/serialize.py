"""Config files, trajectory CSVs, run manifests, and SVG line charts.

Config files are flat JSON objects with dotted keys:

    {
      "model.mu":    [0.6567, 0.1, ...],   target-domain class mean
      "model.sigma": 0.78,                 noise scale, >= 0
      "model.dim":   10,                   must equal len(model.mu)
      "loss.rule":   "hard" | "conj",
      "loss.family": "square" | "logistic" | "exp",
      "run.mode":    "stochastic" | "population",
      "run.eta":     1.0,                  step size, > 0
      "run.batch":   32,                   mini-batch size (optional, default 32)
      "run.horizon": 500,
      "run.seed":    0,
      "init.w":      [1.0, 0.0, ...]       initial predictor
    }

Trajectory CSVs carry the exact header `t,a,b,r,cos,loss01`, then one comment
block (lines starting with `#`) holding the serialized config and run
metadata, then the data rows.  Floats are written with shortest round-trip
repr; infinities serialize as literal `inf` / `-inf`.  Identical configs
produce byte-identical CSVs.

SVG charts are plain polyline drawings built only from values that are also
in the CSVs, so every chart can be regenerated from its CSV alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import ExperimentConfig, Mode, TrajectoryPoint
from .losses import make_loss
from .model import GaussianModel

__all__ = [
    "ConfigError",
    "TRAJECTORY_HEADER",
    "PRNG_ID",
    "parse_config_file",
    "config_flat",
    "csv_with_meta_text",
    "trajectory_csv_text",
    "write_trajectory_csv",
    "read_csv_with_meta",
    "format_value",
    "RunManifest",
    "write_manifest",
    "svg_line_chart",
]

TRAJECTORY_HEADER = "t,a,b,r,cos,loss01"
PRNG_ID = "numpy-pcg64-seedsequence"


class ConfigError(ValueError):
    """Invalid or incomplete run configuration; message names the field."""


_REQUIRED_KEYS = (
    "model.mu", "model.sigma", "model.dim",
    "loss.rule", "loss.family",
    "run.mode", "run.eta", "run.horizon", "run.seed",
    "init.w",
)
_OPTIONAL_KEYS = ("run.batch",)


def parse_config_file(path: str | Path) -> ExperimentConfig:
    """Parse and validate a flat JSON config into an ExperimentConfig."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a flat JSON object")

    unknown = sorted(set(raw) - set(_REQUIRED_KEYS) - set(_OPTIONAL_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    missing = [k for k in _REQUIRED_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"missing config key(s): {', '.join(missing)}")

    mu = _vector(raw, "model.mu")
    sigma = _number(raw, "model.sigma")
    dim = _integer(raw, "model.dim")
    if dim != mu.size:
        raise ConfigError(f"model.dim: is {dim} but model.mu has length {mu.size}")
    try:
        model = GaussianModel(mu=mu, sigma=sigma)
    except ValueError as exc:
        raise ConfigError(f"model.sigma/model.mu: {exc}") from None

    try:
        loss = make_loss(str(raw["loss.rule"]), str(raw["loss.family"]))
    except ValueError:
        raise ConfigError(
            f"loss.rule/loss.family: unknown combination "
            f"({raw['loss.rule']!r}, {raw['loss.family']!r})"
        ) from None

    mode_text = str(raw["run.mode"]).lower()
    try:
        mode = Mode(mode_text)
    except ValueError:
        raise ConfigError(f"run.mode: must be 'stochastic' or 'population', got {mode_text!r}") from None

    w_init = _vector(raw, "init.w")
    batch = _integer(raw, "run.batch") if "run.batch" in raw else 32

    try:
        return ExperimentConfig(
            model=model,
            loss=loss,
            eta=_number(raw, "run.eta"),
            mode=mode,
            horizon=_integer(raw, "run.horizon"),
            seed=_integer(raw, "run.seed"),
            w_init=w_init,
            batch_size=batch,
        )
    except ValueError as exc:
        raise ConfigError(_name_config_field(str(exc))) from None


def _name_config_field(message: str) -> str:
    prefixes = {
        "eta": "run.eta", "horizon": "run.horizon", "batch": "run.batch",
        "seed": "run.seed", "w ": "init.w", "w m": "init.w",
    }
    for frag, key in prefixes.items():
        if message.startswith(frag):
            return f"{key}: {message}"
    return message


def _vector(raw: dict, key: str) -> np.ndarray:
    value = raw[key]
    if (not isinstance(value, list) or not value
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ConfigError(f"{key}: must be a non-empty list of numbers")
    return np.asarray(value, dtype=float)


def _number(raw: dict, key: str) -> float:
    value = raw[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{key}: must be a number")
    return float(value)


def _integer(raw: dict, key: str) -> int:
    value = raw[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{key}: must be an integer")
    return int(value)


def config_flat(config: ExperimentConfig) -> dict:
    """Canonical flat-key serialization of a config (key order fixed)."""
    return {
        "model.mu": [float(v) for v in config.model.mu],
        "model.sigma": config.model.sigma,
        "model.dim": config.model.d,
        "loss.rule": config.loss.rule.value,
        "loss.family": config.loss.family.value,
        "run.mode": config.mode.value,
        "run.eta": config.eta,
        "run.batch": config.batch_size,
        "run.horizon": config.horizon,
        "run.seed": config.seed,
        "init.w": [float(v) for v in config.w_init],
    }


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def csv_with_meta_text(header: str, rows: list[list], meta: dict) -> str:
    """CSV layout shared by all emitters: header, `#` metadata block, rows."""
    lines = [header]
    for key, value in meta.items():
        lines.append(f"# {key} = {json.dumps(value)}")
    lines.append(f"# prng = {json.dumps(PRNG_ID)}")
    lines.append(f"# code_version = {json.dumps(__version__)}")
    for row in rows:
        lines.append(",".join(format_value(cell) for cell in row))
    return "\n".join(lines) + "\n"


def trajectory_csv_text(points: list[TrajectoryPoint], meta: dict) -> str:
    """Render a trajectory as CSV: header, `#` metadata block, data rows."""
    meta = dict(meta)
    meta["overflow"] = any(p.overflow for p in points)
    rows = [[p.t, p.a, p.b, p.r, p.cos, p.loss01] for p in points]
    return csv_with_meta_text(TRAJECTORY_HEADER, rows, meta)


def write_trajectory_csv(path: str | Path, points: list[TrajectoryPoint],
                         meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(trajectory_csv_text(points, meta), encoding="utf-8")
    return path


def read_csv_with_meta(path: str | Path) -> tuple[list[str], list[list], dict]:
    """Read back a CSV with a leading header and one `#` metadata block.

    Returns (column names, rows, metadata dict); numeric cells come back as
    floats, anything else as the raw string.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file")
    columns = lines[0].split(",")
    meta: dict = {}
    rows: list[list] = []
    for line in lines[1:]:
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = json.loads(value.strip())
        elif line:
            rows.append([_cell(cell) for cell in line.split(",")])
    return columns, rows, meta


def _cell(text: str):
    try:
        return float(text)
    except ValueError:
        return text


@dataclass(frozen=True)
class RunManifest:
    """Provenance record for one run: config, code version, seed, outputs."""

    config: dict
    code_version: str
    root_seed: int
    prng: str
    created_utc: str
    outputs: tuple[str, ...]
    notes: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "code_version": self.code_version,
            "root_seed": self.root_seed,
            "prng": self.prng,
            "created_utc": self.created_utc,
            "outputs": list(self.outputs),
            "notes": self.notes,
        }
        return json.dumps(payload, indent=2) + "\n"


def write_manifest(path: str | Path, config: ExperimentConfig,
                   outputs: list[str | Path], notes: dict | None = None) -> RunManifest:
    manifest = RunManifest(
        config=config_flat(config),
        code_version=__version__,
        root_seed=config.seed,
        prng=PRNG_ID,
        created_utc=datetime.now(timezone.utc).isoformat(),
        outputs=tuple(str(p) for p in outputs),
        notes=dict(notes or {}),
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.to_json(), encoding="utf-8")
    return manifest


# --- SVG ------------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#2ca02c", "#d62728", "#ff7f0e", "#9467bd", "#8c564b")
_CANVAS_W, _CANVAS_H = 720, 460
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 72, 24, 40, 56


def svg_line_chart(series: list[tuple[str, list[float], list[float]]],
                   title: str, xlabel: str, ylabel: str,
                   hlines: list[tuple[str, float]] | None = None) -> str:
    """Axis-labelled polyline chart; no plotting dependency.

    series is a list of (label, xs, ys).  hlines draws dashed horizontal
    reference lines.  Non-finite points are dropped from the polylines.
    """
    hlines = hlines or []
    xs_all: list[float] = []
    ys_all: list[float] = []
    for _, xs, ys in series:
        for x, y in zip(xs, ys):
            if math.isfinite(x) and math.isfinite(y):
                xs_all.append(x)
                ys_all.append(y)
    ys_all.extend(y for _, y in hlines)
    if not xs_all:
        raise ValueError("no finite data to plot")

    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    y_pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    plot_w = _CANVAS_W - _MARGIN_L - _MARGIN_R
    plot_h = _CANVAS_H - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_CANVAS_W}" '
        f'height="{_CANVAS_H}" viewBox="0 0 {_CANVAS_W} {_CANVAS_H}">',
        f'<rect width="{_CANVAS_W}" height="{_CANVAS_H}" fill="white"/>',
        f'<text x="{_CANVAS_W / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{_esc(title)}</text>',
    ]

    # axes box and ticks
    parts.append(
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333" stroke-width="1"/>'
    )
    for i in range(5):
        fx = x_lo + (x_hi - x_lo) * i / 4
        fy = y_lo + (y_hi - y_lo) * i / 4
        parts.append(
            f'<line x1="{px(fx):.1f}" y1="{_MARGIN_T + plot_h}" x2="{px(fx):.1f}" '
            f'y2="{_MARGIN_T + plot_h + 5}" stroke="#333"/>'
            f'<text x="{px(fx):.1f}" y="{_MARGIN_T + plot_h + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{fx:.4g}</text>'
        )
        parts.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{py(fy):.1f}" x2="{_MARGIN_L}" '
            f'y2="{py(fy):.1f}" stroke="#333"/>'
            f'<text x="{_MARGIN_L - 8}" y="{py(fy) + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{fy:.4g}</text>'
        )
    parts.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{_CANVAS_H - 14}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{_esc(xlabel)}</text>'
    )
    parts.append(
        f'<text x="18" y="{_MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {_MARGIN_T + plot_h / 2:.1f})">{_esc(ylabel)}</text>'
    )

    for label, y in hlines:
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{py(y):.1f}" x2="{_MARGIN_L + plot_w}" '
            f'y2="{py(y):.1f}" stroke="#777" stroke-dasharray="6,4"/>'
            f'<text x="{_MARGIN_L + plot_w - 4}" y="{py(y) - 5:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="#555">{_esc(label)}</text>'
        )

    for k, (label, xs, ys) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        coords = " ".join(
            f"{px(x):.2f},{py(y):.2f}"
            for x, y in zip(xs, ys)
            if math.isfinite(x) and math.isfinite(y)
        )
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.6"/>'
        )
        ly = _MARGIN_T + 16 + 16 * k
        parts.append(
            f'<line x1="{_MARGIN_L + 10}" y1="{ly - 4}" x2="{_MARGIN_L + 34}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
            f'<text x="{_MARGIN_L + 40}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{_esc(label)}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
