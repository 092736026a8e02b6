"""Render the four figure kinds from mfwaves output files.

Input schemas (consumed verbatim, never recomputed):
  profile.csv      x,h,stderr
  empirical.csv    x,survival
  compare.json     {shift, w1_after_shift, ...}
  tail.json        {gamma, right_slope, right_prefactor, left_slope, ...}
  speed_vs_n.csv   n,c_hat,ci_low,ci_high
  dispersion.json  {c, gamma, ...}   (or reference.json with c_predicted)
  pool.json        {ks_trace, iterations, ...}
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("profile_overlay", "tail_loglinear", "speed_vs_n", "ks_trace")


class SchemaError(ValueError):
    """An input file does not match the documented column schema."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: dict
    output: str
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")

    @classmethod
    def from_json(cls, path) -> "FigureSpec":
        path = Path(path)
        if not path.exists():
            raise SchemaError(f"figure spec not found: {path}")
        raw = json.loads(path.read_text())
        for key in ("kind", "inputs", "output"):
            if key not in raw:
                raise SchemaError(f"{path.name}: missing field {key!r}")
        return cls(raw["kind"], dict(raw["inputs"]), raw["output"], dict(raw.get("style", {})))


@dataclass
class RenderedFigure:
    png: Path
    svg: Path
    width_px: int
    height_px: int
    series: dict            # name -> (x, y) arrays as plotted
    annotations: list       # annotation strings as drawn


def read_csv(path, expected_columns) -> np.ndarray:
    """Load a CSV whose header must name exactly the expected columns."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file not found: {path}")
    with path.open() as fh:
        header = fh.readline().strip()
    found = [c.strip() for c in header.split(",")]
    if found != list(expected_columns):
        raise SchemaError(
            f"{path.name}: expected columns {','.join(expected_columns)}; found {','.join(found)}"
        )
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(expected_columns):
        raise SchemaError(f"{path.name}: expected {len(expected_columns)} columns")
    return data


def read_json(path, required=()) -> dict:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file not found: {path}")
    payload = json.loads(path.read_text())
    for key in required:
        if key not in payload:
            raise SchemaError(f"{path.name}: missing field {key!r}")
    return payload


def render(spec: FigureSpec) -> RenderedFigure:
    """Render one figure; writes PNG and SVG next to spec.output."""
    fig, ax = plt.subplots(figsize=tuple(spec.style.get("figsize", (6.4, 4.2))))
    series: dict = {}
    annotations: list = []
    try:
        if spec.kind == "profile_overlay":
            _profile_overlay(ax, spec, series, annotations)
        elif spec.kind == "tail_loglinear":
            _tail_loglinear(ax, spec, series, annotations)
        elif spec.kind == "speed_vs_n":
            _speed_vs_n(ax, spec, series, annotations)
        else:
            _ks_trace(ax, spec, series, annotations)
        if spec.style.get("title"):
            ax.set_title(spec.style["title"])
        fig.tight_layout()
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        png = out.with_suffix(".png")
        svg = out.with_suffix(".svg")
        dpi = int(spec.style.get("dpi", 150))
        fig.savefig(png, dpi=dpi)
        fig.savefig(svg)
        width, height = fig.canvas.get_width_height()
        return RenderedFigure(png, svg, width, height, series, annotations)
    finally:
        plt.close(fig)


def _annotate(ax, annotations, text):
    annotations.append(text)
    ax.annotate(text, xy=(0.02, 0.02), xycoords="axes fraction", fontsize=9,
                bbox={"boxstyle": "round", "fc": "white", "alpha": 0.8})


def _profile_overlay(ax, spec, series, annotations):
    predicted = read_csv(spec.inputs["predicted"], ("x", "h", "stderr"))
    empirical = read_csv(spec.inputs["empirical"], ("x", "survival"))
    shift = 0.0
    if "compare" in spec.inputs:
        shift = float(read_json(spec.inputs["compare"], required=("shift",))["shift"])
    ax.plot(predicted[:, 0], predicted[:, 1], label="predicted wave", lw=2)
    # the comparison aligned the empirical profile to the wave by this shift;
    # apply it as a pure display transform
    ax.plot(empirical[:, 0] - shift, empirical[:, 1], label="empirical (aligned)",
            lw=1.2, ls="--")
    series["predicted"] = (predicted[:, 0], predicted[:, 1])
    series["empirical"] = (empirical[:, 0] - shift, empirical[:, 1])
    ax.set_xlabel("x")
    ax.set_ylabel("survival h(x)")
    ax.legend()
    _annotate(ax, annotations, f"alignment shift = {shift:.4f}")


def _tail_loglinear(ax, spec, series, annotations):
    profile = read_csv(spec.inputs["profile"], ("x", "h", "stderr"))
    fit = read_json(spec.inputs["fit"], required=("gamma",))
    side = spec.style.get("side", "right")
    x, h = profile[:, 0], profile[:, 1]
    if side == "right":
        for key in ("right_slope", "right_prefactor"):
            if key not in fit:
                raise SchemaError(f"{Path(spec.inputs['fit']).name}: missing field {key!r}")
        slope, prefactor = fit["right_slope"], fit["right_prefactor"]
        reference = -fit["gamma"]
        keep = (h > 1e-7) & (h < 0.5)
        tail_x, tail_y = x[keep], h[keep]
        ax.set_ylabel("h(x)  [log scale]")
    elif side == "left":
        for key in ("left_slope", "left_prefactor"):
            if key not in fit:
                raise SchemaError(f"{Path(spec.inputs['fit']).name}: missing field {key!r}")
        slope, prefactor = fit["left_slope"], fit["left_prefactor"]
        reference = fit["gamma"]
        g = 1.0 - h
        keep = (g > 1e-7) & (g < 0.5)
        tail_x, tail_y = x[keep], g[keep]
        ax.set_ylabel("1 - h(x)  [log scale]")
    else:
        raise SchemaError(f"tail_loglinear: unknown side {side!r}")
    if len(tail_x) == 0:
        raise SchemaError("tail_loglinear: no profile points inside the tail window")
    ax.semilogy(tail_x, tail_y, label="profile", lw=2)
    fitted = prefactor * np.exp(slope * tail_x)
    ax.semilogy(tail_x, fitted, label="fitted tail", ls="--")
    mid = len(tail_x) // 2
    anchor = tail_y[mid] / np.exp(reference * tail_x[mid])
    ref_line = anchor * np.exp(reference * tail_x)
    ax.semilogy(tail_x, ref_line, label="reference slope", ls=":", color="gray")
    series["profile"] = (tail_x, tail_y)
    series["fitted"] = (tail_x, fitted)
    series["reference"] = (tail_x, ref_line)
    ax.set_xlabel("x")
    ax.legend()
    _annotate(ax, annotations,
              f"fitted slope = {slope:.4f} (reference {reference:.4f})")


def _speed_vs_n(ax, spec, series, annotations):
    data = read_csv(spec.inputs["csv"], ("n", "c_hat", "ci_low", "ci_high"))
    n, c_hat = data[:, 0], data[:, 1]
    yerr = np.vstack([c_hat - data[:, 2], data[:, 3] - c_hat])
    ax.errorbar(n, c_hat, yerr=np.maximum(yerr, 0.0), fmt="o-", capsize=3,
                label="measured speed")
    series["speed"] = (n, c_hat)
    if "reference" in spec.inputs:
        ref = read_json(spec.inputs["reference"])
        if "c_predicted" in ref:
            c_ref = float(ref["c_predicted"])
        elif "c" in ref:
            c_ref = float(ref["c"])
        else:
            raise SchemaError(
                f"{Path(spec.inputs['reference']).name}: missing field 'c' or 'c_predicted'"
            )
        ax.axhline(c_ref, color="gray", ls="--", label="predicted speed")
        series["reference"] = (n, np.full_like(n, c_ref))
        _annotate(ax, annotations, f"predicted speed = {c_ref:.4f}")
    ax.set_xscale("log")
    ax.set_xlabel("population size N")
    ax.set_ylabel("front speed")
    ax.legend()


def _ks_trace(ax, spec, series, annotations):
    sidecar = read_json(spec.inputs["sidecar"], required=("ks_trace",))
    trace = np.asarray(sidecar["ks_trace"], dtype=float)
    if trace.size == 0:
        raise SchemaError(f"{Path(spec.inputs['sidecar']).name}: field 'ks_trace' is empty")
    threshold = float(spec.style.get("threshold", 1e-3))
    run = int(spec.style.get("stop_run", 3))
    iters = np.arange(1, len(trace) + 1)
    ax.semilogy(iters, trace, marker=".", label="successive-pool KS")
    ax.axhline(threshold, color="gray", ls="--", label="early-stop threshold")
    series["ks_trace"] = (iters, trace)
    stop = _early_stop_index(trace, threshold, run)
    if stop is not None:
        ax.axvline(stop + 1, color="tab:red", ls=":", label="early stop")
        series["early_stop"] = (np.array([stop + 1]), np.array([trace[stop]]))
        _annotate(ax, annotations, f"early stop at iteration {stop + 1}")
    else:
        _annotate(ax, annotations, "no early stop (KS floor above threshold)")
    ax.set_xlabel("iteration")
    ax.set_ylabel("KS distance")
    ax.legend()


def _early_stop_index(trace, threshold, run):
    streak = 0
    for i, value in enumerate(trace):
        streak = streak + 1 if value < threshold else 0
        if streak >= run:
            return i
    return None
