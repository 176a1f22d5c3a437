"""Render the four standard diagnosis figures from a sweep CSV.

Input is the versioned CSV emitted by the simulation harness. Only the
aggregate rows (trial column equal to "agg") are consumed; statistics are
never recomputed here. The aggregate rows store mean accuracy in the
``correct`` column and mean slots in ``slots_used``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

EXPECTED_VERSION = "1"
AGGREGATE_TAG = "agg"

Y_COLUMNS = {"mean_accuracy": "correct", "mean_slots": "slots_used"}

METHOD_STYLE = {
    "sortpm": dict(marker="o", color="#0173b2", label="sortPM"),
    "bisect": dict(marker="s", color="#de8f05", label="bisection"),
}


class SchemaVersionError(ValueError):
    """CSV schema version differs from the one this renderer understands."""


class EmptyAggregateError(ValueError):
    """No aggregate rows available for the requested figure."""


@dataclass(frozen=True)
class FigureSpec:
    name: str
    x_axis: str                 # p_t_dbm | m_antennas
    y_axis: str                 # mean_accuracy | mean_slots
    fixed: dict = field(default_factory=dict)
    x_label: str = ""
    y_label: str = ""
    title: str = ""


FIGURES = {
    "fig8": FigureSpec(
        name="fig8", x_axis="p_t_dbm", y_axis="mean_accuracy",
        fixed={"m_antennas": 4},
        x_label="Transmit power (dBm)", y_label="Diagnosis accuracy",
        title="Accuracy vs transmit power (M=4)",
    ),
    "fig9": FigureSpec(
        name="fig9", x_axis="p_t_dbm", y_axis="mean_slots",
        fixed={"m_antennas": 4},
        x_label="Transmit power (dBm)", y_label="Time slots used",
        title="Measurement cost vs transmit power (M=4)",
    ),
    "fig10": FigureSpec(
        name="fig10", x_axis="m_antennas", y_axis="mean_accuracy",
        fixed={"p_t_dbm": 16.0},
        x_label="Receive antennas M", y_label="Diagnosis accuracy",
        title="Accuracy vs antenna count (P=16 dBm)",
    ),
    "fig11": FigureSpec(
        name="fig11", x_axis="m_antennas", y_axis="mean_slots",
        fixed={"p_t_dbm": 16.0},
        x_label="Receive antennas M", y_label="Time slots used",
        title="Measurement cost vs antenna count (P=16 dBm)",
    ),
}


def read_aggregates(csv_path: str) -> list[dict]:
    """Aggregate rows as dicts with numeric fields parsed."""
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "version" not in reader.fieldnames:
            raise SchemaVersionError(
                f"{csv_path} has no version column; expected schema version "
                f"{EXPECTED_VERSION}"
            )
        rows = []
        for raw in reader:
            if raw["version"] != EXPECTED_VERSION:
                raise SchemaVersionError(
                    f"{csv_path} has schema version {raw['version']!r}; "
                    f"expected {EXPECTED_VERSION}"
                )
            if raw["trial"] != AGGREGATE_TAG:
                continue
            rows.append({
                "method": raw["method"],
                "p_t_dbm": float(raw["p_t_dbm"]),
                "m_antennas": int(raw["m_antennas"]),
                "correct": float(raw["correct"]),
                "slots_used": float(raw["slots_used"]),
            })
    if not rows:
        raise EmptyAggregateError(f"{csv_path} contains no aggregate rows")
    return rows


@dataclass
class RenderResult:
    figure: str
    out_path: str
    series: dict[str, tuple[list[float], list[float]]]


def extract_series(rows: list[dict], spec: FigureSpec) -> dict:
    """Per-method (x, y) series for one figure spec."""
    matching = [
        r for r in rows
        if all(r[key] == value for key, value in spec.fixed.items())
    ]
    if not matching:
        raise EmptyAggregateError(
            f"no aggregate rows match {spec.fixed} for {spec.name}"
        )
    series = {}
    y_col = Y_COLUMNS[spec.y_axis]
    for method in sorted({r["method"] for r in matching}):
        points = sorted(
            (r[spec.x_axis], r[y_col]) for r in matching if r["method"] == method
        )
        xs = [float(p[0]) for p in points]
        ys = [float(p[1]) for p in points]
        series[method] = (xs, ys)
    return series


def render(csv_path: str, figure: str, out_path: str) -> RenderResult:
    """Draw one figure and write it to out_path (format from the suffix)."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {sorted(FIGURES)}")
    spec = FIGURES[figure]
    rows = read_aggregates(csv_path)
    series = extract_series(rows, spec)

    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for method, (xs, ys) in series.items():
        style = METHOD_STYLE.get(method, dict(marker="x", label=method))
        ax.plot(xs, ys, linewidth=1.4, markersize=5, **style)
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    ax.set_title(spec.title, fontsize=10)
    if spec.y_axis == "mean_accuracy":
        ax.set_ylim(-0.02, 1.05)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=160)
    plt.close(fig)
    return RenderResult(figure=figure, out_path=out_path, series=series)
