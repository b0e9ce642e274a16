"""Error curves from parameter sweeps and simple trend diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..formats import atomic_write, csv_bytes, read_csv

CSV_HEADER = ["param", "value", "mean_rel_mse", "std_rel_mse", "n_seeds"]


@dataclass
class ErrorCurve:
    """Mean and spread of relative MSE against one swept parameter.

    ``values[j]`` holds the per-seed errors at ``params[j]``.
    """

    parameter_name: str
    params: list[int]
    values: list[list[float]]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.parameter_name not in ("n", "K", "N"):
            raise ValueError(f"unknown sweep parameter {self.parameter_name!r}")
        order = np.argsort(self.params, kind="stable")
        self.params = [int(self.params[i]) for i in order]
        self.values = [[float(x) for x in self.values[i]] for i in order]

    @property
    def mean(self) -> np.ndarray:
        return np.array([np.mean(v) for v in self.values])

    @property
    def std(self) -> np.ndarray:
        return np.array([np.std(v) for v in self.values])

    @property
    def points(self) -> list[tuple[int, float, float]]:
        return list(zip(self.params, self.mean.tolist(), self.std.tolist()))

    def at(self, p: int) -> float:
        return float(self.mean[self.params.index(p)])

    def csv_rows(self):
        for p, v in zip(self.params, self.values):
            yield [self.parameter_name, p, float(np.mean(v)), float(np.std(v)), len(v)]

    def to_csv(self, path):
        atomic_write(Path(path), csv_bytes(CSV_HEADER, self.csv_rows()))


def read_curve_csv(path) -> list[tuple[str, int, float, float, int]]:
    return [
        (r["param"], int(r["value"]), float(r["mean_rel_mse"]), float(r["std_rel_mse"]), int(r["n_seeds"]))
        for r in read_csv(path)
    ]


def count_inversions(ys) -> int:
    """Number of consecutive increases in a sequence meant to be non-increasing."""
    ys = np.asarray(ys, dtype=float)
    return int(np.count_nonzero(np.diff(ys) > 0))


def is_monotone_decreasing(ys, allowed_inversions: int = 0, rtol: float = 0.0) -> bool:
    ys = np.asarray(ys, dtype=float)
    rises = np.diff(ys) > rtol * np.abs(ys[:-1])
    return int(np.count_nonzero(rises)) <= allowed_inversions


def loglog_slope(xs, ys, middle_third: bool = True) -> float:
    """Least-squares slope of ``log y`` against ``log x``.

    With ``middle_third`` only the central third of the points is used
    (at least two), which avoids the small-parameter transient and the floor.
    """
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    if len(x) < 2:
        raise ValueError("need at least two points for a slope")
    if middle_third and len(x) >= 3:
        lo, hi = len(x) // 3, len(x) - len(x) // 3
        lo = min(lo, hi - 2)
        x, y = x[lo:hi], y[lo:hi]
    return float(np.polyfit(x, y, 1)[0])
