"""CSV writers and figure rendering for experiment reports.

CSV schemas are frozen (one header row, floats with 6 significant digits)
so seeded runs are byte-reproducible; figures are rendered alongside the
delimited output with matplotlib's Agg backend.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Mapping, Sequence

from .harness import MetricsReport

_METHOD_ORDER = ("proposed", "one_by_one", "all_sensors", "clairvoyant")
_METHOD_LABELS = {
    "proposed": "group testing",
    "one_by_one": "one-by-one",
    "all_sensors": "all sensors",
    "clairvoyant": "clairvoyant",
}


def _fmt(value: float) -> str:
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return format(value, ".6g")


def _ordered(reports: Mapping[str, MetricsReport]) -> list[MetricsReport]:
    return [reports[m] for m in _METHOD_ORDER if m in reports]


def write_rmse_csv(path, reports: Mapping[str, MetricsReport]) -> None:
    """Schema: step, method, rmse_pos, rmse_vel (step is 1-based)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "method", "rmse_pos", "rmse_vel"])
        for rep in _ordered(reports):
            for k in range(rep.rmse_position.shape[0]):
                w.writerow([k + 1, rep.method, _fmt(rep.rmse_position[k]), _fmt(rep.rmse_velocity[k])])


def write_errors_csv(path, rows: Sequence[tuple[float, MetricsReport]]) -> None:
    """Schema: Rb, method, pfa, pm. Rows only for detecting methods."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Rb", "method", "pfa", "pm"])
        for rb, rep in rows:
            if not math.isnan(rep.p_fa):
                w.writerow([_fmt(rb), rep.method, _fmt(rep.p_fa), _fmt(rep.p_m)])


def write_tests_csv(path, rows: Sequence[tuple[float, MetricsReport]]) -> None:
    """Schema: Rb, method, avg_tests, bound.

    The one-by-one row reports its nominal K*N cost, matching how the
    baseline's budget is defined; measured evaluations stay available on
    the MetricsReport.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Rb", "method", "avg_tests", "bound"])
        for rb, rep in rows:
            if math.isnan(rep.avg_chi2_tests):
                continue
            shown = rep.nominal_chi2_tests if not math.isnan(rep.nominal_chi2_tests) else rep.avg_chi2_tests
            w.writerow([_fmt(rb), rep.method, _fmt(shown), _fmt(rep.bound)])


def write_sweep_csv(path, rows: Sequence[tuple[float, Mapping[str, MetricsReport]]]) -> None:
    """Schema: Rb, pfa_1, pfa_2, pm_1, pm_2, tests_1, tests_2, bound.

    Column suffix 1 is the one-by-one baseline, 2 the group-testing method.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Rb", "pfa_1", "pfa_2", "pm_1", "pm_2", "tests_1", "tests_2", "bound"])
        for rb, reports in rows:
            obo, prop = reports["one_by_one"], reports["proposed"]
            w.writerow(
                [
                    _fmt(rb),
                    _fmt(obo.p_fa),
                    _fmt(prop.p_fa),
                    _fmt(obo.p_m),
                    _fmt(prop.p_m),
                    _fmt(obo.nominal_chi2_tests),
                    _fmt(prop.avg_chi2_tests),
                    _fmt(prop.bound),
                ]
            )


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_rmse(out_dir, reports: Mapping[str, MetricsReport]) -> list[Path]:
    """Render RMSE-vs-time figures next to rmse.csv; returns written paths."""
    plt = _pyplot()
    out_dir = Path(out_dir)
    written = []
    for attr, label, fname in (
        ("rmse_position", "position RMSE", "rmse_position.png"),
        ("rmse_velocity", "velocity RMSE", "rmse_velocity.png"),
    ):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for rep in _ordered(reports):
            series = getattr(rep, attr)
            ax.plot(range(1, series.shape[0] + 1), series, label=_METHOD_LABELS[rep.method])
        ax.set_xlabel("time step")
        ax.set_ylabel(label)
        ax.set_yscale("log")
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = out_dir / fname
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def plot_sweep(out_dir, rows: Sequence[tuple[float, Mapping[str, MetricsReport]]]) -> list[Path]:
    """Render error-rate and test-count curves over the Rb grid."""
    plt = _pyplot()
    out_dir = Path(out_dir)
    rbs = [rb for rb, _ in rows]
    series = {
        "one-by-one": [reports["one_by_one"] for _, reports in rows],
        "group testing": [reports["proposed"] for _, reports in rows],
    }
    written = []

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name, reps in series.items():
        ax.semilogx(rbs, [r.p_m for r in reps], "o-", label=f"{name} miss")
        ax.semilogx(rbs, [r.p_fa for r in reps], "s--", label=f"{name} false alarm")
    ax.set_xlabel("bias covariance Rb")
    ax.set_ylabel("error probability")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = out_dir / "sweep_error_rates.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogx(rbs, [r.nominal_chi2_tests for r in series["one-by-one"]], "o-", label="one-by-one (nominal)")
    ax.semilogx(rbs, [r.avg_chi2_tests for r in series["group testing"]], "s-", label="group testing (measured)")
    ax.semilogx(rbs, [r.bound for r in series["group testing"]], "k--", label="group-testing bound")
    ax.set_xlabel("bias covariance Rb")
    ax.set_ylabel("chi-square tests per window")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = out_dir / "sweep_chi2_tests.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written
