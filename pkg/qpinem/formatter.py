#!/usr/bin/env python3
"""
CSV writers and console summaries for simulation results.

Every CSV starts with a '#' metadata block (schema, version, seed, config
echo, leakage total). Floats are written with repr so reruns with the
same inputs produce byte-identical files.
"""

import csv
import io
import json
import logging
import math
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from rich.console import Console
from rich.table import Table

from . import __version__
from .chain import Trajectory
from .fockspace import PhotonPure, PhotonState, distribution
from .scattering import JointPure

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

TRAJECTORY_COLUMNS = (
    "step",
    "measured_k",
    "mean_n",
    "var_n",
    "mandel_q",
    "theta",
    "theta_r2",
    "eff_alpha",
    "purity",
    "leakage",
)


def format_value(value: Any) -> str:
    """CSV cell text: repr for floats, empty for None and NaN."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "" if math.isnan(value) else repr(value)
    return str(value)


def compact_json(doc: Any) -> str:
    return json.dumps(doc, separators=(",", ":"), sort_keys=True)


class Formatter:
    """Writes result files that share one metadata block.

    Args:
        config: validated configuration echoed into every header
        seed: base seed of the run, None when nothing is sampled
        precision: significant digits in console summaries
        plain: disable colors in console output
    """

    def __init__(
        self,
        config: Dict[str, Any],
        seed: Optional[int] = None,
        precision: int = 6,
        plain: bool = False,
    ):
        self.config = config
        self.seed = seed
        self.precision = precision
        self.plain = plain
        self.written: List[str] = []

    def header(self, leakage_total: float = 0.0, extra: Optional[Dict[str, Any]] = None) -> List[str]:
        """Metadata lines, each starting with '# '."""
        lines = [
            f"# schema={SCHEMA_VERSION}",
            f"# qpinem_version={__version__}",
            f"# seed={format_value(self.seed)}",
            f"# config={compact_json(self.config)}",
            f"# leakage_total={format_value(float(leakage_total))}",
        ]
        for key, value in (extra or {}).items():
            text = compact_json(value) if isinstance(value, (dict, list)) else format_value(value)
            lines.append(f"# {key}={text}")
        return lines

    def write_rows(
        self,
        path: str,
        columns: Sequence[str],
        rows: Iterable[Sequence[Any]],
        leakage_total: float = 0.0,
        extra: Optional[Dict[str, Any]] = None,
    ) -> str:
        """Write a CSV file with the metadata block and a header row."""
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)

        with open(path, "w", encoding="utf-8", newline="") as handle:
            for line in self.header(leakage_total, extra):
                handle.write(line + "\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(value) for value in row])

        self.written.append(path)
        logger.info("Wrote %s", path)
        return path

    def write_trajectory(
        self,
        path: str,
        trajectory: Trajectory,
        extra_columns: Sequence[str] = (),
        extra: Optional[Dict[str, Any]] = None,
    ) -> str:
        """trajectory.csv: one row per step, initial state first."""
        columns = TRAJECTORY_COLUMNS + tuple(extra_columns)
        rows = ([getattr(record, name) for name in columns] for record in trajectory.records)
        return self.write_rows(path, columns, rows, trajectory.leakage_total, extra)

    def write_snapshot(self, path: str, state: PhotonState, extra: Optional[Dict[str, Any]] = None) -> str:
        """state_snapshot.csv: photon distribution, amplitudes for pure states only."""
        probs = distribution(state)
        if isinstance(state, PhotonPure):
            rows = (
                (n, probs[n], state.amps[n].real, state.amps[n].imag) for n in range(probs.size)
            )
        else:
            rows = ((n, probs[n], None, None) for n in range(probs.size))
        return self.write_rows(
            path, ("n", "probability", "re_amp", "im_amp"), rows, state.discarded_weight, extra
        )

    def write_jointmap(self, path: str, joint: JointPure, extra: Optional[Dict[str, Any]] = None) -> str:
        """jointmap.csv: |c_{k,n}|^2 for every populated (k, n)."""
        probs = joint.probabilities()
        rows = (
            (int(joint.ks[row]), int(n), probs[row, n])
            for row, n in zip(*np.nonzero(probs))
        )
        return self.write_rows(path, ("k", "n", "probability"), rows, joint.leakage, extra)

    def write_spectrum(
        self,
        path: str,
        ks: Sequence[int],
        probabilities: Sequence[float],
        leakage_total: float = 0.0,
        extra: Optional[Dict[str, Any]] = None,
    ) -> str:
        """electron_spectrum.csv: electron energy-loss probabilities P(k)."""
        rows = zip((int(k) for k in ks), probabilities)
        return self.write_rows(path, ("k", "probability"), rows, leakage_total, extra)

    def summary(self, title: str, rows: Sequence[Tuple[str, Any]]) -> str:
        """Render a two-column rich table of labelled values."""
        output = io.StringIO()
        console = Console(file=output, width=120, color_system=None if self.plain else "auto")

        table = Table(title=title)
        table.add_column("Quantity")
        table.add_column("Value", justify="right")
        for label, value in rows:
            table.add_row(label, self._display(value))

        console.print(table)
        return output.getvalue()

    def _display(self, value: Any) -> str:
        if value is None:
            return "-"
        if isinstance(value, (float, np.floating)):
            return f"{float(value):.{self.precision}g}"
        if isinstance(value, complex):
            return f"{value.real:.{self.precision}g}{value.imag:+.{self.precision}g}i"
        return str(value)


def format_summary(title: str, rows: Sequence[Tuple[str, Any]], precision: int = 6, plain: bool = False) -> str:
    """Convenience wrapper rendering a summary table without a metadata context."""
    return Formatter({}, precision=precision, plain=plain).summary(title, rows)


__all__ = [
    "SCHEMA_VERSION",
    "TRAJECTORY_COLUMNS",
    "Formatter",
    "format_value",
    "compact_json",
    "format_summary",
]
