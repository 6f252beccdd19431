"""Experiment reports and flat-file serialization.

Reports hold tidy rows plus a metadata dict.  The CSV and markdown
emitters format numbers with repr (shortest round-trip), contain no
timestamps, and therefore produce byte-identical files for identical
plans; wall-clock timing stays in the in-memory metadata only.

Samples serialize as one coordinate row per element; tensors as their
d x d grid in row-major order.  Both are plain headerless CSV.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .datagen import Sample
from .errors import InvalidConfigError
from .spaces import SpaceDescriptor
from .tensor import TensorRep


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


@dataclass
class ExperimentReport:
    name: str
    columns: List[str]
    rows: List[tuple]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise InvalidConfigError("report row width does not match columns")

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(_fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        lines = [f"# {self.name}", ""]
        lines.append("| " + " | ".join(self.columns) + " |")
        lines.append("|" + "|".join("---" for _ in self.columns) + "|")
        lines += ["| " + " | ".join(_fmt(v) for v in row) + " |" for row in self.rows]
        extra = self.metadata.get("markdown_sections", ())
        for section in extra:
            lines += ["", section]
        version = self.metadata.get("software_version")
        if version:
            lines += ["", f"_produced by ucov {version}_"]
        return "\n".join(lines) + "\n"

    def write(self, out_dir, stem: str | None = None) -> tuple:
        """Write <stem>.csv and <stem>.md under out_dir; returns both paths."""
        import os

        os.makedirs(out_dir, exist_ok=True)
        stem = stem or self.name
        csv_path = os.path.join(out_dir, f"{stem}.csv")
        md_path = os.path.join(out_dir, f"{stem}.md")
        with open(csv_path, "w") as fh:
            fh.write(self.to_csv())
        with open(md_path, "w") as fh:
            fh.write(self.to_markdown())
        return csv_path, md_path


def grid_markdown(title: str, row_label: str, row_keys: Sequence,
                  col_label: str, col_keys: Sequence, cells: np.ndarray,
                  digits: int = 4) -> str:
    """Small pivot-table renderer: cells[i, j] -> markdown grid."""
    head = [f"{row_label} \\ {col_label}"] + [str(k) for k in col_keys]
    lines = [f"## {title}", "", "| " + " | ".join(head) + " |",
             "|" + "|".join("---" for _ in head) + "|"]
    for i, rk in enumerate(row_keys):
        vals = [f"{cells[i, j]:.{digits}g}" for j in range(len(col_keys))]
        lines.append("| " + " | ".join([str(rk)] + vals) + " |")
    return "\n".join(lines)


def _write_matrix(arr: np.ndarray, path: str):
    with open(path, "w") as fh:
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_sample_csv(sample: Sample, path: str):
    _write_matrix(sample.coords, path)


def read_sample_csv(path: str, norm_kind: str = "l2") -> Sample:
    coords = np.loadtxt(path, delimiter=",", ndmin=2)
    return Sample(SpaceDescriptor(coords.shape[1], norm_kind), coords)


def write_tensor_csv(t: TensorRep, path: str):
    _write_matrix(t.grid, path)


def read_tensor_csv(path: str, norm_kind: str = "l2") -> TensorRep:
    grid = np.loadtxt(path, delimiter=",", ndmin=2)
    if grid.shape[0] != grid.shape[1]:
        raise InvalidConfigError(f"tensor grid must be square, got {grid.shape}")
    return TensorRep(SpaceDescriptor(grid.shape[0], norm_kind), grid)
