"""Result rows and deterministic CSV emission with a provenance header.

Rows are sorted before writing and floats are serialized with ``repr``, so
re-running a fixed configuration reproduces byte-identical files.  The
provenance header carries a hash of the driving configuration and the
package version, never a timestamp.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable


def _version() -> str:
    from . import __version__

    return __version__


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def provenance_line(config: dict) -> str:
    return f"# acrlab config={config_hash(config)} version={_version()}"


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    condition: str
    seed: int | None
    metric: str
    value: float | int | str

    def sort_key(self):
        return (
            self.experiment,
            self.condition,
            -1 if self.seed is None else self.seed,
            self.metric,
        )


class ResultTable:
    """Append-only (experiment, condition, seed, metric, value) rows."""

    COLUMNS = ("experiment", "condition", "seed", "metric", "value")

    def __init__(self):
        self.rows: list[ResultRow] = []

    def add(self, experiment, condition, seed, metric, value) -> None:
        self.rows.append(ResultRow(experiment, condition, seed, metric, value))

    def write_csv(self, path, config: dict) -> None:
        lines = [provenance_line(config), ",".join(self.COLUMNS)]
        for row in sorted(self.rows, key=ResultRow.sort_key):
            seed = "" if row.seed is None else str(row.seed)
            lines.append(
                ",".join(
                    (row.experiment, row.condition, seed, row.metric, _cell(row.value))
                )
            )
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def write_csv(path, header: Iterable[str], rows: Iterable[Iterable], config: dict) -> None:
    """Plain CSV with the provenance comment line; rows written as given."""
    lines = [provenance_line(config), ",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
