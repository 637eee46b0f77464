"""Flow files, ordering files and run reports."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .graph import CrossingReport, GraphError, LayeredGraph, Ordering, ingest


class InputError(ValueError):
    """Malformed input file; the message names the file and the offending field."""


def _flow_json(path: Path, cycle: bool | None) -> LayeredGraph:
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be an object")
    for key in ("nodes", "links"):
        if not isinstance(data.get(key), list):
            raise InputError(f"{path}: missing list field {key!r}")
    level_of = {}
    for k, node in enumerate(data["nodes"]):
        if not isinstance(node, dict) or "id" not in node or "level" not in node:
            raise InputError(f"{path}: nodes[{k}] needs 'id' and 'level'")
        if node["id"] in level_of:
            raise InputError(f"{path}: nodes[{k}] repeats id {node['id']!r}")
        level_of[node["id"]] = node["level"]
    flows = []
    for k, link in enumerate(data["links"]):
        if not isinstance(link, dict) or not {"source", "target", "value"} <= link.keys():
            raise InputError(f"{path}: links[{k}] needs 'source', 'target' and 'value'")
        flows.append((link["source"], link["target"], link["value"]))
    if cycle is None:
        cycle = bool(data.get("cycle", False))
    return ingest(flows, level_of, cycle)


def _flow_csv(path: Path, levels_path: Path, cycle: bool) -> LayeredGraph:
    level_of = {}
    with open(levels_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "level"} <= set(reader.fieldnames):
            raise InputError(f"{levels_path}: header must contain id,level")
        for row in reader:
            try:
                level_of[row["id"]] = int(row["level"])
            except (TypeError, ValueError):
                raise InputError(f"{levels_path}: line {reader.line_num}: bad level {row['level']!r}") from None
    flows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"source", "target", "value"} <= set(reader.fieldnames):
            raise InputError(f"{path}: header must contain source,target,value")
        for row in reader:
            try:
                value = float(row["value"])
            except (TypeError, ValueError):
                raise InputError(f"{path}: line {reader.line_num}: bad value {row['value']!r}") from None
            flows.append((row["source"], row["target"], value))
    return ingest(flows, level_of, cycle)


def load_flows(path: str | Path, levels: str | Path | None = None, cycle: bool | None = None) -> LayeredGraph:
    """Read a JSON flow file, or a CSV of links plus an ``id,level`` sidecar.

    ``cycle=None`` takes the flag from the JSON file (CSV defaults to parallel).
    """
    path = Path(path)
    try:
        if path.suffix.lower() == ".csv":
            if levels is None:
                raise InputError(f"{path}: CSV flows need a levels file (id,level)")
            return _flow_csv(path, Path(levels), bool(cycle))
        return _flow_json(path, cycle)
    except GraphError as exc:
        raise InputError(f"{path}: {exc}") from None


def dump_flows(g: LayeredGraph) -> str:
    """Serialise ``g`` as a flow JSON document (dummy vertices included as nodes)."""
    data = {
        "nodes": [{"id": v, "level": i + 1} for i, lv in enumerate(g.levels) for v in lv],
        "links": [{"source": e.source, "target": e.target, "value": e.weight} for e in g.all_edges()],
        "cycle": g.is_cycle,
    }
    return json.dumps(data, indent=1, sort_keys=True)


def save_ordering(ordering: Ordering, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ordering.to_dict(), indent=1) + "\n")


def load_ordering(path: str | Path) -> Ordering:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict) or not all(isinstance(v, list) for v in data.values()):
        raise InputError(f"{path}: expected an object of level -> [vertex ids]")
    try:
        return Ordering.from_dict(data)
    except (GraphError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def write_crossing_csv(report: CrossingReport, path: str | Path, cycle: bool = False) -> None:
    """One row per level pair (1-based, binding pair labelled ``n-1``) plus a total row."""
    n_pairs = len(report.per_level)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair", "weighted"])
        for i, x in enumerate(report.per_level):
            label = f"{i + 1}-{i + 2}" if not (cycle and i == n_pairs - 1) else f"{i + 1}-1"
            w.writerow([label, repr(x)])
        w.writerow(["total", repr(report.weighted)])
        w.writerow(["unweighted", report.unweighted])
