"""Serialization of experiment results.

JSON carries the whole result except wall time, which goes to a sidecar
``timing.json`` so the other files stay byte-identical across reruns.
Trial CSV columns (version 1): arm, trial, seed, x, branch, accept.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict
from pathlib import Path

from .experiment import ArmResult, Check, ExperimentResult

CSV_VERSION = 1
TRIAL_COLUMNS = ("arm", "trial", "seed", "x", "branch", "accept")
TABLE_COLUMNS = ("check", "relation", "estimate", "radius", "exact", "bound", "verdict", "terms", "note")


def result_to_dict(result: ExperimentResult) -> dict:
    d = asdict(result)
    d.pop("wall_time")
    d["format_version"] = CSV_VERSION
    return d


def result_from_dict(d: dict) -> ExperimentResult:
    d = dict(d)
    d.pop("format_version", None)
    d["arms"] = [ArmResult(**a) for a in d["arms"]]
    d["checks"] = [Check(**c) for c in d["checks"]]
    return ExperimentResult(**d)


def to_json(result: ExperimentResult) -> str:
    return json.dumps(result_to_dict(result), indent=2, sort_keys=True) + "\n"


def result_from_json(text: str) -> ExperimentResult:
    return result_from_dict(json.loads(text))


def to_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    buf.write(f"# zkowf trials v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_COLUMNS)
    w.writerows(result.records)
    return buf.getvalue()


def _num(v) -> str:
    return "" if v is None else f"{v:.6g}" if isinstance(v, float) else str(v)


def to_table(result: ExperimentResult) -> str:
    rows = ["\t".join(TABLE_COLUMNS)]
    for c in result.checks:
        terms = ";".join(f"{k}={_num(v)}" for k, v in c.terms.items())
        rows.append("\t".join([c.name, c.relation, _num(c.estimate), _num(c.radius), _num(c.exact),
                               _num(c.bound), c.verdict, terms, c.note]))
    rows.append(f"verdict\t\t\t\t\t\t{result.verdict}\t\t")
    return "\n".join(rows) + "\n"


RENDERERS = {"json": to_json, "csv": to_csv, "tsv-table": to_table}
SUFFIX = {"json": "json", "csv": "csv", "tsv-table": "tsv"}


def render(result: ExperimentResult, fmt: str) -> str:
    try:
        return RENDERERS[fmt](result)
    except KeyError:
        raise ValueError(f"unknown format {fmt!r}") from None


def emit_report(result: ExperimentResult, fmt: str, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(result, fmt), encoding="utf-8", newline="\n")
    return path


def result_key(config_text: str, seed: int) -> str:
    return hashlib.sha256(f"{config_text}\nseed={seed}\n".encode()).hexdigest()[:16]


def persist(result: ExperimentResult, out_dir) -> Path:
    """Write every artifact to out_dir/<hash of config and seed>/."""
    target = Path(out_dir) / result_key(result.config, result.seed)
    target.mkdir(parents=True, exist_ok=True)
    emit_report(result, "json", target / "result.json")
    emit_report(result, "csv", target / "trials.csv")
    emit_report(result, "tsv-table", target / "summary.tsv")
    (target / "config.cfg").write_text(result.config, encoding="utf-8", newline="\n")
    (target / "timing.json").write_text(json.dumps({"wall_time": result.wall_time}) + "\n", encoding="utf-8")
    return target


def load_result(path) -> ExperimentResult:
    """Read a persisted result (a result directory or a result.json file)."""
    path = Path(path)
    if path.is_dir():
        path = path / "result.json"
    result = result_from_json(path.read_text(encoding="utf-8"))
    timing = path.with_name("timing.json")
    if timing.exists():
        result.wall_time = json.loads(timing.read_text(encoding="utf-8"))["wall_time"]
    return result
