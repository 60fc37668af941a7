"""JSON and text-table reports. No timestamps or timings, so reruns are byte-identical."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .config import RunConfig
from .generators import RNG_NAME
from .suite import ItemResult

REPORT_FORMAT = "pfrbench-report/1"


def report_document(results: Sequence[ItemResult], cfg: RunConfig | None = None) -> dict:
    items = sorted(results, key=lambda r: r.item_id)
    return {
        "format": REPORT_FORMAT,
        "rng": RNG_NAME,
        "config": None if cfg is None else cfg.to_json(),
        "pass": all(r.passed for r in items),
        "items": [r.to_json() for r in items],
    }


def render_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def render_table(doc: dict) -> str:
    lines = [f"# {doc['format']}  rng: {doc['rng']}"]
    if doc["config"] is not None:
        cfg = doc["config"]
        lines.append(f"# seed {cfg['seed']}  epsilon {cfg['epsilon']}  scale {cfg['scale']}")
    rows = [("item", "runs", "result", "claim", "lhs", "rel", "rhs")]
    for it in doc["items"]:
        for row in it["ledger"]:
            rows.append((it["id"], str(it["instances"]), "PASS" if row["pass"] else "FAIL",
                         row["claim"], row["lhs"], row["relation"], row["rhs"]))
        for cap in it["cap_violations"]:
            rows.append((it["id"], str(it["instances"]), "CAP", cap, "", "", ""))
    widths = [min(60, max(len(r[i]) for r in rows)) for i in range(len(rows[0]))]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    lines.append(f"overall: {'PASS' if doc['pass'] else 'FAIL'}")
    return "\n".join(lines) + "\n"


def emit_report(results: Sequence[ItemResult], out_dir: str | Path, cfg: RunConfig | None = None) -> tuple[Path, Path]:
    """Write ``report.json`` and ``report.txt`` under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = report_document(results, cfg)
    jpath = out_dir / "report.json"
    tpath = out_dir / "report.txt"
    jpath.write_text(render_json(doc), encoding="utf-8")
    tpath.write_text(render_table(doc), encoding="utf-8")
    return jpath, tpath
