"""
Result emission: CSV, JSON lines and a minimal SVG chart

Every format echoes the resolved run configuration, so a file can be
re-run to reproduce its counts.
"""
import csv
import io
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence
from xml.sax.saxutils import escape

from .errors import DomainError
from .schemas import EstimateRecord
from .services.engine import SWEEP_ALIASES

CSV_COLUMNS = [
    "experiment", "experiment_args", "d", "p", "eps", "K", "pn", "gamma", "N", "M", "max_diag", "box",
    "quenched", "trials", "successes", "refused", "p_hat", "ci_lo", "ci_hi", "level", "interval", "seed",
    "sweep_key", "sweep_value", "spec_digest", "config",
]
ORIENTED_COLUMNS = ["m", "gamma", "event", "trials", "successes", "p_hat", "ci_lo", "ci_hi"]


def spec_value(spec: Dict[str, Any], key: str) -> Any:
    node: Any = spec
    for part in SWEEP_ALIASES.get(key, key).split("."):
        if not isinstance(node, dict) or part not in node:
            return None
        node = node[part]
    return node


def _pn_text(pn: Optional[Dict[str, Any]]) -> str:
    if not pn:
        return ""
    kind = pn["kind"]
    if kind == "harmonic":
        return f"harmonic:{pn['c']}"
    if kind == "constant":
        return f"constant:{pn['q']}"
    return "custom:" + ",".join(str(v) for v in pn["values"])


def csv_row(record: EstimateRecord, sweep_key: Optional[str] = None) -> Dict[str, Any]:
    spec = record.spec
    params = spec.get("params") or {}
    cp = spec.get("cp") or {}
    args = {k: v for k, v in spec["experiment"].items() if k != "kind"}
    return {
        "experiment": record.experiment,
        "experiment_args": json.dumps(args, sort_keys=True),
        "d": params.get("d", ""),
        "p": params.get("p", ""),
        "eps": params.get("eps", ""),
        "K": params.get("K", ""),
        "pn": _pn_text(params.get("pn")),
        "gamma": "" if spec.get("gamma") is None else spec["gamma"],
        "N": cp.get("N", ""),
        "M": cp.get("M", ""),
        "max_diag": cp.get("max_diag", ""),
        "box": record.box or "",
        "quenched": "" if spec.get("quenched") is None else spec["quenched"],
        "trials": record.trials,
        "successes": record.successes,
        "refused": record.refused,
        "p_hat": record.p_hat,
        "ci_lo": record.ci_lo,
        "ci_hi": record.ci_hi,
        "level": record.level,
        "interval": record.interval,
        "seed": record.master_seed,
        "sweep_key": sweep_key or "",
        "sweep_value": "" if sweep_key is None else spec_value(spec, sweep_key),
        "spec_digest": record.spec_digest,
        "config": json.dumps(record.config, sort_keys=True) if record.config else "",
    }


def render_csv(records: Iterable[EstimateRecord], sweep_key: Optional[str] = None) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(csv_row(r, sweep_key))
    return buf.getvalue()


def render_jsonl(records: Iterable[EstimateRecord]) -> str:
    return "".join(r.model_dump_json() + "\n" for r in records)


def parse_jsonl(text: str) -> List[EstimateRecord]:
    return [EstimateRecord.model_validate_json(line) for line in text.splitlines() if line.strip()]


def render_svg(records: Sequence[EstimateRecord], sweep_key: Optional[str] = None,
               width: int = 640, height: int = 400) -> str:
    """p_hat with CI whiskers against the sweep variable (record index when there is none)"""
    if not records:
        raise DomainError("an SVG chart needs at least one record")
    xs = []
    for i, r in enumerate(records):
        v = spec_value(r.spec, sweep_key) if sweep_key else None
        xs.append(float(v) if isinstance(v, (int, float)) else float(i))
    margin = 48
    x_lo, x_hi = min(xs), max(xs)
    span = (x_hi - x_lo) or 1.0

    def sx(x: float) -> float:
        return margin + (x - x_lo) / span * (width - 2 * margin)

    def sy(y: float) -> float:
        return height - margin - y * (height - 2 * margin)

    config = records[0].config or {}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f"<desc>{escape(json.dumps(config, sort_keys=True))}</desc>",
        f'<line x1="{margin}" y1="{sy(0):.1f}" x2="{width - margin}" y2="{sy(0):.1f}" stroke="black"/>',
        f'<line x1="{margin}" y1="{sy(0):.1f}" x2="{margin}" y2="{sy(1):.1f}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle">{escape(sweep_key or "point")}</text>',
        f'<text x="12" y="{height / 2:.0f}" transform="rotate(-90 12 {height / 2:.0f})" '
        f'text-anchor="middle">p_hat</text>',
    ]
    points = " ".join(f"{sx(x):.1f},{sy(r.p_hat):.1f}" for x, r in zip(xs, records))
    parts.append(f'<polyline points="{points}" fill="none" stroke="steelblue"/>')
    for x, r in zip(xs, records):
        cx = sx(x)
        parts.append(f'<line x1="{cx:.1f}" y1="{sy(r.ci_lo):.1f}" x2="{cx:.1f}" y2="{sy(r.ci_hi):.1f}" stroke="gray"/>')
        parts.append(f'<circle cx="{cx:.1f}" cy="{sy(r.p_hat):.1f}" r="3" fill="steelblue"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render(records: Sequence[EstimateRecord], fmt: str, sweep_key: Optional[str] = None) -> str:
    if fmt == "csv":
        return render_csv(records, sweep_key)
    if fmt == "jsonl":
        return render_jsonl(records)
    if fmt == "svg":
        return render_svg(records, sweep_key)
    raise DomainError(f"unknown output format {fmt!r}")


def emit(records: Sequence[EstimateRecord], fmt: str, path: Optional[str] = None,
         sweep_key: Optional[str] = None) -> str:
    """Render, write to `path` when one is given, and return the text; OSError propagates"""
    text = render(records, fmt, sweep_key)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def render_oriented_csv(rows: Iterable[Dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=ORIENTED_COLUMNS, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
