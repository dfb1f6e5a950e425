# report_gen.py
"""Report assembly for CLI runs: a JSON payload with the config echo, CSV
tables through pandas, and a short markdown summary."""
import io
import json
import math

import pandas as pd

from utils import VERSION


def _clean(obj):
    """Make a result JSON-safe: non-finite floats become strings, tuples lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "tolist") and callable(obj.tolist):
        return _clean(obj.tolist())
    return obj


# --- Payload ---
OUTPUT_ONLY_FIELDS = ("out",)


def build_report(command, config, result, tables=None, exit_code=0):
    """Everything a run produced; no timestamps so identical runs give identical bytes.

    Where the report is written is not part of the run, so output-only fields
    are left out of the config echo.
    """
    config = {k: v for k, v in config.items() if k not in OUTPUT_ONLY_FIELDS}
    return _clean({
        "command": command,
        "version": VERSION,
        "seed": config.get("seed"),
        "config": config,
        "exit_code": exit_code,
        "result": result,
        "tables": tables or {},
    })


def primary_table(payload):
    """Rows of the first table, or the flattened result when a command has none."""
    tables = payload.get("tables") or {}
    if tables:
        return tables[sorted(tables)[0]]
    flat = pd.json_normalize(payload.get("result", {}), sep=".")
    return flat.to_dict(orient="records")


def render_json(payload):
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def render_csv(payload):
    rows = primary_table(payload)
    df = pd.DataFrame(rows)
    buf = io.StringIO()
    df.to_csv(buf, index=False, float_format="%.17g", lineterminator="\n")
    return buf.getvalue()


def render(payload, fmt="json"):
    if fmt == "json":
        return render_json(payload)
    if fmt == "csv":
        return render_csv(payload)
    raise ValueError(f"unknown report format {fmt!r}")


def write_report(payload, fmt="json", out=None):
    """Write the report to `out` (a path) and return its text."""
    text = render(payload, fmt)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


# --- Markdown summary ---
_STATUS = {0: "computed", 1: "property refuted", 2: "input error"}


def summary_markdown(payload):
    config = payload.get("config", {})
    result = payload.get("result", {}) or {}
    md_lines = [f"# fock-preserve report: {payload.get('command')}",
                f"**Version:** {payload.get('version')}  **Seed:** {payload.get('seed')}",
                f"**Status:** {_STATUS.get(payload.get('exit_code'), 'unknown')}",
                "\n## Settings"]
    for key in ("degree", "trials", "tol", "region", "field", "mode"):
        if config.get(key) is not None:
            md_lines.append(f"- **{key}:** {config[key]}")

    md_lines.append("\n## Result")
    headline = result.get("headline")
    if headline:
        md_lines.append(headline)
    for key in sorted(result):
        value = result[key]
        if key == "headline" or isinstance(value, (dict, list)):
            continue
        md_lines.append(f"- {key}: {value}")

    for name in sorted(payload.get("tables") or {}):
        rows = payload["tables"][name]
        md_lines.append(f"\n### {name} ({len(rows)} rows)")
        if rows:
            df = pd.DataFrame(rows[:10])
            md_lines.append("| " + " | ".join(str(c) for c in df.columns) + " |")
            md_lines.append("|" + "---|" * len(df.columns))
            for rec in df.itertuples(index=False):
                md_lines.append("| " + " | ".join(_cell(v) for v in rec) + " |")
            if len(rows) > 10:
                md_lines.append(f"_{len(rows) - 10} more rows in the report._")
        else:
            md_lines.append("_No rows._")
    return "\n".join(md_lines) + "\n"


def _cell(value):
    text = f"{value:.6g}" if isinstance(value, float) else str(value)
    return text.replace("|", r"\|").replace("\n", " ")
