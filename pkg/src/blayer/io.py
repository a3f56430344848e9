"""Plain-text artifact formats: configs, CSV tables and run summaries.

Configs and summaries use an INI-style key/value tree (sections with
string keys); CSV files carry a header row and 17-significant-digit
floats so results round-trip exactly.
"""

from __future__ import annotations

import configparser
import os

SCHEMA_VERSION = "1"


class ConfigError(ValueError):
    """Malformed or out-of-range benchmark configuration."""


def _parser():
    p = configparser.ConfigParser(interpolation=None)
    p.optionxform = str          # keys are case sensitive
    return p


def read_config(path: str) -> dict:
    """Read a config file into {section: {key: value-string}}."""
    p = _parser()
    if not p.read(path):
        raise ConfigError(f"cannot read config {path}")
    tree = {s: dict(p[s]) for s in p.sections()}
    meta = tree.get("meta", {})
    if meta.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError("unsupported schema_version "
                          f"{meta.get('schema_version')}")
    return tree


def write_config(path: str, tree: dict) -> None:
    """Write {section: {key: value}} to an INI file (round-trip exact)."""
    p = _parser()
    out = dict(tree)
    meta = dict(out.get("meta", {}))
    meta.setdefault("schema_version", SCHEMA_VERSION)
    p["meta"] = {k: str(v) for k, v in meta.items()}
    for section, kv in out.items():
        if section == "meta":
            continue
        p[section] = {k: str(v) for k, v in kv.items()}
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        p.write(fh)


def format_float(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path: str, header: list[str], rows) -> None:
    """Comma-separated table; floats written with 17 significant digits."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = [format_float(c) if isinstance(c, (int, float)) and
                     not isinstance(c, bool) else str(c) for c in row]
            fh.write(",".join(cells) + "\n")


def read_csv(path: str):
    """Header list and rows of strings."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def write_summary(path: str, benchmark: str, status: str,
                  checks: dict, metrics: dict,
                  failure_category: str | None = None) -> None:
    """Machine-readable run summary; written even for failed runs.

    checks: name -> bool; metrics: name -> number or string.
    """
    tree = {
        "run": {"benchmark": benchmark, "status": status},
        "checks": {k: ("pass" if v else "fail") for k, v in checks.items()},
        "metrics": {k: (format_float(v) if isinstance(v, (int, float))
                        and not isinstance(v, bool) else str(v))
                    for k, v in metrics.items()},
    }
    if failure_category:
        tree["run"]["failure_category"] = failure_category
    write_config(path, tree)


def read_summary(path: str) -> dict:
    return read_config(path)
