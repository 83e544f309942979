"""Diff-stable report writers and the run configuration format.

Floats are always written with 17 significant digits.  JSON output keeps
key order; CSV uses comma separators and LF line endings.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
from dataclasses import dataclass, field, fields

import numpy as np


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float printed as %.17g (non-finite floats become strings)."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        text = fmt_float(obj)
        if not math.isfinite(obj):
            return json.dumps(text)
        if all(c in "-0123456789" for c in text):
            text += ".0"
        return text
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(_plain(v), (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return json.dumps(str(obj))


def _cell(v):
    v = _plain(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    if v is None:
        return ""
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=",", lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_text(path, text: str):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)


def profile_table(profile, r) -> str:
    """Header lines echoing the parameters, then columns r, U, dU/dr."""
    u, du = profile.evaluate(r)
    du = du + 0.0  # no "-0" in the table
    par = profile.params
    head = [
        "# hslab radial profile",
        f"# N = {par.N}",
        f"# s = {fmt_float(par.s)}",
        f"# p = {fmt_float(par.p)}",
        f"# family = {par.family}",
        f"# source = {profile.source}",
        f"# shoot_param = {fmt_float(profile.shoot_param)}",
        f"# boundary_slope = {fmt_float(profile.boundary_slope)}",
    ]
    if "residual" in profile.info:
        head.append(f"# residual = {fmt_float(profile.info['residual'])}")
    head.append("# columns: r U dU/dr")
    body = [f"{fmt_float(a)} {fmt_float(b)} {fmt_float(c)}" for a, b, c in zip(r, u, du)]
    return "\n".join(head + body) + "\n"


def read_profile_table(text: str):
    """Inverse of :func:`profile_table`: (header dict, array of rows)."""
    meta, rows = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            if "=" in line:
                k, v = line[1:].split("=", 1)
                meta[k.strip()] = v.strip()
        elif line.strip():
            rows.append([float(x) for x in line.split()])
    return meta, np.array(rows)


# --- run configuration ----------------------------------------------------------

_CONFIG_SECTION = "run"


@dataclass
class RunConfig:
    """Flat description of one command invocation (serializes to an INI section)."""

    command: str
    N: int | None = None
    s: str | None = None
    p: str | None = None
    family: str | None = None
    tol: float | None = None
    n_grid: int | None = None
    h: float | None = None
    output: str | None = None
    fmt: str = "json"
    extra: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"[{_CONFIG_SECTION}]"]
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "extra" or v is None:
                continue
            lines.append(f"{f.name} = {fmt_float(v) if isinstance(v, float) else v}")
        for k in sorted(self.extra):
            lines.append(f"x.{k} = {self.extra[k]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp.read_string(text)
        if not cp.has_section(_CONFIG_SECTION):
            raise ValueError(f"config needs a [{_CONFIG_SECTION}] section")
        sec = cp[_CONFIG_SECTION]
        kw, extra = {}, {}
        types = {"N": int, "n_grid": int, "tol": float, "h": float}
        for k, v in sec.items():
            if k.startswith("x."):
                extra[k[2:]] = v
            elif k in types:
                kw[k] = types[k](v)
            else:
                kw[k] = v
        if "command" not in kw:
            raise ValueError("config lacks 'command'")
        return cls(extra=extra, **kw)


def load_config(path) -> dict:
    """Flat key/value view of an INI file: [defaults] first, then per-command sections."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    return {sec: dict(cp[sec]) for sec in cp.sections()}
