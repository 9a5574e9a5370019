"""MPS reader/writer.

Files are written section by section in the classic fixed layout (NAME, ROWS,
COLUMNS, RHS, RANGES, BOUNDS, ENDATA) with integer columns wrapped in
INTORG/INTEND markers.  Column and row names never contain blanks, so the
fields are also valid free-format MPS, which is what lets names run past the
8-character fixed-field limit.  Every column gets explicit bounds whenever they
differ from the default ``[0, +inf)``, and integer columns always do, because
solvers disagree on the default upper bound of marked integers.

The objective constant is written as the negated RHS of the objective row.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .model import MilpModel, ModelBuilder

MAX_NAME = 255
_SECTIONS = ("NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA")
_OBJ = "COST"


class MpsParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def _num(v: float) -> str:
    return repr(float(v))


def _check_name(name: str) -> str:
    if not name or len(name) > MAX_NAME or any(ch.isspace() for ch in name):
        raise ValueError(f"name {name!r} not representable in MPS")
    return name


def export_mps(model: MilpModel, path: str | Path) -> Path:
    path = Path(path)
    obj_name = _OBJ
    while obj_name in model.row_names:
        obj_name += "_"
    lines = [f"NAME          {_check_name(model.name or 'model')}"]
    if model.maximize:
        lines += ["OBJSENSE", "    MAX"]
    lines.append("ROWS")
    lines.append(f" N  {obj_name}")
    for name, s in zip(model.row_names, model.sense):
        lines.append(f" {s}  {_check_name(name)}")

    by_col: list[list[tuple[str, float]]] = [[] for _ in range(model.n_cols)]
    for name, (cols, coefs) in zip(model.row_names, model.rows):
        for j, a in zip(cols.tolist(), coefs.tolist()):
            by_col[j].append((name, a))

    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for j, cname in enumerate(model.col_names):
        _check_name(cname)
        if model.integer[j] and not in_int:
            lines.append(f"    MARKER{marker:<6d}  'MARKER'                 'INTORG'")
            marker += 1
            in_int = True
        elif not model.integer[j] and in_int:
            lines.append(f"    MARKER{marker:<6d}  'MARKER'                 'INTEND'")
            marker += 1
            in_int = False
        entries = by_col[j]
        if model.obj[j] != 0.0:
            entries = [(obj_name, model.obj[j])] + entries
        if not entries:
            # keep the column visible to readers
            entries = [(obj_name, 0.0)]
        for rname, a in entries:
            lines.append(f"    {cname:<10s}  {rname:<10s}  {_num(a)}")
    if in_int:
        lines.append(f"    MARKER{marker:<6d}  'MARKER'                 'INTEND'")

    lines.append("RHS")
    if model.objective_offset != 0.0:
        lines.append(f"    RHS         {obj_name:<10s}  {_num(-model.objective_offset)}")
    for name, b in zip(model.row_names, model.rhs):
        if b != 0.0:
            lines.append(f"    RHS         {name:<10s}  {_num(b)}")
    lines.append("RANGES")
    lines.append("BOUNDS")
    for j, cname in enumerate(model.col_names):
        lo, hi = model.lb[j], model.ub[j]
        if lo == hi:
            lines.append(f" FX BND         {cname:<10s}  {_num(lo)}")
            continue
        if not model.integer[j] and lo == 0.0 and hi == np.inf:
            continue
        if lo == -np.inf and hi == np.inf:
            lines.append(f" FR BND         {cname}")
            continue
        if lo == -np.inf:
            lines.append(f" MI BND         {cname}")
        elif lo != 0.0 or model.integer[j]:
            lines.append(f" LO BND         {cname:<10s}  {_num(lo)}")
        if hi != np.inf:
            lines.append(f" UP BND         {cname:<10s}  {_num(hi)}")
        elif model.integer[j]:
            lines.append(f" PL BND         {cname}")
    lines.append("ENDATA")
    path.write_text("\n".join(lines) + "\n")
    return path


def import_mps(path: str | Path) -> MilpModel:
    """Parse a (fixed or free layout) MPS file into a :class:`MilpModel`.

    Marked integer columns without explicit bounds default to ``[0, +inf)``.
    """
    path = Path(path)
    name = path.stem
    maximize = False
    obj_row: str | None = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    col_order: list[str] = []
    col_int: dict[str, bool] = {}
    coefs: dict[str, dict[str, float]] = {}
    obj: dict[str, float] = {}
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    lb: dict[str, float] = {}
    ub: dict[str, float] = {}
    offset = 0.0
    section: str | None = None
    seen: list[str] = []
    in_int = False

    def enter(sec: str, lineno: int) -> None:
        order = _SECTIONS.index(sec)
        if seen and _SECTIONS.index(seen[-1]) >= order:
            raise MpsParseError(lineno, f"section {sec} out of order after {seen[-1]}")
        if sec in ("COLUMNS", "RHS", "RANGES", "BOUNDS") and "ROWS" not in seen:
            raise MpsParseError(lineno, f"section {sec} before ROWS")
        if sec in ("RHS", "RANGES", "BOUNDS") and "COLUMNS" not in seen:
            raise MpsParseError(lineno, f"section {sec} before COLUMNS")
        seen.append(sec)

    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("*"):
                continue
            if not line[0].isspace():
                head = line.split()
                sec = head[0].upper()
                if sec not in _SECTIONS:
                    raise MpsParseError(lineno, f"unknown section {head[0]!r}")
                enter(sec, lineno)
                section = sec
                if sec == "NAME" and len(head) > 1:
                    name = head[1]
                if sec == "OBJSENSE" and len(head) > 1:
                    maximize = head[1].upper() in ("MAX", "MAXIMIZE")
                if sec == "ENDATA":
                    break
                continue
            f = line.split()
            if section is None or section == "NAME":
                raise MpsParseError(lineno, "data line outside a section")
            if section == "OBJSENSE":
                maximize = f[0].upper() in ("MAX", "MAXIMIZE")
            elif section == "ROWS":
                if len(f) != 2:
                    raise MpsParseError(lineno, "ROWS entry needs type and name")
                t, rname = f[0].upper(), f[1]
                if t == "N":
                    if obj_row is None:
                        obj_row = rname
                    continue
                if t not in ("L", "E", "G"):
                    raise MpsParseError(lineno, f"bad row type {f[0]!r}")
                if rname in row_sense:
                    raise MpsParseError(lineno, f"duplicate row {rname}")
                row_sense[rname] = t
                row_order.append(rname)
                coefs[rname] = {}
            elif section == "COLUMNS":
                if len(f) >= 3 and f[1].strip("'").upper() == "MARKER":
                    kind = f[2].strip("'").upper()
                    if kind == "INTORG":
                        in_int = True
                    elif kind == "INTEND":
                        in_int = False
                    else:
                        raise MpsParseError(lineno, f"bad marker {f[2]!r}")
                    continue
                if len(f) not in (3, 5):
                    raise MpsParseError(lineno, "COLUMNS entry needs 3 or 5 fields")
                cname = f[0]
                if cname not in col_int:
                    col_order.append(cname)
                    col_int[cname] = in_int
                for rname, val in zip(f[1::2], f[2::2]):
                    try:
                        a = float(val)
                    except ValueError:
                        raise MpsParseError(lineno, f"bad number {val!r}") from None
                    if rname == obj_row:
                        obj[cname] = obj.get(cname, 0.0) + a
                    elif rname in coefs:
                        coefs[rname][cname] = coefs[rname].get(cname, 0.0) + a
                    else:
                        raise MpsParseError(lineno, f"unknown row {rname!r}")
            elif section in ("RHS", "RANGES"):
                pairs = f[1:] if len(f) % 2 == 1 else f
                if len(pairs) not in (2, 4):
                    raise MpsParseError(lineno, f"{section} entry malformed")
                for rname, val in zip(pairs[0::2], pairs[1::2]):
                    try:
                        a = float(val)
                    except ValueError:
                        raise MpsParseError(lineno, f"bad number {val!r}") from None
                    if section == "RHS" and rname == obj_row:
                        offset = -a
                    elif rname not in row_sense:
                        raise MpsParseError(lineno, f"unknown row {rname!r}")
                    elif section == "RHS":
                        rhs[rname] = a
                    else:
                        ranges[rname] = a
            elif section == "BOUNDS":
                t = f[0].upper()
                if t in ("FR", "MI", "PL", "BV"):
                    if len(f) < 2:
                        raise MpsParseError(lineno, "BOUNDS entry malformed")
                    cname = f[2] if len(f) >= 3 else f[1]
                    val = None
                else:
                    if len(f) not in (3, 4):
                        raise MpsParseError(lineno, "BOUNDS entry malformed")
                    cname = f[-2]
                    try:
                        val = float(f[-1])
                    except ValueError:
                        raise MpsParseError(lineno, f"bad number {f[-1]!r}") from None
                if cname not in col_int:
                    raise MpsParseError(lineno, f"unknown column {cname!r}")
                if t == "UP":
                    ub[cname] = val
                elif t == "LO":
                    lb[cname] = val
                elif t == "FX":
                    lb[cname] = ub[cname] = val
                elif t == "FR":
                    lb[cname], ub[cname] = -np.inf, np.inf
                elif t == "MI":
                    lb[cname] = -np.inf
                elif t == "PL":
                    ub[cname] = np.inf
                elif t == "BV":
                    lb[cname], ub[cname] = 0.0, 1.0
                    col_int[cname] = True
                else:
                    raise MpsParseError(lineno, f"bad bound type {f[0]!r}")
        else:
            if section != "ENDATA":
                raise MpsParseError(lineno, "missing ENDATA")

    mb = ModelBuilder(name)
    idx = {}
    for cname in col_order:
        idx[cname] = mb.add_var(cname, cname, lb.get(cname, 0.0), ub.get(cname, np.inf),
                                obj.get(cname, 0.0), col_int[cname])
    for rname in row_order:
        terms = [(idx[c], a) for c, a in coefs[rname].items()]
        s, b = row_sense[rname], rhs.get(rname, 0.0)
        if rname not in ranges:
            mb.add_row(terms, s, b, rname)
            continue
        r = ranges[rname]
        if s == "E":
            lo, hi = (b, b + abs(r)) if r >= 0 else (b + r, b)
        elif s == "L":
            lo, hi = b - abs(r), b
        else:
            lo, hi = b, b + abs(r)
        mb.add_row(terms, "G", lo, rname)
        mb.add_row(terms, "L", hi, rname + "_rng")
    return mb.build(maximize=maximize, objective_offset=offset)
