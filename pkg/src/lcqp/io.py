"""Plain-text problem files and JSON result records.

A problem file is a sequence of ``[section]`` blocks. Vectors occupy one
line, matrices one line per row, numbers separated by whitespace. ``#``
starts a comment. Example::

    [dimensions]
    n 2
    n_c 1
    n_A 0
    [Q]
    2 0
    0 2
    [g]
    -2 -2
    [L]
    1 0
    [R]
    0 1
    [ell_L]
    0
    [ell_R]
    0
    [obj_const]
    2

Omitted bound sections default to infinite bounds, except ``ell_L`` and
``ell_R`` which are required whenever ``n_c > 0``. Numbers are written with
17 significant digits so files round-trip bit-exactly; infinite bounds are
written ``inf`` and ``-inf``.
"""

from __future__ import annotations

import json

import numpy as np

from .model import LcqpProblem

VECTOR_SECTIONS = {
    # section: (attribute, length key)
    "g": ("g", "n"),
    "ell_L": ("lb_L", "n_c"), "u_L": ("ub_L", "n_c"),
    "ell_R": ("lb_R", "n_c"), "u_R": ("ub_R", "n_c"),
    "ell_A": ("lb_A", "n_A"), "u_A": ("ub_A", "n_A"),
    "ell_x": ("lb_x", "n"), "u_x": ("ub_x", "n"),
    "x0": ("x0", "n"),
}
MATRIX_SECTIONS = {"Q": ("n", "n"), "L": ("n_c", "n"), "R": ("n_c", "n"), "A": ("n_A", "n")}
SCALAR_SECTIONS = ("obj_const", "name")
SECTION_ORDER = ("dimensions", "name", "obj_const", "Q", "g", "L", "R", "A", "ell_L", "u_L",
                 "ell_R", "u_R", "ell_A", "u_A", "ell_x", "u_x", "x0")


class ProblemFileError(ValueError):
    """Malformed problem file; the message starts with the line number."""

    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def format_number(v) -> str:
    v = float(v)
    if v == np.inf:
        return "inf"
    if v == -np.inf:
        return "-inf"
    return f"{v:.17g}"


def _parse_number(tok, line):
    try:
        v = float(tok)
    except ValueError:
        raise ProblemFileError(f"not a number: {tok!r}", line) from None
    if np.isnan(v):
        raise ProblemFileError("NaN is not allowed", line)
    return v


def _split_sections(text):
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ProblemFileError(f"bad section header {line!r}", lineno)
            current = line[1:-1].strip()
            known = {"dimensions", *VECTOR_SECTIONS, *MATRIX_SECTIONS, *SCALAR_SECTIONS}
            if current not in known:
                raise ProblemFileError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ProblemFileError(f"duplicate section [{current}]", lineno)
            sections[current] = (lineno, [])
            continue
        if current is None:
            raise ProblemFileError("data before the first section header", lineno)
        sections[current][1].append((lineno, line))
    return sections


def _dimensions(sections):
    if "dimensions" not in sections:
        raise ProblemFileError("missing [dimensions] section", 1)
    head, lines = sections["dimensions"]
    dims = {}
    for lineno, line in lines:
        parts = line.split()
        if len(parts) != 2 or parts[0] not in ("n", "n_c", "n_A"):
            raise ProblemFileError(f"expected 'n|n_c|n_A <count>', got {line!r}", lineno)
        try:
            val = int(parts[1])
        except ValueError:
            raise ProblemFileError(f"not an integer: {parts[1]!r}", lineno) from None
        if val < 0:
            raise ProblemFileError("dimensions must be nonnegative", lineno)
        dims[parts[0]] = val
    for key in ("n", "n_c", "n_A"):
        if key not in dims:
            raise ProblemFileError(f"missing dimension {key}", head)
    if dims["n"] < 1:
        raise ProblemFileError("n must be at least 1", head)
    return dims


def _read_matrix(name, entry, rows, cols):
    head, lines = entry
    if len(lines) != rows:
        where = lines[-1][0] if lines else head
        raise ProblemFileError(f"[{name}] needs {rows} rows, got {len(lines)}", where)
    out = np.zeros((rows, cols))
    for i, (lineno, line) in enumerate(lines):
        toks = line.split()
        if len(toks) != cols:
            raise ProblemFileError(f"row of [{name}] needs {cols} values, got {len(toks)}", lineno)
        out[i] = [_parse_number(t, lineno) for t in toks]
    return out


def _read_vector(name, entry, length):
    head, lines = entry
    toks = []
    for lineno, line in lines:
        toks.extend((t, lineno) for t in line.split())
    if len(toks) != length:
        where = lines[-1][0] if lines else head
        raise ProblemFileError(f"[{name}] needs {length} values, got {len(toks)}", where)
    return np.array([_parse_number(t, ln) for t, ln in toks], dtype=float)


def parse_problem(text: str) -> LcqpProblem:
    """Parse problem-file text. Raises :class:`ProblemFileError`."""
    sections = _split_sections(text)
    dims = _dimensions(sections)
    n = dims["n"]
    kw = {}
    for name, (rk, ck) in MATRIX_SECTIONS.items():
        rows, cols = dims[rk], dims[ck]
        if name in sections:
            kw[name] = _read_matrix(name, sections[name], rows, cols)
        elif name == "Q" or rows > 0:
            raise ProblemFileError(f"missing [{name}] section", sections["dimensions"][0])
        else:
            kw[name] = np.zeros((0, n))
    for name, (attr, key) in VECTOR_SECTIONS.items():
        if name in sections:
            kw[attr] = _read_vector(name, sections[name], dims[key])
        elif name in ("ell_L", "ell_R") and dims["n_c"] > 0:
            raise ProblemFileError(f"missing [{name}] section", sections["dimensions"][0])
    if "ell_L" not in sections:
        kw["lb_L"] = np.zeros(0)
    if "ell_R" not in sections:
        kw["lb_R"] = np.zeros(0)
    if "obj_const" in sections:
        kw["obj_const"] = _read_vector("obj_const", sections["obj_const"], 1)[0]
    if "name" in sections:
        kw["name"] = " ".join(line for _, line in sections["name"][1])
    kw.setdefault("g", np.zeros(n))
    return LcqpProblem(**kw)


def read_problem(path) -> LcqpProblem:
    with open(path) as fh:
        return parse_problem(fh.read())


def serialize_problem(problem: LcqpProblem) -> str:
    pb = problem
    out = []

    def vec(v):
        return " ".join(format_number(x) for x in v)

    out.append("[dimensions]")
    out.append(f"n {pb.n}")
    out.append(f"n_c {pb.n_c}")
    out.append(f"n_A {pb.n_A}")
    if pb.name:
        out += ["[name]", pb.name.replace("\n", " ")]
    out += ["[obj_const]", format_number(pb.obj_const)]
    for name, mat in (("Q", pb.Q), ("L", pb.L), ("R", pb.R), ("A", pb.A)):
        if mat.shape[0] == 0 and name != "Q":
            continue
        out.append(f"[{name}]")
        out.extend(vec(row) for row in mat)
    for name, (attr, key) in VECTOR_SECTIONS.items():
        v = getattr(pb, attr)
        if v is None or len(v) == 0:
            continue
        out.append(f"[{name}]")
        out.append(vec(v))
    return "\n".join(out) + "\n"


def write_problem(problem: LcqpProblem, path):
    with open(path, "w") as fh:
        fh.write(serialize_problem(problem))


# -- results ----------------------------------------------------------------


def result_record(problem: LcqpProblem, solution, include_solution=False, include_time=True) -> dict:
    """Flat dict describing a solve; objective includes the problem constant."""
    rec = {
        "status": solution.status.value,
        "objective": float(solution.objective + problem.obj_const),
        "phi": float(solution.phi),
        "stationarity": float(solution.stationarity),
        "rho": float(solution.rho),
        "outer_iterations": int(solution.outer_iterations),
        "inner_iterations": int(solution.inner_iterations),
        "qp_changes": int(solution.qp_changes),
    }
    if include_time:
        rec["wall_time"] = float(solution.wall_time)
    if include_solution:
        for key in ("x", "y_A", "y_L", "y_R", "y_x"):
            rec[key] = [float(v) for v in getattr(solution, key)]
    return rec


def dump_record(rec: dict) -> str:
    return json.dumps(rec, sort_keys=False)


def read_solution(path) -> dict:
    """Load a record written with the solution vectors included."""
    with open(path) as fh:
        rec = json.load(fh)
    missing = [k for k in ("x", "y_A", "y_L", "y_R") if k not in rec]
    if missing:
        raise ValueError(f"solution record lacks {', '.join(missing)}")
    return rec
