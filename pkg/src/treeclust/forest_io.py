"""Forest matrix assembly and on-disk formats.

Forest file layout::

    FOREST v1
    order=2 depth=3 trunk=1 attrs=length,radius,tortuosity
    TREE id=t0 label=A
    1 3.2 0.5 1.1
    2 2.7 0.4 1.0
    END
    ...
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .tree import SupportTreeSpec, Tree, TreeError, to_ta_matrix, unvectorize, vectorize


class ForestFormatError(ValueError):
    def __init__(self, msg, lineno=None):
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)
        self.lineno = lineno


@dataclass(frozen=True)
class ForestMatrix:
    spec: SupportTreeSpec
    q: int
    data: np.ndarray = field(repr=False)
    ids: tuple
    labels: Optional[tuple] = None

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def column_matrix(self, l: int) -> np.ndarray:
        return unvectorize(self.data[:, l], self.spec.p, self.q)


def assemble_forest(trees: Sequence[Tree], spec: SupportTreeSpec) -> ForestMatrix:
    """Stack the vectorized T-A matrices of ``trees`` as columns."""
    if not trees:
        raise TreeError("a forest needs at least one tree")
    q = trees[0].q
    cols = []
    for t in trees:
        if t.q != q:
            raise TreeError(f"tree {t.id!r} has {t.q} attributes, expected {q}")
        cols.append(vectorize(to_ta_matrix(t, spec)))
    labels = None
    if any(t.label is not None for t in trees):
        labels = tuple(t.label for t in trees)
    data = np.column_stack(cols)
    data.setflags(write=False)
    return ForestMatrix(spec, q, data, tuple(t.id for t in trees), labels)


def normalize_attributes(forest: ForestMatrix) -> ForestMatrix:
    """Scale each attribute block by its maximum over the whole forest."""
    p = forest.spec.p
    data = forest.data.copy()
    for a in range(forest.q):
        block = data[a * p:(a + 1) * p]
        top = block.max()
        if top > 0:
            block /= top
    data.setflags(write=False)
    return ForestMatrix(forest.spec, forest.q, data, forest.ids, forest.labels)


def fmt_number(x) -> str:
    """Shortest round-trip decimal; integral values lose the trailing ``.0``."""
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def _check_token(kind, s):
    if not s or any(c.isspace() for c in s):
        raise TreeError(f"{kind} {s!r} must be non-empty and contain no whitespace")


def format_forest(trees: Sequence[Tree], spec: SupportTreeSpec, attrs: Optional[Sequence[str]] = None) -> str:
    if not trees:
        raise TreeError("a forest needs at least one tree")
    q = trees[0].q
    if attrs is None:
        attrs = [f"a{j + 1}" for j in range(q)]
    if len(attrs) != q:
        raise TreeError(f"{len(attrs)} attribute names for {q} attributes")
    for a in attrs:
        _check_token("attribute name", a)
        if "," in a:
            raise TreeError(f"attribute name {a!r} contains a comma")
    out = ["FOREST v1", f"order={spec.order} depth={spec.depth} trunk={int(spec.trunk)} attrs={','.join(attrs)}"]
    for t in trees:
        if t.q != q:
            raise TreeError(f"tree {t.id!r} has {t.q} attributes, expected {q}")
        t.validate(spec)
        _check_token("tree id", t.id)
        if t.label is not None:
            _check_token("label", t.label)
            if t.label == "-":
                raise TreeError("label '-' is reserved for unlabeled trees")
        out.append(f"TREE id={t.id} label={'-' if t.label is None else t.label}")
        for i, row in t.branches.items():
            out.append(" ".join([str(i)] + [fmt_number(v) for v in row]))
        out.append("END")
    return "\n".join(out) + "\n"


def write_forest(trees: Sequence[Tree], spec: SupportTreeSpec, path, attrs=None) -> None:
    text = format_forest(trees, spec, attrs)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _kv(tokens, lineno, expected):
    out = {}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep:
            raise ForestFormatError(f"expected key=value, got {tok!r}", lineno)
        out[key] = val
    if set(out) != set(expected):
        raise ForestFormatError(f"expected keys {sorted(expected)}, got {sorted(out)}", lineno)
    return out


def parse_forest(text: str):
    """Parse forest text; returns ``(trees, spec, attr_names)``."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != "FOREST v1":
        raise ForestFormatError("missing 'FOREST v1' header", 1)
    if len(lines) < 2:
        raise ForestFormatError("missing spec line", 2)
    hdr = _kv(lines[1].split(), 2, {"order", "depth", "trunk", "attrs"})
    try:
        trunk = {"0": False, "1": True}[hdr["trunk"]]
        spec = SupportTreeSpec(int(hdr["order"]), int(hdr["depth"]), trunk)
    except (KeyError, ValueError) as exc:
        raise ForestFormatError(f"bad spec line: {exc}", 2) from None
    attrs = hdr["attrs"].split(",")
    if not all(attrs):
        raise ForestFormatError("empty attribute name", 2)
    q = len(attrs)

    trees = []
    seen_ids = set()
    cur = None
    for lineno, raw in enumerate(lines[2:], start=3):
        line = raw.strip()
        if not line:
            continue
        if cur is None:
            parts = line.split()
            if parts[0] != "TREE":
                raise ForestFormatError(f"expected TREE, got {line!r}", lineno)
            kv = _kv(parts[1:], lineno, {"id", "label"})
            if kv["id"] in seen_ids:
                raise ForestFormatError(f"duplicate tree id {kv['id']!r}", lineno)
            seen_ids.add(kv["id"])
            cur = (kv["id"], None if kv["label"] == "-" else kv["label"], {}, lineno)
            continue
        if line == "END":
            tid, label, rows, start = cur
            try:
                tree = Tree(id=tid, branches=rows, label=label)
                tree.validate(spec)
            except TreeError as exc:
                raise ForestFormatError(str(exc), start) from None
            trees.append(tree)
            cur = None
            continue
        parts = line.split()
        if len(parts) != q + 1:
            raise ForestFormatError(f"expected index and {q} attributes, got {len(parts) - 1} values", lineno)
        try:
            idx = int(parts[0])
            vals = tuple(float(v) for v in parts[1:])
        except ValueError as exc:
            raise ForestFormatError(str(exc), lineno) from None
        if not 1 <= idx <= spec.p:
            raise ForestFormatError(f"unknown branch index {idx} (p={spec.p})", lineno)
        if idx in cur[2]:
            raise ForestFormatError(f"duplicate branch {idx}", lineno)
        if not all(v > 0 and np.isfinite(v) for v in vals):
            raise ForestFormatError(f"nonpositive attribute on branch {idx}", lineno)
        cur[2][idx] = vals
    if cur is not None:
        raise ForestFormatError(f"tree {cur[0]!r} not terminated by END", cur[3])
    if not trees:
        raise ForestFormatError("forest contains no trees", len(lines))
    return trees, spec, attrs


def read_forest(path):
    with open(path) as fh:
        return parse_forest(fh.read())


def _write_rows(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def write_matrix_csv(matrix, path, header=None) -> None:
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    if header is None:
        header = [f"c{j}" for j in range(a.shape[1])]
    _write_rows(path, header, [[fmt_number(v) for v in row] for row in a])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)


def write_labels_csv(ids, labels, path, extra: Optional[dict] = None) -> None:
    """Write ``id,label`` rows; ``extra`` maps column name -> per-row values."""
    extra = extra or {}
    header = ["id", "label", *extra]
    rows = []
    for l, (i, lab) in enumerate(zip(ids, labels)):
        rows.append([i, lab, *("-" if v[l] is None else v[l] for v in extra.values())])
    _write_rows(path, header, rows)


def read_labels_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    return [r["id"] for r in rows], [r["label"] for r in rows]


def write_table_csv(header, rows, path) -> None:
    _write_rows(path, header, rows)


def ensure_dir(path) -> None:
    os.makedirs(path, exist_ok=True)
