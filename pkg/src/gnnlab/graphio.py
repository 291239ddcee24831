"""Line-oriented text format for graphs.

::

    nodes <n> features <r> classes <K>
    node <id> <label> <f_1> ... <f_r>      (n lines)
    edge <u> <v>                           (u < v)
    train <id>
    test <id>

Blank lines and lines starting with ``#`` are ignored. Floats are written with
17 significant digits so a save/load round trip is bit-exact. A file with no
``train``/``test`` lines loads with every node in the training set.
"""

import hashlib

import numpy as np

from gnnlab.errors import InputError, ParseError
from gnnlab.graph import Graph


def save_graph(graph, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_graph(graph))


def format_graph(graph):
    out = [f"nodes {graph.n} features {graph.r} classes {graph.num_classes}"]
    for i in range(graph.n):
        feats = " ".join(format(float(x), ".17g") for x in graph.features[i])
        out.append(f"node {i} {int(graph.labels[i])} {feats}".rstrip())
    for u, v in graph.edge_list():
        out.append(f"edge {u} {v}")
    out.extend(f"train {i}" for i in graph.train_ids)
    out.extend(f"test {i}" for i in graph.test_ids)
    return "\n".join(out) + "\n"


def _int(tok, lineno):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected an integer, got {tok!r}", lineno) from None


def load_graph(path):
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def parse_graph(text):
    header = None
    features = labels = None
    seen = None
    edges = []
    edge_keys = set()
    train, test = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        kind = tok[0]
        if header is None:
            if kind != "nodes" or len(tok) != 6 or tok[2] != "features" or tok[4] != "classes":
                raise ParseError("expected header 'nodes <n> features <r> classes <K>'", lineno)
            n, r, k = (_int(t, lineno) for t in (tok[1], tok[3], tok[5]))
            if n < 1 or r < 0 or k < 1:
                raise ParseError("header counts out of range", lineno)
            header = (n, r, k)
            features = np.zeros((n, r))
            labels = np.zeros(n, dtype=np.int64)
            seen = np.zeros(n, dtype=bool)
            continue
        n, r, k = header
        if kind == "node":
            if len(tok) != 3 + r:
                raise ParseError(f"node line needs id, label and {r} features", lineno)
            i = _int(tok[1], lineno)
            if not 0 <= i < n:
                raise ParseError(f"node id {i} out of range", lineno)
            if seen[i]:
                raise ParseError(f"duplicate node {i}", lineno)
            lab = _int(tok[2], lineno)
            if not 0 <= lab < k:
                raise ParseError(f"label {lab} outside [0, {k})", lineno)
            try:
                features[i] = [float(x) for x in tok[3:]]
            except ValueError:
                raise ParseError("malformed feature value", lineno) from None
            labels[i] = lab
            seen[i] = True
        elif kind == "edge":
            if len(tok) != 3:
                raise ParseError("edge line needs exactly two endpoints", lineno)
            u, v = _int(tok[1], lineno), _int(tok[2], lineno)
            if not (0 <= u < v < n):
                raise ParseError(f"edge ({u}, {v}) must satisfy 0 <= u < v < n", lineno)
            if (u, v) in edge_keys:
                raise ParseError(f"duplicate edge ({u}, {v})", lineno)
            edge_keys.add((u, v))
            edges.append((u, v))
        elif kind in ("train", "test"):
            if len(tok) != 2:
                raise ParseError(f"{kind} line needs exactly one node id", lineno)
            i = _int(tok[1], lineno)
            if not 0 <= i < n:
                raise ParseError(f"node id {i} out of range", lineno)
            (train if kind == "train" else test).append(i)
        else:
            raise ParseError(f"unknown record type {kind!r}", lineno)
    if header is None:
        raise ParseError("missing header")
    if not seen.all():
        raise ParseError(f"missing node line for node {int(np.flatnonzero(~seen)[0])}")
    n = header[0]
    if train or test:
        train_mask = np.zeros(n, dtype=bool)
        test_mask = np.zeros(n, dtype=bool)
        train_mask[train] = True
        test_mask[test] = True
    else:
        train_mask, test_mask = np.ones(n, dtype=bool), np.zeros(n, dtype=bool)
    try:
        return Graph.from_edges(features, labels, header[2], edges, train_mask, test_mask)
    except InputError as exc:
        raise ParseError(str(exc)) from None


def content_hash(path):
    """Git-style blob hash (sha1 over 'blob <len>\\0' + bytes)."""
    data = open(path, "rb").read()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()
