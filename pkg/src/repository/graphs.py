from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from src.exceptions import GraphFormatError, ParameterError
from src.models import CouplingGraph
from src.schemas import GraphKind, GraphModel

logger = logging.getLogger(__name__)

HEADER_MAGIC = "ising-graph"
HEADER_VERSION = "v1"


def dumps_graph(g: CouplingGraph) -> str:
    """
    Text form of a graph: a header line followed by one ``i j J_ij`` line per
    upper-triangle pair, values written with ``repr`` so they read back exactly.

    :param g: Coupling graph.
    :type g: CouplingGraph
    :return: File contents.
    :rtype: str
    """
    seed = "none" if g.seed is None else str(g.seed)
    lines = [f"{HEADER_MAGIC} {HEADER_VERSION} n={g.n} kind={g.kind.value} seed={seed}"]
    rows, cols = np.triu_indices(g.n, k=1)
    for i, j in zip(rows, cols):
        lines.append(f"{i} {j} {float(g.J[i, j])!r}")
    return "\n".join(lines) + "\n"


def _parse_header(line: str) -> tuple[int, GraphKind, int | None]:
    parts = line.split()
    if len(parts) != 5 or parts[0] != HEADER_MAGIC:
        raise GraphFormatError("expected 'ising-graph v1 n=<N> kind=<K> seed=<S>'", 1)
    if parts[1] != HEADER_VERSION:
        raise GraphFormatError(f"unsupported version {parts[1]}", 1, "version")
    fields = {}
    for token in parts[2:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise GraphFormatError(f"expected key=value, got {token!r}", 1, token)
        fields[key] = value
    try:
        n = int(fields["n"])
    except (KeyError, ValueError):
        raise GraphFormatError("missing or invalid mode count", 1, "n")
    if n < 1:
        raise GraphFormatError("mode count must be positive", 1, "n")
    try:
        kind = GraphKind(fields["kind"])
    except (KeyError, ValueError):
        raise GraphFormatError(f"unknown graph kind {fields.get('kind')!r}", 1, "kind")
    seed_text = fields.get("seed")
    if seed_text is None:
        raise GraphFormatError("missing seed", 1, "seed")
    try:
        seed = None if seed_text == "none" else int(seed_text)
    except ValueError:
        raise GraphFormatError(f"invalid seed {seed_text!r}", 1, "seed")
    return n, kind, seed


def loads_graph(text: str) -> CouplingGraph:
    """
    Parse the text form written by :func:`dumps_graph`. Missing pairs are zero;
    a pair given twice with different values or a nonzero diagonal entry is
    rejected.

    :param text: File contents.
    :type text: str
    :return: The graph.
    :rtype: CouplingGraph
    :raises GraphFormatError: With the offending line and field.
    """
    lines = text.splitlines()
    if not lines:
        raise GraphFormatError("empty graph file")
    n, kind, seed = _parse_header(lines[0])
    J = np.zeros((n, n))
    seen = np.zeros((n, n), dtype=bool)
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphFormatError(f"expected '<i> <j> <J_ij>', got {line!r}", number)
        try:
            i = int(parts[0])
        except ValueError:
            raise GraphFormatError(f"invalid index {parts[0]!r}", number, "i")
        try:
            j = int(parts[1])
        except ValueError:
            raise GraphFormatError(f"invalid index {parts[1]!r}", number, "j")
        try:
            value = float(parts[2])
        except ValueError:
            raise GraphFormatError(f"invalid coupling {parts[2]!r}", number, "J_ij")
        for name, index in (("i", i), ("j", j)):
            if not 0 <= index < n:
                raise GraphFormatError(f"index {index} outside 0..{n - 1}", number, name)
        if i == j:
            if value != 0.0:
                raise GraphFormatError(f"nonzero diagonal entry at mode {i}", number, "J_ij")
            continue
        a, b = min(i, j), max(i, j)
        if seen[a, b] and J[a, b] != value:
            raise GraphFormatError(
                f"asymmetric entries for pair ({a}, {b}): {J[a, b]!r} vs {value!r}",
                number,
                "J_ij",
            )
        J[a, b] = J[b, a] = value
        seen[a, b] = True
    return CouplingGraph(J, kind=kind, seed=seed)


def save_graph(g: CouplingGraph, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_graph(g), encoding="utf-8")
    logger.info("saved %s graph with %d modes to %s", g.kind.value, g.n, path)
    return path


def load_graph(path: str | Path) -> CouplingGraph:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ParameterError(f"cannot read graph file {path}: {err}")
    return loads_graph(text)


def graph_to_model(g: CouplingGraph) -> GraphModel:
    return GraphModel(kind=g.kind, seed=g.seed, couplings=g.J.tolist())


def graph_from_model(body: GraphModel) -> CouplingGraph:
    return CouplingGraph(np.array(body.couplings, dtype=np.float64), kind=body.kind, seed=body.seed)
