"""Vector-labelled directed graphs over a finite arithmetic, with JSON and DOT I/O.

Successor order is the edge-declaration order; since saturating addition is
order sensitive, every fold over successors (logic semantics, GNN evaluation,
the brute-force oracle) uses this one order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .arith import ArithmeticSpec, Value
from .errors import SchemaError, UsageError


class LabeledGraph:
    """Nodes with total feature labellings and ordered directed edges."""

    def __init__(
        self,
        spec: ArithmeticSpec,
        features: tuple[str, ...],
        nodes: tuple[str, ...],
        edges: tuple[tuple[str, str], ...],
        labels: dict[str, dict[str, int]],
    ):
        self.spec = spec
        self.features = tuple(features)
        self.nodes = tuple(nodes)
        self.edges = tuple(edges)
        self.labels = labels
        self._validate()
        succ: dict[str, list[str]] = {n: [] for n in self.nodes}
        for src, dst in self.edges:
            succ[src].append(dst)
        self._successors = {n: tuple(s) for n, s in succ.items()}

    def _validate(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise UsageError("duplicate node identifiers")
        node_set = set(self.nodes)
        seen = set()
        for src, dst in self.edges:
            if src not in node_set or dst not in node_set:
                raise UsageError(f"edge ({src}, {dst}) mentions an unknown node")
            if (src, dst) in seen:
                raise UsageError(f"duplicate edge ({src}, {dst})")
            seen.add((src, dst))
        for n in self.nodes:
            lab = self.labels.get(n)
            if lab is None or set(lab) != set(self.features):
                raise UsageError(f"node {n} must label exactly the features {self.features}")
            for name, payload in lab.items():
                self.spec.check_payload(payload)

    def successors(self, v: str) -> tuple[str, ...]:
        try:
            return self._successors[v]
        except KeyError:
            raise UsageError(f"unknown node {v!r}") from None

    def out_degree(self, v: str) -> int:
        return len(self.successors(v))

    def label_payload(self, v: str, feature: str) -> int:
        try:
            return self.labels[v][feature]
        except KeyError:
            raise UsageError(f"no feature {feature!r} at node {v!r}") from None

    def label_value(self, v: str, feature: str) -> Value:
        return Value(self.label_payload(v, feature), self.spec)

    def __eq__(self, other):
        return (
            isinstance(other, LabeledGraph)
            and self.spec == other.spec
            and self.features == other.features
            and self.nodes == other.nodes
            and self.edges == other.edges
            and self.labels == other.labels
        )


@dataclass(frozen=True)
class PointedGraph:
    graph: LabeledGraph
    point: str

    def __post_init__(self):
        if self.point not in self.graph.nodes:
            raise UsageError(f"point {self.point!r} is not a node")


def save_json(graph: LabeledGraph, point: str | None = None) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "features": list(graph.features),
        "nodes": [
            {"id": n, "label": {f: graph.spec.format_payload(graph.labels[n][f]) for f in graph.features}}
            for n in graph.nodes
        ],
        "edges": [[s, t] for s, t in graph.edges],
    }
    if point is not None:
        doc["point"] = point
    return doc


def _expect(doc: Any, key: str, kind, path: str):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"missing key {key!r}", path)
    value = doc[key]
    if not isinstance(value, kind):
        raise SchemaError(f"{key!r} must be {kind.__name__}", f"{path}.{key}")
    return value


def load_json(doc: Any, spec: ArithmeticSpec) -> tuple[LabeledGraph, str | None]:
    """Build a graph from its JSON document; label strings are read under spec."""
    features = _expect(doc, "features", list, "$")
    raw_nodes = _expect(doc, "nodes", list, "$")
    raw_edges = _expect(doc, "edges", list, "$")
    nodes = []
    labels: dict[str, dict[str, int]] = {}
    for i, nd in enumerate(raw_nodes):
        path = f"$.nodes[{i}]"
        node_id = _expect(nd, "id", str, path)
        raw_label = _expect(nd, "label", dict, path)
        lab = {}
        for name in features:
            if name not in raw_label:
                raise SchemaError(f"missing feature {name!r}", f"{path}.label")
            try:
                lab[name] = spec.parse_literal(str(raw_label[name]))
            except Exception as exc:
                raise SchemaError(str(exc), f"{path}.label.{name}") from None
        nodes.append(node_id)
        labels[node_id] = lab
    edges = []
    for i, e in enumerate(raw_edges):
        if not (isinstance(e, list) and len(e) == 2):
            raise SchemaError("edge must be a [source, target] pair", f"$.edges[{i}]")
        edges.append((e[0], e[1]))
    try:
        graph = LabeledGraph(spec, tuple(features), tuple(nodes), tuple(edges), labels)
    except UsageError as exc:
        raise SchemaError(str(exc), "$") from None
    point = doc.get("point")
    if point is not None and point not in labels:
        raise SchemaError(f"point {point!r} is not a node", "$.point")
    return graph, point


def to_dot(graph: LabeledGraph, point: str | None = None) -> str:
    """Render as a DOT digraph; labels as name=value lists."""
    lines = ["digraph g {"]
    for n in graph.nodes:
        label = ", ".join(f"{f}={graph.spec.format_payload(graph.labels[n][f])}" for f in graph.features)
        shape = ' shape="doublecircle"' if n == point else ""
        lines.append(f'  "{n}" [label="{n}\\n{label}"{shape}];')
    for s, t in graph.edges:
        lines.append(f'  "{s}" -> "{t}";')
    lines.append("}")
    return "\n".join(lines)
