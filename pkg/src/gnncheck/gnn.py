"""Quantized aggregate-combine GNNs: data model, forward evaluation, JSON I/O.

All numeric parameters are payloads of one arithmetic spec.  The affine
accumulation inside an FNN layer is the left fold of saturating addition over
weight*input products in input-index order, then the bias; the compiler
unfolds formulas with the same chain so that logic and evaluation agree
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .arith import ArithmeticSpec, Value
from .errors import SchemaError, UsageError
from .graph import PointedGraph

AGG_LAYER_KINDS = ("sum", "mean", "max", "weighted")


@dataclass(frozen=True)
class FnnLayer:
    """One dense layer: weights[j][i], bias[j], one activation name per output."""

    weights: tuple[tuple[int, ...], ...]
    bias: tuple[int, ...]
    activations: tuple[str, ...]

    def __post_init__(self):
        rows = len(self.weights)
        if rows == 0 or len(self.bias) != rows or len(self.activations) != rows:
            raise UsageError("layer rows, bias and activations must have equal nonzero length")
        width = len(self.weights[0])
        if any(len(r) != width for r in self.weights):
            raise UsageError("ragged weight matrix")

    @property
    def input_dim(self) -> int:
        return len(self.weights[0])

    @property
    def output_dim(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class Fnn:
    layers: tuple[FnnLayer, ...]

    def __post_init__(self):
        if not self.layers:
            raise UsageError("an FNN needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.output_dim != b.input_dim:
                raise UsageError(f"layer dimensions do not chain: {a.output_dim} -> {b.input_dim}")

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    def size(self) -> int:
        """Number of numerical parameters (weights and biases)."""
        return sum(l.input_dim * l.output_dim + l.output_dim for l in self.layers)

    @staticmethod
    def identity(dim: int, spec: ArithmeticSpec) -> "Fnn":
        one = spec.one
        rows = tuple(tuple(one if i == j else 0 for i in range(dim)) for j in range(dim))
        return Fnn((FnnLayer(rows, (0,) * dim, ("id",) * dim),))


@dataclass(frozen=True)
class GnnLayer:
    agg_kind: str
    comb: Fnn
    agg_weights: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.agg_kind not in AGG_LAYER_KINDS:
            raise UsageError(f"unknown aggregation {self.agg_kind!r}")
        if (self.agg_kind == "weighted") != (self.agg_weights is not None):
            raise UsageError("aggregation weights are given exactly for weighted layers")


@dataclass(frozen=True)
class GnnModel:
    spec: ArithmeticSpec
    layers: tuple[GnnLayer, ...]
    out: Fnn
    input_features: tuple[str, ...]
    output_features: tuple[str, ...]

    def __post_init__(self):
        dim = len(self.input_features)
        if dim == 0:
            raise UsageError("a GNN needs at least one input feature")
        for i, layer in enumerate(self.layers):
            if layer.comb.input_dim != 2 * dim:
                raise UsageError(
                    f"layer {i} combination takes {layer.comb.input_dim} inputs, expected {2 * dim}"
                )
            dim = layer.comb.output_dim
        if self.out.input_dim != dim:
            raise UsageError(f"output network takes {self.out.input_dim} inputs, expected {dim}")
        if self.out.output_dim != len(self.output_features):
            raise UsageError("output network width must match the output feature names")

    @property
    def input_dim(self) -> int:
        return len(self.input_features)

    @property
    def output_dim(self) -> int:
        return len(self.output_features)

    def size(self) -> int:
        return sum(l.comb.size() for l in self.layers) + self.out.size()


def fnn_eval_p(fnn: Fnn, inputs: Sequence[int], spec: ArithmeticSpec) -> list[int]:
    if len(inputs) != fnn.input_dim:
        raise UsageError(f"expected {fnn.input_dim} inputs, got {len(inputs)}")
    state = list(inputs)
    for layer in fnn.layers:
        nxt = []
        for row, b, act in zip(layer.weights, layer.bias, layer.activations):
            acc = 0
            for w, x in zip(row, state):
                acc = spec.add_p(acc, spec.mul_p(w, x))
            acc = spec.add_p(acc, b)
            nxt.append(spec.act_p(act, acc))
        state = nxt
    return state


def fnn_eval(fnn: Fnn, inputs: Sequence[Value], spec: ArithmeticSpec) -> list[Value]:
    for v in inputs:
        if v.spec != spec:
            raise UsageError("input values must share the model's arithmetic spec")
    return [Value(p, spec) for p in fnn_eval_p(fnn, [v.payload for v in inputs], spec)]


def _aggregate(layer: GnnLayer, states: list[list[int]], spec: ArithmeticSpec) -> list[int]:
    """Fold successor state vectors componentwise, in successor order."""
    if not states:
        return [0] * (layer.comb.input_dim // 2)
    dim = len(states[0])
    out = []
    for j in range(dim):
        vals = [s[j] for s in states]
        if layer.agg_kind == "sum":
            out.append(spec.fold_add(vals))
        elif layer.agg_kind == "mean":
            out.append(spec.div_p(spec.fold_add(vals), len(vals)))
        elif layer.agg_kind == "max":
            out.append(max(vals))
        else:
            if len(layer.agg_weights) < len(vals):
                raise UsageError(
                    f"weighted layer has {len(layer.agg_weights)} weights for {len(vals)} successors"
                )
            out.append(spec.fold_add(spec.mul_p(w, v) for w, v in zip(layer.agg_weights, vals)))
    return out


def gnn_eval(model: GnnModel, pointed: PointedGraph) -> list[Value]:
    """Forward evaluation: layerwise states for every node, output net at the point."""
    graph = pointed.graph
    if graph.spec != model.spec:
        raise UsageError("graph and model use different arithmetic specs")
    missing = [f for f in model.input_features if f not in graph.features]
    if missing:
        raise UsageError(f"graph lacks input features {missing}")
    states: dict[str, list[int]] = {
        n: [graph.label_payload(n, f) for f in model.input_features] for n in graph.nodes
    }
    for layer in model.layers:
        nxt = {}
        for n in graph.nodes:
            agg = _aggregate(layer, [states[s] for s in graph.successors(n)], model.spec)
            nxt[n] = fnn_eval_p(layer.comb, states[n] + agg, model.spec)
        states = nxt
    out = fnn_eval_p(model.out, states[pointed.point], model.spec)
    return [Value(p, model.spec) for p in out]


# -- linear constraint systems and LVP instances -------------------------------


@dataclass(frozen=True)
class LinIneq:
    """Sum of coeff*variable >= const; coefficient order is declaration order."""

    coeffs: tuple[tuple[str, int], ...]
    const: int

    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)


def eval_linineq(ineq: LinIneq, values: Mapping[str, int], spec: ArithmeticSpec) -> bool:
    acc = 0
    for var, c in ineq.coeffs:
        if var not in values:
            raise UsageError(f"no value for variable {var!r}")
        acc = spec.add_p(acc, spec.mul_p(c, values[var]))
    return acc >= ineq.const


@dataclass(frozen=True)
class DeltaMode:
    kind: str  # "unary" | "binary" | "inf"
    value: int | None = None

    def __post_init__(self):
        if self.kind not in ("unary", "binary", "inf"):
            raise UsageError(f"unknown delta mode {self.kind!r}")
        if (self.kind == "inf") != (self.value is None):
            raise UsageError("finite delta modes carry a value, inf carries none")
        if self.value is not None and self.value < 0:
            raise UsageError("arity bound must be >= 0")

    @staticmethod
    def unary(k: int) -> "DeltaMode":
        return DeltaMode("unary", k)

    @staticmethod
    def binary(k: int) -> "DeltaMode":
        return DeltaMode("binary", k)

    @staticmethod
    def infinite() -> "DeltaMode":
        return DeltaMode("inf", None)

    @staticmethod
    def parse(text: str) -> "DeltaMode":
        if text == "inf":
            return DeltaMode.infinite()
        parts = text.split(":")
        if len(parts) == 2 and parts[0] in ("unary", "binary") and parts[1].isdigit():
            return DeltaMode(parts[0], int(parts[1]))
        raise UsageError(f"bad delta {text!r}; expected unary:<k>, binary:<k> or inf")

    def spec_string(self) -> str:
        return "inf" if self.kind == "inf" else f"{self.kind}:{self.value}"


@dataclass(frozen=True)
class LvpInstance:
    model: GnnModel
    l_in: tuple[LinIneq, ...]
    l_out: tuple[LinIneq, ...]
    delta: DeltaMode

    def __post_init__(self):
        in_names = set(self.model.input_features)
        out_names = set(self.model.output_features)
        for ineq in self.l_in:
            bad = set(ineq.variables()) - in_names
            if bad:
                raise UsageError(f"input constraints mention unknown variables {sorted(bad)}")
        for ineq in self.l_out:
            bad = set(ineq.variables()) - out_names
            if bad:
                raise UsageError(f"output constraints mention unknown variables {sorted(bad)}")


# -- JSON schemas ---------------------------------------------------------------


def _fmt(spec: ArithmeticSpec, p: int) -> str:
    return spec.format_payload(p)


def _layer_to_json(layer: FnnLayer, spec: ArithmeticSpec) -> dict[str, Any]:
    return {
        "weights": [[_fmt(spec, w) for w in row] for row in layer.weights],
        "bias": [_fmt(spec, b) for b in layer.bias],
        "activation": list(layer.activations),
    }


def _fnn_to_json(fnn: Fnn, spec: ArithmeticSpec) -> dict[str, Any]:
    if len(fnn.layers) == 1:
        return _layer_to_json(fnn.layers[0], spec)
    return {"layers": [_layer_to_json(l, spec) for l in fnn.layers]}


def gnn_to_json(model: GnnModel) -> dict[str, Any]:
    spec = model.spec
    layers = []
    for layer in model.layers:
        if layer.agg_kind == "weighted":
            agg: Any = {"kind": "weighted", "weights": [_fmt(spec, w) for w in layer.agg_weights]}
        else:
            agg = layer.agg_kind
        layers.append({"agg": agg, "comb": _fnn_to_json(layer.comb, spec)})
    return {
        "arith": spec.spec_string(),
        "input_dim": model.input_dim,
        "features": list(model.input_features),
        "outputs": list(model.output_features),
        "layers": layers,
        "out": _fnn_to_json(model.out, spec),
    }


def _parse_payload(spec: ArithmeticSpec, raw: Any, path: str) -> int:
    try:
        return spec.parse_literal(str(raw))
    except Exception as exc:
        raise SchemaError(str(exc), path) from None


def _layer_from_json(doc: Any, spec: ArithmeticSpec, path: str) -> FnnLayer:
    if not isinstance(doc, dict) or "weights" not in doc:
        raise SchemaError("expected an object with 'weights'", path)
    weights = tuple(
        tuple(_parse_payload(spec, w, f"{path}.weights[{j}][{i}]") for i, w in enumerate(row))
        for j, row in enumerate(doc["weights"])
    )
    bias = tuple(_parse_payload(spec, b, f"{path}.bias[{j}]") for j, b in enumerate(doc.get("bias", [])))
    acts = doc.get("activation", [])
    if isinstance(acts, str):
        acts = [acts] * len(weights)
    try:
        return FnnLayer(weights, bias, tuple(acts))
    except UsageError as exc:
        raise SchemaError(str(exc), path) from None


def _fnn_from_json(doc: Any, spec: ArithmeticSpec, path: str) -> Fnn:
    if isinstance(doc, dict) and "layers" in doc:
        layers = tuple(_layer_from_json(l, spec, f"{path}.layers[{i}]") for i, l in enumerate(doc["layers"]))
    else:
        layers = (_layer_from_json(doc, spec, path),)
    try:
        return Fnn(layers)
    except UsageError as exc:
        raise SchemaError(str(exc), path) from None


def gnn_from_json(doc: Any) -> GnnModel:
    if not isinstance(doc, dict) or "arith" not in doc:
        raise SchemaError("expected an object with 'arith'", "$")
    spec = ArithmeticSpec.parse(str(doc["arith"]))
    if "features" in doc:
        features = tuple(doc["features"])
    elif "input_dim" in doc:
        features = tuple(f"x{i + 1}" for i in range(int(doc["input_dim"])))
    else:
        raise SchemaError("need 'features' or 'input_dim'", "$")
    if "input_dim" in doc and int(doc["input_dim"]) != len(features):
        raise SchemaError("input_dim disagrees with features", "$.input_dim")
    layers = []
    for i, ld in enumerate(doc.get("layers", [])):
        path = f"$.layers[{i}]"
        agg = ld.get("agg", "sum")
        weights = None
        if isinstance(agg, dict):
            kind = agg.get("kind")
            if kind != "weighted":
                raise SchemaError(f"unknown aggregation {kind!r}", f"{path}.agg")
            weights = tuple(
                _parse_payload(spec, w, f"{path}.agg.weights[{j}]") for j, w in enumerate(agg.get("weights", []))
            )
            agg = "weighted"
        elif agg not in AGG_LAYER_KINDS or agg == "weighted":
            raise SchemaError(f"unknown aggregation {agg!r}", f"{path}.agg")
        comb = _fnn_from_json(ld.get("comb"), spec, f"{path}.comb")
        try:
            layers.append(GnnLayer(agg, comb, weights))
        except UsageError as exc:
            raise SchemaError(str(exc), path) from None
    if "out" not in doc:
        raise SchemaError("missing output network", "$.out")
    out = _fnn_from_json(doc["out"], spec, "$.out")
    outputs = tuple(doc.get("outputs", (f"y{i + 1}" for i in range(out.output_dim))))
    try:
        return GnnModel(spec, tuple(layers), out, features, outputs)
    except UsageError as exc:
        raise SchemaError(str(exc), "$") from None


def linineq_to_json(ineq: LinIneq, spec: ArithmeticSpec) -> dict[str, Any]:
    return {
        "coeffs": {v: _fmt(spec, c) for v, c in ineq.coeffs},
        "const": _fmt(spec, ineq.const),
        "rel": ">=",
    }


def linineq_from_json(doc: Any, spec: ArithmeticSpec, path: str) -> LinIneq:
    if not isinstance(doc, dict):
        raise SchemaError("expected an object", path)
    if doc.get("rel", ">=") != ">=":
        raise SchemaError("only '>=' inequalities are supported", f"{path}.rel")
    coeffs = tuple(
        (var, _parse_payload(spec, c, f"{path}.coeffs.{var}")) for var, c in doc.get("coeffs", {}).items()
    )
    const = _parse_payload(spec, doc.get("const", "0"), f"{path}.const")
    return LinIneq(coeffs, const)


def lvp_to_json(instance: LvpInstance) -> dict[str, Any]:
    spec = instance.model.spec
    delta: dict[str, Any] = {"mode": instance.delta.kind}
    if instance.delta.value is not None:
        delta["value"] = instance.delta.value
    return {
        "gnn": gnn_to_json(instance.model),
        "l_in": [linineq_to_json(q, spec) for q in instance.l_in],
        "l_out": [linineq_to_json(q, spec) for q in instance.l_out],
        "delta": delta,
    }


def lvp_from_json(doc: Any) -> LvpInstance:
    if not isinstance(doc, dict) or "gnn" not in doc:
        raise SchemaError("expected an object with 'gnn'", "$")
    model = gnn_from_json(doc["gnn"])
    spec = model.spec
    l_in = tuple(linineq_from_json(q, spec, f"$.l_in[{i}]") for i, q in enumerate(doc.get("l_in", [])))
    l_out = tuple(linineq_from_json(q, spec, f"$.l_out[{i}]") for i, q in enumerate(doc.get("l_out", [])))
    raw_delta = doc.get("delta", {"mode": "inf"})
    try:
        delta = DeltaMode(raw_delta.get("mode", "inf"), raw_delta.get("value"))
    except UsageError as exc:
        raise SchemaError(str(exc), "$.delta") from None
    try:
        return LvpInstance(model, l_in, l_out, delta)
    except UsageError as exc:
        raise SchemaError(str(exc), "$") from None
