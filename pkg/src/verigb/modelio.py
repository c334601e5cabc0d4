"""JSON model interchange format.

Schema (``format: "verigb-model"``, ``version: 1``)::

    {
      "format": "verigb-model", "version": 1,
      "kind": "regressor" | "classifier",
      "features": [{"name": "x0", "kind": "real" | "integer",
                    "lower": "0" | null, "upper": "255" | null}, ...],
      "class_labels": ["a", "b"],                 # classifier only
      "regressors": [                             # exactly one for a regressor
        {"base_score": "0",
         "trees": [{"root": 0,
                    "nodes": [{"id": 0, "feature": 0, "threshold": "23/10",
                               "pos": 1, "neg": 2},
                              {"id": 1, "weight": "1"},
                              {"id": 2, "weight": "-1/2"}]}]}
      ],
      "metadata": {"trainer": "..."}
    }

Every number is a string holding an integer, a decimal, or ``p/q``; JSON
numbers are accepted on input but never written, so round-trips are exact.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .model import (
    Classifier,
    DecisionTree,
    FeatureKind,
    FeatureSpec,
    Internal,
    Leaf,
    Model,
    NodeCondition,
    Regressor,
    validate,
)
from .numbers import as_rational, format_rational

FORMAT = "verigb-model"
VERSION = 1


class ModelFormatError(ValueError):
    """The model file could not be parsed or failed validation."""


def _num(raw: Any, where: str) -> Fraction:
    if isinstance(raw, bool) or raw is None:
        raise ModelFormatError(f"{where}: expected a number, got {raw!r}")
    try:
        return as_rational(raw)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ModelFormatError(f"{where}: bad number {raw!r} ({exc})") from None


def _opt_num(raw: Any, where: str):
    return None if raw is None else _num(raw, where)


def _field(record: dict, key: str, where: str):
    if not isinstance(record, dict):
        raise ModelFormatError(f"{where}: expected an object")
    if key not in record:
        raise ModelFormatError(f"{where}: missing '{key}'")
    return record[key]


def _node_from_json(raw: dict, where: str):
    nid = _field(raw, "id", where)
    where = f"{where} (node {nid})"
    if "weight" in raw:
        return nid, Leaf(_num(raw["weight"], f"{where}.weight"))
    feature = _field(raw, "feature", where)
    threshold = _num(_field(raw, "threshold", where), f"{where}.threshold")
    pos = _field(raw, "pos", where)
    neg = _field(raw, "neg", where)
    for name, value in (("id", nid), ("feature", feature), ("pos", pos), ("neg", neg)):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ModelFormatError(f"{where}.{name}: expected an integer, got {value!r}")
    return nid, Internal(NodeCondition(feature, threshold), pos, neg)


def tree_from_json(raw: dict, where: str = "tree") -> DecisionTree:
    nodes = {}
    for k, rec in enumerate(_field(raw, "nodes", where)):
        nid, node = _node_from_json(rec, f"{where}.nodes[{k}]")
        if nid in nodes:
            raise ModelFormatError(f"{where}.nodes[{k}]: duplicate node id {nid}")
        nodes[nid] = node
    return DecisionTree(nodes, raw.get("root", 0))


def tree_to_json(tree: DecisionTree) -> dict:
    nodes = []
    for nid in sorted(tree.nodes):
        node = tree.nodes[nid]
        if isinstance(node, Leaf):
            nodes.append({"id": nid, "weight": format_rational(node.weight)})
        else:
            nodes.append(
                {
                    "id": nid,
                    "feature": node.condition.feature,
                    "threshold": format_rational(node.condition.threshold),
                    "pos": node.pos,
                    "neg": node.neg,
                }
            )
    return {"root": tree.root, "nodes": nodes}


def model_to_json(model: Model) -> dict:
    features = [
        {
            "name": f.name,
            "kind": f.kind.value,
            "lower": None if f.lower is None else format_rational(f.lower),
            "upper": None if f.upper is None else format_rational(f.upper),
        }
        for f in model.features
    ]
    regs = [
        {"base_score": format_rational(r.base_score), "trees": [tree_to_json(t) for t in r.trees]}
        for r in model.regressors
    ]
    out: dict[str, Any] = {
        "format": FORMAT,
        "version": VERSION,
        "kind": "classifier" if model.is_classifier else "regressor",
        "features": features,
    }
    if isinstance(model.payload, Classifier):
        out["class_labels"] = list(model.payload.class_labels)
    out["regressors"] = regs
    out["metadata"] = dict(model.metadata)
    return out


def model_from_json(raw: dict, check: bool = True) -> Model:
    if not isinstance(raw, dict):
        raise ModelFormatError("top level: expected an object")
    if raw.get("format", FORMAT) != FORMAT:
        raise ModelFormatError(f"format: expected '{FORMAT}', got {raw.get('format')!r}")
    if raw.get("version", VERSION) != VERSION:
        raise ModelFormatError(f"version: unsupported version {raw.get('version')!r}")
    kind = _field(raw, "kind", "top level")
    if kind not in ("regressor", "classifier"):
        raise ModelFormatError(f"kind: expected 'regressor' or 'classifier', got {kind!r}")
    features = []
    for i, f in enumerate(_field(raw, "features", "top level")):
        where = f"features[{i}]"
        try:
            fkind = FeatureKind(f.get("kind", "real"))
        except (ValueError, AttributeError):
            raise ModelFormatError(f"{where}.kind: expected 'real' or 'integer'") from None
        features.append(
            FeatureSpec(
                index=i,
                kind=fkind,
                lower=_opt_num(f.get("lower"), f"{where}.lower"),
                upper=_opt_num(f.get("upper"), f"{where}.upper"),
                name=f.get("name", ""),
            )
        )
    regs = []
    for j, r in enumerate(_field(raw, "regressors", "top level")):
        where = f"regressors[{j}]"
        trees = tuple(
            tree_from_json(t, f"{where}.trees[{i}]") for i, t in enumerate(_field(r, "trees", where))
        )
        regs.append(Regressor(trees, _num(r.get("base_score", "0"), f"{where}.base_score")))
    if kind == "regressor":
        if len(regs) != 1:
            raise ModelFormatError(f"regressors: a regressor model needs exactly 1 entry, got {len(regs)}")
        payload = regs[0]
    else:
        labels = tuple(str(s) for s in raw.get("class_labels") or [str(j) for j in range(len(regs))])
        payload = Classifier(tuple(regs), labels)
    model = Model(tuple(features), payload, {str(k): str(v) for k, v in raw.get("metadata", {}).items()})
    if check:
        problems = validate(model)
        if problems:
            raise ModelFormatError("invalid model:\n  " + "\n  ".join(problems))
    return model


def dumps(model: Model) -> str:
    return json.dumps(model_to_json(model), indent=1) + "\n"


def loads(text: str, check: bool = True) -> Model:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return model_from_json(raw, check=check)


def save_model(model: Model, path) -> None:
    Path(path).write_text(dumps(model))


def load_model(path, check: bool = True) -> Model:
    return loads(Path(path).read_text(), check=check)
