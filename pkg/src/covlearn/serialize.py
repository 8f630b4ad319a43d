"""External file formats.

- Coverage functions: JSON with 1-based index lists.
- Fourier tables: CSV lines "set-bitmask-hex,coefficient".
- Hypotheses (sparse polynomials, subcube decision trees, coverage
  functions): JSON with a "type" tag.
- Datasets: the shared text format, one point per line, n characters in
  {0,1}, '1' at position i meaning x_i = -1; multiset rows repeat.
- Release summaries: JSON with a variant tag and a metadata block; a
  synthetic dataset rides along in expanded text-format lines.
"""

from __future__ import annotations

import json
from typing import Iterable

import numpy as np

from .coverage import CoverageFunction, FourierTable
from .cube import format_point_line, parse_point_line
from .learners import (
    PmacHypothesis,
    PmacNode,
    PmacPolyLeaf,
    PmacZeroLeaf,
    SparsePolynomial,
)
from .privacy import Dataset, ReleaseSummary

DATASET_EXPANSION_CAP = 1_000_000


def _mask_to_indices(mask: int) -> list[int]:
    return [i + 1 for i in range(mask.bit_length()) if mask >> i & 1]


def _indices_to_mask(indices: Iterable[int], n: int) -> int:
    mask = 0
    for i in indices:
        if not 1 <= i <= n:
            raise ValueError(f"index {i} out of range for n={n} (indices are 1-based)")
        mask |= 1 << (i - 1)
    return mask


# --------------------------------------------------------------------------
# Coverage functions


def coverage_to_json(c: CoverageFunction) -> dict:
    return {
        "n": c.n,
        "affine": c.affine,
        "terms": [
            {"set": _mask_to_indices(m), "weight": w}
            for m, w in sorted(c.terms.items())
        ],
    }


def coverage_from_json(obj: dict) -> CoverageFunction:
    try:
        n = int(obj["n"])
        affine = float(obj["affine"])
        raw = obj["terms"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad coverage-function JSON: {exc}") from exc
    terms: dict[int, float] = {}
    for entry in raw:
        mask = _indices_to_mask(entry["set"], n)
        terms[mask] = terms.get(mask, 0.0) + float(entry["weight"])
    return CoverageFunction(n, affine, terms)


# --------------------------------------------------------------------------
# Fourier tables


def fourier_to_csv(t: FourierTable) -> str:
    lines = [f"{m:x},{v!r}" for m, v in sorted(t.coeffs.items()) if v != 0.0]
    return "\n".join(lines) + "\n"


def fourier_from_csv(text: str, n: int) -> FourierTable:
    coeffs: dict[int, float] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            mask_hex, value = line.split(",")
            coeffs[int(mask_hex, 16)] = float(value)
        except ValueError as exc:
            raise ValueError(f"bad Fourier CSV line {line!r}") from exc
    return FourierTable(n, coeffs)


# --------------------------------------------------------------------------
# Hypotheses


def _coeffs_to_json(coeffs) -> list:
    return [
        {"set": _mask_to_indices(m), "value": v} for m, v in sorted(coeffs.items())
    ]


def _coeffs_from_json(raw, n: int) -> dict[int, float]:
    return {_indices_to_mask(e["set"], n): float(e["value"]) for e in raw}


def polynomial_to_json(p: SparsePolynomial) -> dict:
    obj: dict = {"type": "polynomial", "n": p.n, "basis": p.basis, "clamp": p.clamp}
    if p.basis == "parity":
        obj["coeffs"] = _coeffs_to_json(p.coeffs)
    else:
        obj["layers"] = {
            str(k): _coeffs_to_json(c) for k, c in sorted(p.layers.items())
        }
    return obj


def polynomial_from_json(obj: dict) -> SparsePolynomial:
    n = int(obj["n"])
    basis = obj["basis"]
    clamp = bool(obj.get("clamp", False))
    if basis == "parity":
        return SparsePolynomial(n, basis, _coeffs_from_json(obj["coeffs"], n), clamp=clamp)
    layers = {int(k): _coeffs_from_json(c, n) for k, c in obj["layers"].items()}
    return SparsePolynomial(n, basis, layers=layers, clamp=clamp)


def _pmac_node_to_json(node) -> dict:
    if isinstance(node, PmacZeroLeaf):
        return {"type": "zero"}
    if isinstance(node, PmacPolyLeaf):
        return {
            "type": "leaf",
            "poly": polynomial_to_json(node.poly),
            "m_tilde": node.m_tilde,
            "shift": node.shift,
        }
    return {
        "type": "node",
        "var": node.var + 1,
        "minus": _pmac_node_to_json(node.minus),
        "plus": _pmac_node_to_json(node.plus),
    }


def _pmac_node_from_json(obj: dict):
    kind = obj["type"]
    if kind == "zero":
        return PmacZeroLeaf()
    if kind == "leaf":
        return PmacPolyLeaf(
            polynomial_from_json(obj["poly"]),
            float(obj["m_tilde"]),
            float(obj["shift"]),
        )
    if kind == "node":
        return PmacNode(
            int(obj["var"]) - 1,
            _pmac_node_from_json(obj["minus"]),
            _pmac_node_from_json(obj["plus"]),
        )
    raise ValueError(f"unknown tree node type {kind!r}")


def pmac_to_json(h: PmacHypothesis) -> dict:
    return {"type": "pmac", "n": h.n, "root": _pmac_node_to_json(h.root)}


def pmac_from_json(obj: dict) -> PmacHypothesis:
    return PmacHypothesis(int(obj["n"]), _pmac_node_from_json(obj["root"]))


def hypothesis_to_json(h) -> dict:
    if isinstance(h, SparsePolynomial):
        return polynomial_to_json(h)
    if isinstance(h, PmacHypothesis):
        return pmac_to_json(h)
    if isinstance(h, CoverageFunction):
        obj = coverage_to_json(h)
        obj["type"] = "coverage"
        return obj
    raise TypeError(f"cannot serialize hypothesis of type {type(h).__name__}")


def hypothesis_from_json(obj: dict):
    kind = obj.get("type")
    if kind == "polynomial":
        return polynomial_from_json(obj)
    if kind == "pmac":
        return pmac_from_json(obj)
    if kind == "coverage":
        return coverage_from_json(obj)
    raise ValueError(f"unknown hypothesis type {kind!r}")


# --------------------------------------------------------------------------
# Datasets (shared text format)


def dataset_to_lines(d: Dataset) -> list[str]:
    if d.size > DATASET_EXPANSION_CAP:
        raise ValueError(
            f"dataset of size {d.size} exceeds the text expansion cap "
            f"{DATASET_EXPANSION_CAP}; keep it in aggregated form"
        )
    lines = []
    order = np.argsort(d.masks)
    for mask, mult in zip(d.masks[order], d.mults[order]):
        lines.extend([format_point_line(int(mask), d.n)] * int(mult))
    return lines


def dataset_from_lines(lines: Iterable[str]) -> Dataset:
    masks = []
    n = None
    for line in lines:
        line = line.strip()
        if not line:
            continue
        mask, width = parse_point_line(line)
        if n is None:
            n = width
        elif width != n:
            raise ValueError(f"inconsistent point width: {width} after {n}")
        masks.append(mask)
    if n is None:
        raise ValueError("dataset file contains no points")
    return Dataset.from_points(masks, n)


def dataset_to_text(d: Dataset) -> str:
    return "\n".join(dataset_to_lines(d)) + "\n"


def dataset_from_text(text: str) -> Dataset:
    return dataset_from_lines(text.splitlines())


# --------------------------------------------------------------------------
# Release summaries


def summary_to_json(s: ReleaseSummary) -> dict:
    obj: dict = {
        "variant": s.variant,
        "n": s.n,
        "metadata": {
            "epsilon": s.epsilon,
            "delta": s.delta,
            "alpha_bar": s.alpha_bar,
            "queries_used": s.queries_used,
            "dataset_size": s.dataset_size,
        },
    }
    if s.poly is not None:
        obj["poly"] = polynomial_to_json(s.poly)
    if s.synthetic is not None:
        obj["synthetic"] = dataset_to_lines(s.synthetic)
    return obj


def summary_from_json(obj: dict) -> ReleaseSummary:
    meta = obj["metadata"]
    poly = polynomial_from_json(obj["poly"]) if "poly" in obj else None
    synthetic = None
    if "synthetic" in obj:
        lines = obj["synthetic"]
        if lines:
            synthetic = dataset_from_lines(lines)
        else:
            synthetic = Dataset(
                int(obj["n"]),
                np.array([], dtype=np.uint64),
                np.array([], dtype=np.int64),
            )
    return ReleaseSummary(
        obj["variant"],
        int(obj["n"]),
        float(meta["alpha_bar"]),
        float(meta["epsilon"]),
        float(meta["delta"]),
        int(meta["queries_used"]),
        int(meta["dataset_size"]),
        poly=poly,
        synthetic=synthetic,
    )


def dump_json(obj: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)
