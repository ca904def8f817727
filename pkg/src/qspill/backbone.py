"""Disparity-filter backbones and threshold graphs of spillover matrices."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

CT = "CT"
NPDC = "NPDC"


def disparity_alpha(weight_share, degree, keep_degree_one: bool = False):
    """p-value of an edge share under the uniform-split null: (1 - x)^(k - 1).

    Degree-one endpoints get alpha = 1 (the null has no spread to test
    against) unless ``keep_degree_one`` is set, in which case they get 0.
    Works elementwise on arrays.
    """
    x = np.asarray(weight_share, dtype=float)
    k = np.asarray(degree)
    if np.any((x < -1e-12) | (x > 1 + 1e-12)):
        raise ValueError("weight share must lie in [0, 1]")
    if np.any(k < 1):
        raise ValueError("degree must be >= 1")
    x = np.clip(x, 0.0, 1.0)
    alpha = np.power(1.0 - x, np.maximum(k - 1, 0).astype(float))
    alpha = np.where(k == 1, 0.0 if keep_degree_one else 1.0, alpha)
    return float(alpha) if alpha.ndim == 0 else alpha


@dataclass(frozen=True)
class BackboneGraph:
    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    alpha_out: np.ndarray
    alpha_in: np.ndarray
    alpha_level: float
    source_kind: str = CT

    @property
    def edges(self) -> list[tuple[int, int, float, float, float]]:
        return [
            (int(s), int(d), float(w), float(a), float(b))
            for s, d, w, a, b in zip(self.src, self.dst, self.weight, self.alpha_out, self.alpha_in)
        ]

    def __len__(self) -> int:
        return len(self.src)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.src.tolist(), self.dst.tolist()))

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        A[self.src, self.dst] = self.weight
        return A

    def to_csv(self, labels: Sequence[str] | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["src", "dst", "weight", "alpha_out", "alpha_in"])
        for s, d, wt, a, b in self.edges:
            name = (lambda i: labels[i]) if labels is not None else (lambda i: i)
            w.writerow([name(s), name(d), f"{wt:.12g}", f"{a:.12g}", f"{b:.12g}"])
        return buf.getvalue()

    def to_json(self, labels: Sequence[str] | None = None) -> str:
        return json.dumps(
            {
                "n": self.n,
                "nodes": list(labels) if labels is not None else list(range(self.n)),
                "alpha_level": self.alpha_level,
                "source_kind": self.source_kind,
                "adjacency": [[float(f"{v:.12g}") for v in row] for row in self.adjacency()],
            },
            sort_keys=True,
        )


def _prepare(W) -> np.ndarray:
    W = np.array(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("weight matrix must be square")
    np.fill_diagonal(W, 0.0)
    return W


def npdc_weights(npdc: np.ndarray) -> np.ndarray:
    """Positive part of an antisymmetric net-pairwise matrix."""
    return np.clip(np.asarray(npdc, dtype=float), 0.0, None)


def extract_backbone(W, alpha_level: float, *, source_kind: str = CT,
                     keep_degree_one: bool = False) -> BackboneGraph:
    """Keep edge (i, j) when it is significant from i's out- or j's in-perspective.

    ``W[i, j]`` is the weight of the directed edge i -> j. Negative entries
    are treated as absent.
    """
    W = _prepare(W)
    W[W < 0] = 0.0
    pos = W > 0
    s_out, s_in = W.sum(axis=1), W.sum(axis=0)
    k_out, k_in = pos.sum(axis=1), pos.sum(axis=0)
    src, dst = np.nonzero(pos)
    w = W[src, dst]
    a_out = disparity_alpha(w / s_out[src], k_out[src], keep_degree_one)
    a_in = disparity_alpha(w / s_in[dst], k_in[dst], keep_degree_one)
    a_out, a_in = np.atleast_1d(a_out), np.atleast_1d(a_in)
    keep = np.minimum(a_out, a_in) < alpha_level
    return BackboneGraph(len(W), src[keep], dst[keep], w[keep], a_out[keep], a_in[keep],
                         float(alpha_level), source_kind)


def threshold_filter(W, cutoff: float, *, source_kind: str = CT) -> BackboneGraph:
    """Keep off-diagonal edges with weight >= cutoff (alpha columns are NaN)."""
    W = _prepare(W)
    mask = W >= cutoff
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    nan = np.full(len(src), np.nan)
    return BackboneGraph(len(W), src, dst, W[src, dst], nan, nan.copy(), float("nan"), source_kind)


def spillover_edge_weights(jsot: np.ndarray) -> np.ndarray:
    """Directed edge weights from a spillover table: W[i, j] = jsot[j, i] (i -> j)."""
    return np.asarray(jsot, dtype=float).T.copy()
