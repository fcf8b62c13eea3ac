"""Shared generators for oracle-based tests.

Each generator owns its ground truth: tests recover structure through the
library and compare against what was planted here.
"""
from __future__ import annotations

import numpy as np

from plaza.model import VoteMatrix
from plaza.panel import FollowGraph

RECOVERY_SEED = 123
RECOVERY_PARTICIPANTS = 200
RECOVERY_STATEMENTS = 100
RECOVERY_DENSITY = 0.3
RECOVERY_NOISE = 0.1


def make_recovery_fixture(seed: int = RECOVERY_SEED) -> tuple[VoteMatrix, np.ndarray]:
    """Votes drawn from a known additive + one-factor model.

    Returns the matrix and the true statement intercepts; a good fit must
    recover their ordering. Votes are the sign of the noisy latent rating,
    observed with probability RECOVERY_DENSITY.
    """
    rng = np.random.default_rng(seed)
    n_p, n_s = RECOVERY_PARTICIPANTS, RECOVERY_STATEMENTS
    i_u = rng.normal(0, 0.2, n_p)
    i_n = rng.uniform(-1, 1, n_s)
    f_u = np.where(np.arange(n_p) < n_p // 2, 1.0, -1.0) * 0.8 + rng.normal(0, 0.1, n_p)
    f_n = rng.uniform(-0.8, 0.8, n_s)
    entries = {}
    for i in range(n_p):
        for j in range(n_s):
            if rng.random() < RECOVERY_DENSITY:
                val = i_u[i] + i_n[j] + f_u[i] * f_n[j] + rng.normal(0, RECOVERY_NOISE)
                entries[(i, j)] = 1.0 if val >= 0 else -1.0
    matrix = VoteMatrix(
        tuple(f"p{i}" for i in range(n_p)),
        tuple(f"s{j:03d}" for j in range(n_s)),
        entries,
    )
    return matrix, i_n


def two_group_matrix() -> VoteMatrix:
    """40 participants in two camps; sA unites them, sB splits them."""
    parts = tuple([f"a{i:02d}" for i in range(20)] + [f"b{i:02d}" for i in range(20)])
    entries = {}
    for i in range(40):
        entries[(i, 0)] = 1.0
        entries[(i, 1)] = 1.0 if i < 20 else -1.0
    return VoteMatrix(parts, ("sA", "sB"), entries)


def make_blobs(
    centers: list[tuple[float, float]], per_blob: int, radius: float, seed: int
) -> tuple[dict[str, tuple[float, float]], dict[str, int]]:
    rng = np.random.default_rng(seed)
    points: dict[str, tuple[float, float]] = {}
    truth: dict[str, int] = {}
    for b, center in enumerate(centers):
        for i in range(per_blob):
            pid = f"b{b}p{i}"
            xy = rng.normal(center, radius)
            points[pid] = (float(xy[0]), float(xy[1]))
            truth[pid] = b
    return points, truth


def planted_expert_graph(seed: int = 0) -> tuple[FollowGraph, set[str]]:
    """20 densely interlinked experts, 10 relevance decoys, 70 bystanders.

    The decoys have expert-grade relevance but no standing in the follow
    structure; ranking by relevance alone would let several through.
    """
    rng = np.random.default_rng(seed)
    experts = [f"exp{i}" for i in range(20)]
    decoys = [f"dec{i}" for i in range(10)]
    others = [f"usr{i}" for i in range(70)]
    relevance: dict[str, float] = {}
    for e in experts:
        relevance[e] = float(rng.uniform(0.5, 1.0))
    for d in decoys:
        relevance[d] = float(rng.uniform(0.5, 1.0))
    for o in others:
        relevance[o] = float(rng.uniform(0.0, 0.1))
    edges = set()
    for e in experts:
        for t in rng.choice([x for x in experts if x != e], size=8, replace=False):
            edges.add((e, t))
    for node in decoys + others:
        for t in rng.choice(experts, size=2, replace=False):
            edges.add((node, t))
        pool = [x for x in decoys + others if x != node]
        for t in rng.choice(pool, size=2, replace=False):
            edges.add((node, str(t)))
    return FollowGraph(relevance, tuple(sorted(edges))), set(experts)
