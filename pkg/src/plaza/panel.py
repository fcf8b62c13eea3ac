"""Layered deliberative bodies: quota sampling, invites, expert scoring.

The base layer is a stratified random sample of a population frame;
further layers (expert, political power, affected party) are filled via
per-member invite budgets. Expert candidates are scored by topic-personalized
PageRank over a follow graph whose teleport weights come from profile
relevance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Collection, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BudgetExhausted,
    DuplicateParticipant,
    InfeasibleTargets,
    InsufficientCandidates,
    InsufficientEligible,
    NoRelevantNodes,
    UnknownMember,
)
from .model import INVITE_LAYERS, Layer, Participant
from .textsim import DEFAULT_SIMILARITY, TextSimilarityProvider

PROPORTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class FrameMember:
    id: str
    attributes: Mapping[str, str]
    eligible: bool = True


@dataclass(frozen=True)
class PopulationFrame:
    members: tuple[FrameMember, ...]
    attribute_schema: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        for m in self.members:
            for attr, value in m.attributes.items():
                categories = self.attribute_schema.get(attr)
                if categories is None or value not in categories:
                    raise ValueError(
                        f"member {m.id}: {attr}={value!r} not in the attribute schema"
                    )

    def eligible_members(self) -> list[FrameMember]:
        return [m for m in self.members if m.eligible]


@dataclass(frozen=True)
class InviteBudget:
    holder: str
    remaining: Mapping[Layer, int] = field(
        default_factory=lambda: {layer: 1 for layer in INVITE_LAYERS}
    )

    def __post_init__(self):
        for layer, count in self.remaining.items():
            if count < 0:
                raise ValueError(f"negative invite budget for {layer}")


@dataclass(frozen=True)
class FollowGraph:
    """Directed follow graph; relevance in [0, 1] drives the teleport."""

    relevance: Mapping[str, float]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self):
        for node, rel in self.relevance.items():
            if not np.isfinite(rel) or not (0.0 <= rel <= 1.0):
                raise ValueError(f"relevance of {node} out of [0, 1]: {rel}")
        for follower, followed in self.edges:
            if follower == followed:
                raise ValueError(f"self-loop at {follower}")
            if follower not in self.relevance or followed not in self.relevance:
                raise ValueError(f"edge ({follower}, {followed}) references unknown node")


# -- stratified sampling --------------------------------------------------------


def largest_remainder_quotas(n: int, proportions: Mapping[str, float]) -> dict[str, int]:
    """Integer quotas summing to n, by largest-remainder rounding."""
    raw = {c: n * p for c, p in proportions.items()}
    floors = {c: int(np.floor(v)) for c, v in raw.items()}
    shortfall = n - sum(floors.values())
    # distribute leftovers to the largest fractional remainders, ties by name
    order = sorted(raw, key=lambda c: (-(raw[c] - floors[c]), c))
    for c in order[:shortfall]:
        floors[c] += 1
    return floors


def stratified_sample(
    frame: PopulationFrame,
    n: int,
    targets: Mapping[str, Mapping[str, float]],
    seed: int = 0,
) -> list[str]:
    """Seeded quota fill over the eligible members of the frame.

    Quotas per attribute come from largest-remainder rounding of the target
    proportions; candidates are then drawn greedily (after a seeded
    shuffle), each step taking the candidate that minimizes the worst
    marginal deviation from quota. Raises InfeasibleTargets, carrying the
    best deviation actually achieved, when a quota exceeds the candidates
    available in that category.
    """
    if n < 1:
        raise ValueError("sample size must be positive")
    for attr, proportions in targets.items():
        total = sum(proportions.values())
        if abs(total - 1.0) > PROPORTION_TOLERANCE:
            raise ValueError(f"target proportions for {attr} sum to {total}, not 1")
    pool = frame.eligible_members()
    if n > len(pool):
        raise InsufficientEligible(f"asked for {n} of {len(pool)} eligible members")

    quotas = {
        attr: largest_remainder_quotas(n, proportions)
        for attr, proportions in targets.items()
    }
    available: dict[tuple[str, str], int] = {}
    for m in pool:
        for attr in targets:
            key = (attr, m.attributes.get(attr, ""))
            available[key] = available.get(key, 0) + 1
    infeasible = [
        (attr, cat, quota)
        for attr, cats in quotas.items()
        for cat, quota in cats.items()
        if quota > available.get((attr, cat), 0)
    ]

    rng = np.random.default_rng(seed)
    order = list(rng.permutation(len(pool)))
    shuffled = [pool[i] for i in order]

    counts: dict[tuple[str, str], int] = {}
    chosen: list[str] = []
    taken = [False] * len(shuffled)

    def deviation_after(member: FrameMember) -> tuple[float, float]:
        worst = 0.0
        total = 0.0
        for attr, cats in quotas.items():
            value = member.attributes.get(attr, "")
            for cat, quota in cats.items():
                c = counts.get((attr, cat), 0)
                if cat == value:
                    c += 1
                d = abs(c - quota) / n
                worst = max(worst, d)
                total += d
        return worst, total

    for _ in range(n):
        best_idx = -1
        best_key: tuple[float, float] | None = None
        for idx, member in enumerate(shuffled):
            if taken[idx]:
                continue
            key = deviation_after(member)
            if best_key is None or key < best_key:
                best_key = key
                best_idx = idx
        member = shuffled[best_idx]
        taken[best_idx] = True
        chosen.append(member.id)
        for attr in quotas:
            key = (attr, member.attributes.get(attr, ""))
            counts[key] = counts.get(key, 0) + 1

    achieved = sample_deviation(frame, chosen, targets)
    if infeasible:
        attr, cat, quota = infeasible[0]
        raise InfeasibleTargets(
            f"quota {quota} for {attr}={cat} exceeds {available.get((attr, cat), 0)} "
            f"available candidates",
            achieved_deviation=achieved,
        )
    return chosen


def sample_deviation(
    frame: PopulationFrame,
    sample: Sequence[str],
    targets: Mapping[str, Mapping[str, float]],
) -> float:
    """Max absolute marginal deviation of the sample from the targets."""
    by_id = {m.id: m for m in frame.members}
    n = len(sample)
    worst = 0.0
    for attr, proportions in targets.items():
        for cat, p in proportions.items():
            count = sum(1 for sid in sample if by_id[sid].attributes.get(attr) == cat)
            worst = max(worst, abs(count / n - p))
    return worst


# -- invites ---------------------------------------------------------------------


def issue_invite(
    budget: InviteBudget,
    category: Layer,
    invitee_id: str,
    existing_participants: Collection[str],
    attributes: Mapping[str, str] | None = None,
) -> tuple[InviteBudget, Participant]:
    """Spend one categorized invite; the invitee joins with that layer."""
    if category not in INVITE_LAYERS:
        raise ValueError(f"{category} is not an invite category")
    remaining = dict(budget.remaining)
    if remaining.get(category, 0) < 1:
        raise BudgetExhausted(f"{budget.holder} has no {category.value} invites left")
    if invitee_id in existing_participants:
        raise DuplicateParticipant(invitee_id)
    remaining[category] = remaining[category] - 1
    participant = Participant(
        id=invitee_id, layer=category, attributes=dict(attributes or {})
    )
    return replace(budget, remaining=remaining), participant


# -- expert scoring ---------------------------------------------------------------


def relevance_from_profiles(
    profiles: Mapping[str, str],
    topic_text: str,
    provider: TextSimilarityProvider | None = None,
) -> dict[str, float]:
    """Per-account topic relevance from profile text similarity."""
    provider = provider or DEFAULT_SIMILARITY
    return {acct: provider.similarity(text, topic_text) for acct, text in profiles.items()}


def expert_scores(
    graph: FollowGraph,
    damping: float = 0.85,
    tolerance: float = 1e-9,
    max_iterations: int = 10_000,
    trace: list[float] | None = None,
) -> dict[str, float]:
    """Topic-personalized PageRank over the follow graph.

    The teleport distribution is proportional to node relevance; mass from
    dangling nodes is redistributed to the teleport. Attention flows from
    follower to followed, so being followed by relevant accounts raises a
    node's score. ``trace``, if given, collects the L1 mass after each
    iteration (it stays 1 up to round-off).
    """
    nodes = list(graph.relevance)
    if not nodes:
        raise NoRelevantNodes("empty graph")
    index = {node: i for i, node in enumerate(nodes)}
    n = len(nodes)
    relevance = np.array([graph.relevance[node] for node in nodes], dtype=np.float64)
    total = relevance.sum()
    if total <= 0:
        raise NoRelevantNodes("no node has positive relevance")
    teleport = relevance / total

    out_degree = np.zeros(n)
    sources = np.array([index[a] for a, _b in graph.edges], dtype=np.int64)
    targets = np.array([index[b] for _a, b in graph.edges], dtype=np.int64)
    for s in sources:
        out_degree[s] += 1

    x = teleport.copy()
    for _ in range(max_iterations):
        inflow = np.zeros(n)
        if len(sources):
            weights = x[sources] / out_degree[sources]
            np.add.at(inflow, targets, weights)
        dangling = float(x[out_degree == 0].sum())
        x_new = (1.0 - damping) * teleport + damping * (inflow + dangling * teleport)
        if trace is not None:
            trace.append(float(x_new.sum()))
        if float(np.abs(x_new - x).sum()) < tolerance:
            x = x_new
            break
        x = x_new
    return {node: float(x[i]) for node, i in index.items()}


def select_expert_panel(
    scores: Mapping[str, float], panel_size: int, seed: int = 0
) -> list[str]:
    """Top scorers; a tie straddling the cutoff is resolved by a seeded draw."""
    if panel_size > len(scores):
        raise InsufficientCandidates(
            f"asked for {panel_size} of {len(scores)} scored candidates"
        )
    by_score: dict[float, list[str]] = {}
    for node, score in scores.items():
        by_score.setdefault(score, []).append(node)
    rng = np.random.default_rng(seed)
    panel: list[str] = []
    for score in sorted(by_score, reverse=True):
        band = sorted(by_score[score])
        need = panel_size - len(panel)
        if need <= 0:
            break
        if len(band) <= need:
            panel.extend(band)
        else:
            picked = rng.choice(len(band), size=need, replace=False)
            panel.extend(band[i] for i in sorted(picked))
    return panel


def panel_self_review(
    panel: Collection[str], removal_votes: Mapping[str, Collection[str]]
) -> set[str]:
    """Remove members a strict majority of the other members voted against.

    All removals are evaluated simultaneously against the original roster,
    so mutual-removal votes cannot save each other. Self-votes are ignored.
    """
    roster = set(panel)
    for target, voters in removal_votes.items():
        if target not in roster:
            raise UnknownMember(f"removal target {target} is not on the panel")
        for voter in voters:
            if voter not in roster:
                raise UnknownMember(f"voter {voter} is not on the panel")
    removed = set()
    for target, voters in removal_votes.items():
        valid = {v for v in voters if v != target}
        others = len(roster) - 1
        if len(valid) * 2 > others:
            removed.add(target)
    return roster - removed


# -- file formats ------------------------------------------------------------------


def frame_to_dict(frame: PopulationFrame) -> dict:
    return {
        "attribute_schema": {a: list(c) for a, c in frame.attribute_schema.items()},
        "members": [
            {"id": m.id, "attributes": dict(m.attributes), "eligible": m.eligible}
            for m in frame.members
        ],
    }


def frame_from_dict(data: Mapping) -> PopulationFrame:
    return PopulationFrame(
        members=tuple(
            FrameMember(m["id"], dict(m["attributes"]), bool(m.get("eligible", True)))
            for m in data["members"]
        ),
        attribute_schema={a: tuple(c) for a, c in data["attribute_schema"].items()},
    )


def load_frame(path: str) -> PopulationFrame:
    with open(path, encoding="utf-8") as fh:
        return frame_from_dict(json.load(fh))


def graph_to_dict(graph: FollowGraph) -> dict:
    return {
        "nodes": [{"id": node, "relevance": rel} for node, rel in graph.relevance.items()],
        "edges": [[a, b] for a, b in graph.edges],
    }


def graph_from_dict(data: Mapping) -> FollowGraph:
    return FollowGraph(
        relevance={node["id"]: float(node["relevance"]) for node in data["nodes"]},
        edges=tuple((a, b) for a, b in data["edges"]),
    )


def load_graph(path: str) -> FollowGraph:
    with open(path, encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh))
