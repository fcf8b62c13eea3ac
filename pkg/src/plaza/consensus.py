"""Opinion maps, group-informed consensus, and the interpretable report.

The opinion map embeds participants in 2-D via the top two principal
components of the column-centered vote matrix and clusters the embedding
into opinion groups. Group-informed consensus (GIC) then scores each
statement as the product over groups of its smoothed within-group
agreement rate, so a statement scores high only when every group leans
toward agreeing with it.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning
from sklearn.metrics import silhouette_score

from . import lifecycle
from .errors import (
    DegenerateInput,
    LifecycleViolation,
    MissingGroupAssignment,
    UnknownStatement,
)
from .model import (
    Layer,
    Moderation,
    Statement,
    StatementStats,
    VoteMatrix,
    slice_by_layer,
    vote_statistics,
)
from .ranking import BridgingModel, fit_bridging_model
from .textsim import DEFAULT_SIMILARITY, TextSimilarityProvider

POWER_TOLERANCE = 1e-9
POWER_MAX_ITERATIONS = 10_000
_POWER_START_SEED = 0x9E3779B9  # fixed start vector; keeps projections deterministic

DEFAULT_K_RANGE = (2, 5)
DEFAULT_THEME_THRESHOLD = 0.5


@dataclass(frozen=True)
class Projection:
    """2-D embedding of voting participants plus statement loadings."""

    coordinates: Mapping[str, tuple[float, float]]
    component_loadings: tuple[tuple[float, ...], tuple[float, ...]]
    explained_variance: tuple[float, float]
    statements: tuple[str, ...]


@dataclass(frozen=True)
class Clustering:
    assignment: Mapping[str, int]
    k: int
    silhouette: float


@dataclass(frozen=True)
class OpinionMap:
    projections: Mapping[str, tuple[float, float]]
    group_assignment: Mapping[str, int]
    k: int
    component_loadings: tuple[tuple[float, ...], tuple[float, ...]]
    explained_variance: tuple[float, float]
    silhouette: float


@dataclass(frozen=True)
class GroupRate:
    agrees: int
    seen: int
    smoothed_rate: float


@dataclass(frozen=True)
class GicScore:
    statement: str
    score: float
    per_group: Mapping[int, GroupRate]


@dataclass(frozen=True)
class BeeswarmPoint:
    x: float
    extremity: float


@dataclass(frozen=True)
class Theme:
    id: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class ReportEntry:
    statement: str
    gic: GicScore
    intercept: float
    beeswarm_x: float
    beeswarm_extremity: float
    per_layer_stats: Mapping[str, StatementStats]


@dataclass(frozen=True)
class ConsensusReport:
    deliberation: str
    generated_at: int
    entries: tuple[ReportEntry, ...]
    themes: tuple[Theme, ...]
    endorsements: tuple[tuple[str, int], ...] = ()
    snapshot: bool = True


# -- projection ----------------------------------------------------------------


def _centered_rows(matrix: VoteMatrix) -> tuple[list[str], np.ndarray]:
    """Rows with >= 1 entry, column-centered over observed entries.

    Missing cells are imputed as 0 after centering, i.e. treated as
    neutral rather than as agreement or disagreement.
    """
    voters = list(matrix.voting_participants())
    row_map = {matrix.participant_index(p): i for i, p in enumerate(voters)}
    n, m = len(voters), len(matrix.statements)
    dense = np.zeros((n, m))
    observed = np.zeros((n, m), dtype=bool)
    for (pi, si), v in matrix.entries.items():
        if pi in row_map:
            dense[row_map[pi], si] = v
            observed[row_map[pi], si] = True
    counts = observed.sum(axis=0)
    sums = dense.sum(axis=0)
    means = np.divide(sums, counts, out=np.zeros(m), where=counts > 0)
    centered = np.where(observed, dense - means[None, :], 0.0)
    return voters, centered


def _power_iteration(gram: np.ndarray, start: np.ndarray) -> tuple[float, np.ndarray]:
    """Dominant eigenpair of a PSD matrix; (0, zeros) if the matrix is null."""
    v = start / np.linalg.norm(start)
    for _ in range(POWER_MAX_ITERATIONS):
        w = gram @ v
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            return 0.0, np.zeros_like(v)
        v_new = w / norm
        if np.linalg.norm(v_new - v) < POWER_TOLERANCE:
            v = v_new
            break
        v = v_new
    eigenvalue = float(v @ gram @ v)
    return max(eigenvalue, 0.0), v


def _orient(loading: np.ndarray, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # sign convention: largest-magnitude loading is positive
    if loading.size and loading[np.argmax(np.abs(loading))] < 0:
        return -loading, -coords
    return loading, coords


def project_participants(matrix: VoteMatrix) -> Projection:
    """Top-2 principal components of the centered matrix via power iteration."""
    voters, centered = _centered_rows(matrix)
    if len(voters) < 2:
        raise DegenerateInput("need at least 2 participants with votes to project")
    gram = centered.T @ centered
    start = np.random.default_rng(_POWER_START_SEED).standard_normal(gram.shape[0])

    ev1, v1 = _power_iteration(gram, start)
    deflated = gram - ev1 * np.outer(v1, v1)
    ev2, v2 = _power_iteration(deflated, start)
    if ev2 > ev1:  # only possible through round-off on near-null input
        (ev1, v1), (ev2, v2) = (ev2, v2), (ev1, v1)

    c1 = centered @ v1
    c2 = centered @ v2
    v1, c1 = _orient(v1, c1)
    v2, c2 = _orient(v2, c2)
    denom = max(1, len(voters) - 1)
    return Projection(
        coordinates={p: (float(c1[i]), float(c2[i])) for i, p in enumerate(voters)},
        component_loadings=(tuple(v1), tuple(v2)),
        explained_variance=(ev1 / denom, ev2 / denom),
        statements=matrix.statements,
    )


# -- opinion groups ------------------------------------------------------------


def _canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Relabel groups in order of first appearance so output is stable."""
    remap: dict[int, int] = {}
    out = np.empty_like(labels)
    for i, lab in enumerate(labels):
        if lab not in remap:
            remap[lab] = len(remap)
        out[i] = remap[lab]
    return out


def cluster_groups(
    projections: Mapping[str, tuple[float, float]],
    k_range: tuple[int, int] = DEFAULT_K_RANGE,
    seed: int = 0,
) -> Clustering:
    """Seeded k-means++ over the embedding; k chosen by mean silhouette.

    Ties between k values go to the smallest k.
    """
    ids = list(projections)
    points = np.array([projections[p] for p in ids], dtype=np.float64)
    if len(ids) < 4:
        raise DegenerateInput("need at least 4 projected participants to cluster")
    if np.allclose(points, points[0]):
        raise DegenerateInput("projection has zero variance; no groups to find")
    k_lo, k_hi = k_range
    candidates = [k for k in range(max(2, k_lo), k_hi + 1) if k < len(ids)]
    if not candidates:
        raise DegenerateInput(f"no feasible k in {k_range} for {len(ids)} participants")

    best: tuple[float, int, np.ndarray] | None = None
    for k in candidates:
        km = KMeans(n_clusters=k, n_init=10, random_state=seed)
        with warnings.catch_warnings():
            # duplicate projections legitimately yield fewer distinct clusters
            warnings.simplefilter("ignore", ConvergenceWarning)
            labels = km.fit_predict(points)
        if len(set(labels)) < 2:
            continue
        score = float(silhouette_score(points, labels))
        if best is None or score > best[0]:
            best = (score, k, labels)
    if best is None:
        raise DegenerateInput("no clustering produced two distinct groups")
    score, _k, labels = best
    labels = _canonical_labels(labels)
    k_eff = int(labels.max()) + 1
    return Clustering(
        assignment={p: int(labels[i]) for i, p in enumerate(ids)},
        k=k_eff,
        silhouette=score,
    )


def build_opinion_map(
    matrix: VoteMatrix, k_range: tuple[int, int] = DEFAULT_K_RANGE, seed: int = 0
) -> OpinionMap:
    projection = project_participants(matrix)
    clustering = cluster_groups(projection.coordinates, k_range, seed)
    return OpinionMap(
        projections=projection.coordinates,
        group_assignment=clustering.assignment,
        k=clustering.k,
        component_loadings=projection.component_loadings,
        explained_variance=projection.explained_variance,
        silhouette=clustering.silhouette,
    )


# -- group informed consensus ----------------------------------------------------


def group_informed_consensus(
    matrix: VoteMatrix, groups: Mapping[str, int]
) -> list[GicScore]:
    """GIC per statement: product over groups of (1 + agrees) / (2 + seen).

    ``seen`` counts agrees, disagrees and passes: a pass demonstrates
    exposure, which the smoothing needs. Statements a group never saw
    contribute the 0.5 prior for that group.
    """
    for p in matrix.voting_participants():
        if p not in groups:
            raise MissingGroupAssignment(p)
    group_ids = sorted(set(groups.values()))
    group_of_row = {
        matrix.participant_index(p): g
        for p, g in groups.items()
        if p in matrix.participants
    }
    agrees: dict[tuple[int, int], int] = {}
    seen: dict[tuple[int, int], int] = {}
    for (pi, si), v in matrix.entries.items():
        g = group_of_row.get(pi)
        if g is None:
            continue
        key = (si, g)
        seen[key] = seen.get(key, 0) + 1
        if v > 0:
            agrees[key] = agrees.get(key, 0) + 1

    scores = []
    for si, sid in enumerate(matrix.statements):
        per_group = {}
        score = 1.0
        for g in group_ids:
            a = agrees.get((si, g), 0)
            s = seen.get((si, g), 0)
            rate = (1.0 + a) / (2.0 + s)
            per_group[g] = GroupRate(agrees=a, seen=s, smoothed_rate=rate)
            score *= rate
        scores.append(GicScore(statement=sid, score=score, per_group=per_group))
    return scores


def beeswarm_coordinates(
    gic_scores: Sequence[GicScore], model: BridgingModel
) -> dict[str, BeeswarmPoint]:
    """Map each GIC score onto the consensus..divisive axis in [-1, +1].

    x = 2 * score^(1/k) - 1, i.e. the geometric mean of the per-group rates
    rescaled, so the axis does not depend on how many groups were found;
    extremity is the spread (population std) of the per-group rates.
    """
    out = {}
    for gic in gic_scores:
        if gic.statement not in model.statement_intercepts:
            raise UnknownStatement(gic.statement)
        k = max(1, len(gic.per_group))
        x = 2.0 * gic.score ** (1.0 / k) - 1.0
        rates = np.array([r.smoothed_rate for r in gic.per_group.values()])
        extremity = float(rates.std()) if rates.size else 0.0
        out[gic.statement] = BeeswarmPoint(x=float(x), extremity=extremity)
    return out


# -- themes ----------------------------------------------------------------------


def group_themes(
    statements: Sequence[Statement],
    similarity: TextSimilarityProvider | None = None,
    threshold: float = DEFAULT_THEME_THRESHOLD,
) -> list[Theme]:
    """Single-linkage grouping: merge while any cross-pair similarity >= threshold.

    Equivalent to connected components of the >=-threshold similarity graph,
    so the outcome does not depend on merge order; themes and their members
    are listed by ascending statement id.
    """
    provider = similarity or DEFAULT_SIMILARITY
    ordered = sorted(statements, key=lambda s: s.id)
    parent = {s.id: s.id for s in ordered}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            if provider.similarity(a.text, b.text) >= threshold:
                ra, rb = find(a.id), find(b.id)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    members: dict[str, list[str]] = {}
    for s in ordered:
        members.setdefault(find(s.id), []).append(s.id)
    themes = []
    for i, root in enumerate(sorted(members), start=1):
        themes.append(Theme(id=f"t{i}", members=tuple(members[root])))
    return themes


# -- report ------------------------------------------------------------------


def build_report(
    deliberation: "lifecycle.Deliberation",
    matrix: VoteMatrix,
    model: BridgingModel | None,
    opinion_map: OpinionMap | None,
    gic_scores: Sequence[GicScore],
    themes: Sequence[Theme],
    now: int,
) -> ConsensusReport:
    """Assemble the snapshot report from precomputed analysis pieces.

    ``matrix`` must already be restricted to Visible statements. Entries
    are ordered by GIC score descending, ties by statement id.
    """
    if deliberation.state not in (
        lifecycle.DeliberationState.ACTIVE,
        lifecycle.DeliberationState.CONCLUDED,
    ):
        raise LifecycleViolation(
            f"cannot report on a {deliberation.state.value} deliberation"
        )
    gic_by_id = {g.statement: g for g in gic_scores}
    swarm = (
        beeswarm_coordinates(list(gic_scores), model)
        if model is not None
        else {g.statement: _gic_only_point(g) for g in gic_scores}
    )
    participants = list(deliberation.participants.values())
    layers_present = sorted({p.layer for p in participants}, key=lambda l: l.value)
    layer_slices = {
        layer: slice_by_layer(matrix, participants, layer) for layer in layers_present
    }

    entries = []
    for sid in matrix.voted_statements():
        gic = gic_by_id[sid]
        point = swarm[sid]
        per_layer = {
            layer.value: vote_statistics(layer_slices[layer], sid)
            for layer in layers_present
        }
        entries.append(
            ReportEntry(
                statement=sid,
                gic=gic,
                intercept=model.statement_intercepts[sid] if model else 0.0,
                beeswarm_x=point.x,
                beeswarm_extremity=point.extremity,
                per_layer_stats=per_layer,
            )
        )
    entries.sort(key=lambda e: (-e.gic.score, e.statement))
    return ConsensusReport(
        deliberation=deliberation.id,
        generated_at=now,
        entries=tuple(entries),
        themes=tuple(themes),
        endorsements=(),
        snapshot=True,
    )


def _gic_only_point(gic: GicScore) -> BeeswarmPoint:
    k = max(1, len(gic.per_group))
    rates = np.array([r.smoothed_rate for r in gic.per_group.values()])
    return BeeswarmPoint(
        x=float(2.0 * gic.score ** (1.0 / k) - 1.0),
        extremity=float(rates.std()) if rates.size else 0.0,
    )


def visible_matrix(deliberation: "lifecycle.Deliberation") -> VoteMatrix:
    """The deliberation's matrix restricted to Visible statements."""
    visible = [
        s.id
        for s in deliberation.statements.values()
        if s.moderation is Moderation.VISIBLE
    ]
    return deliberation.matrix.select_statements(visible)


def analyze(
    deliberation: "lifecycle.Deliberation", now: int
) -> tuple[ConsensusReport, BridgingModel | None, OpinionMap | None]:
    """Run the full pipeline on the current snapshot and build the report.

    Degenerate snapshots degrade instead of failing: with too little data
    for a projection or a factorization, all voters form a single group and
    intercepts are reported as 0. A deliberation with no votes yields an
    empty report.
    """
    matrix = visible_matrix(deliberation)
    config = deliberation.config
    voters = matrix.voting_participants()
    voted = matrix.voted_statements()
    if not voted or not voters:
        report = build_report(deliberation, matrix, None, None, [], [], now)
        return report, None, None

    model = None
    if len(matrix.participants) >= 2 and len(matrix.statements) >= 2:
        _rows, _cols, vals = matrix.to_coo()
        if np.any(vals != 0.0):
            model = fit_bridging_model(matrix, config.bridging)

    opinion_map = None
    try:
        opinion_map = build_opinion_map(
            matrix, (config.k_min, config.k_max), config.cluster_seed
        )
        groups = opinion_map.group_assignment
    except DegenerateInput:
        groups = {p: 0 for p in voters}

    gic = group_informed_consensus(matrix, groups)
    gic = [g for g in gic if g.statement in set(voted)]
    statements = [deliberation.statements[sid] for sid in voted]
    themes = group_themes(statements, threshold=config.theme_threshold)
    report = build_report(deliberation, matrix, model, opinion_map, gic, themes, now)
    return report, model, opinion_map


# -- serialization -------------------------------------------------------------


def report_to_dict(report: ConsensusReport) -> dict:
    return {
        "deliberation": report.deliberation,
        "generated_at": report.generated_at,
        "snapshot": report.snapshot,
        "entries": [
            {
                "statement": e.statement,
                "gic": {
                    "score": e.gic.score,
                    "per_group": {
                        str(g): {
                            "agrees": r.agrees,
                            "seen": r.seen,
                            "smoothed_rate": r.smoothed_rate,
                        }
                        for g, r in e.gic.per_group.items()
                    },
                },
                "intercept": e.intercept,
                "beeswarm_x": e.beeswarm_x,
                "beeswarm_extremity": e.beeswarm_extremity,
                "per_layer_stats": {
                    layer: {
                        "agrees": st.agrees,
                        "disagrees": st.disagrees,
                        "passes": st.passes,
                    }
                    for layer, st in e.per_layer_stats.items()
                },
            }
            for e in report.entries
        ],
        "themes": [{"id": t.id, "members": list(t.members)} for t in report.themes],
        "endorsements": [[p, at] for p, at in report.endorsements],
    }


def report_from_dict(data: Mapping) -> ConsensusReport:
    entries = tuple(
        ReportEntry(
            statement=e["statement"],
            gic=GicScore(
                statement=e["statement"],
                score=e["gic"]["score"],
                per_group={
                    int(g): GroupRate(r["agrees"], r["seen"], r["smoothed_rate"])
                    for g, r in e["gic"]["per_group"].items()
                },
            ),
            intercept=e["intercept"],
            beeswarm_x=e["beeswarm_x"],
            beeswarm_extremity=e["beeswarm_extremity"],
            per_layer_stats={
                layer: StatementStats(st["agrees"], st["disagrees"], st["passes"])
                for layer, st in e["per_layer_stats"].items()
            },
        )
        for e in data["entries"]
    )
    return ConsensusReport(
        deliberation=data["deliberation"],
        generated_at=data["generated_at"],
        entries=entries,
        themes=tuple(Theme(t["id"], tuple(t["members"])) for t in data["themes"]),
        endorsements=tuple((p, at) for p, at in data["endorsements"]),
        snapshot=data.get("snapshot", True),
    )


def report_to_json(report: ConsensusReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True)


def report_from_json(text: str) -> ConsensusReport:
    return report_from_dict(json.loads(text))


def report_to_table(report: ConsensusReport) -> str:
    """Tab-separated table, one row per entry, for spreadsheet hand-off."""
    theme_of = {}
    for t in report.themes:
        for m in t.members:
            theme_of[m] = t.id
    lines = ["rank\tstatement\tgic_score\tintercept\tbeeswarm_x\textremity\ttheme"]
    for rank, e in enumerate(report.entries, start=1):
        lines.append(
            f"{rank}\t{e.statement}\t{e.gic.score:.6f}\t{e.intercept:.6f}"
            f"\t{e.beeswarm_x:.6f}\t{e.beeswarm_extremity:.6f}\t{theme_of.get(e.statement, '')}"
        )
    return "\n".join(lines) + "\n"


def with_endorsements(
    report: ConsensusReport, endorsements: Sequence[tuple[str, int]]
) -> ConsensusReport:
    return replace(report, endorsements=tuple(endorsements))
