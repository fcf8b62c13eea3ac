"""Astroturf robustness experiments.

Generates synthetic populations with latent opinion groups, injects
coordinated sockpuppet ballots, and measures how far an attack moves a
target statement under three orderings: raw popularity (mean agreement),
the factorization intercept, and group-informed consensus. Coordinated
accounts end up at one point of the opinion space, so the factorization
absorbs their ballots into participant-side parameters instead of the
statement intercept; popularity has no such defense.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .consensus import cluster_groups, group_informed_consensus, project_participants
from .errors import DegenerateInput, InvalidSpec, UnknownStatement
from .model import VoteMatrix
from .ranking import BridgingConfig, BridgingModel, fit_bridging_model

SOCKPUPPET_PREFIX = "sock"
TOP_DECILE = 0.10


@dataclass(frozen=True)
class GroupSpec:
    size: int
    archetype: Mapping[str, float]  # statement id -> probability of Agree


@dataclass(frozen=True)
class PopulationSpec:
    groups: tuple[GroupSpec, ...]
    noise: float = 0.0
    exposure: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.groups or any(g.size < 1 for g in self.groups):
            raise InvalidSpec("every group needs size >= 1")
        if not (0.0 <= self.noise < 0.5):
            raise InvalidSpec("noise must be in [0, 0.5)")
        if not (0.0 < self.exposure <= 1.0):
            raise InvalidSpec("exposure must be in (0, 1]")
        for g in self.groups:
            for sid, p in g.archetype.items():
                if not (0.0 <= p <= 1.0):
                    raise InvalidSpec(f"archetype probability for {sid} out of [0, 1]")


@dataclass(frozen=True)
class AttackSpec:
    target: str
    sockpuppets: int
    template: Mapping[str, float]  # statement id -> encoded vote (+1 / -1)
    jitter: float = 0.0

    def __post_init__(self):
        if self.sockpuppets < 0:
            raise InvalidSpec("sockpuppets must be >= 0")
        if not (0.0 <= self.jitter <= 0.2):
            raise InvalidSpec("jitter must be in [0, 0.2]")


@dataclass(frozen=True)
class RobustnessResult:
    target: str
    popularity_rank_before: int
    popularity_rank_after: int
    bridging_rank_before: int
    bridging_rank_after: int
    gic_rank_before: int
    gic_rank_after: int
    attack_succeeded_popularity: bool
    attack_succeeded_bridging: bool
    sockpuppet_factor_dispersion: float
    popularity_gain: float
    intercept_gain: float


def generate_population(
    spec: PopulationSpec, statements: Sequence[str]
) -> tuple[VoteMatrix, dict[str, int]]:
    """Seeded synthetic vote matrix plus ground-truth group labels.

    Each participant sees each statement independently with probability
    ``exposure``; when they see it they vote Agree with the group archetype
    probability, flipped with probability ``noise``, else Disagree.
    """
    rng = np.random.default_rng(spec.seed)
    participants: list[str] = []
    labels: dict[str, int] = {}
    entries: dict[tuple[int, int], float] = {}
    row = 0
    for g_idx, group in enumerate(spec.groups):
        for member in range(group.size):
            pid = f"g{g_idx}p{member}"
            participants.append(pid)
            labels[pid] = g_idx
            for si, sid in enumerate(statements):
                if rng.random() >= spec.exposure:
                    continue
                p_agree = group.archetype.get(sid, 0.5)
                if rng.random() < spec.noise:
                    p_agree = 1.0 - p_agree
                entries[(row, si)] = 1.0 if rng.random() < p_agree else -1.0
            row += 1
    matrix = VoteMatrix(tuple(participants), tuple(statements), entries)
    return matrix, labels


def inject_attack(matrix: VoteMatrix, attack: AttackSpec, seed: int = 0) -> VoteMatrix:
    """Append sockpuppet rows casting the template ballot with jitter flips."""
    if attack.target not in matrix.statements:
        raise UnknownStatement(attack.target)
    for sid in attack.template:
        if sid not in matrix.statements:
            raise UnknownStatement(sid)
    if attack.sockpuppets == 0:
        return matrix
    rng = np.random.default_rng(seed)
    participants = list(matrix.participants)
    entries = dict(matrix.entries)
    sindex = {s: i for i, s in enumerate(matrix.statements)}
    template = sorted(attack.template.items())
    for i in range(attack.sockpuppets):
        pid = f"{SOCKPUPPET_PREFIX}{i}"
        row = len(participants)
        participants.append(pid)
        for sid, value in template:
            if attack.jitter > 0 and rng.random() < attack.jitter:
                value = -value
            entries[(row, sindex[sid])] = value
    return VoteMatrix(tuple(participants), matrix.statements, entries)


DIVERSE_PREFIX = "fan"


def inject_diverse_support(
    matrix: VoteMatrix,
    spec: PopulationSpec,
    target: str,
    supporters: int,
    seed: int = 0,
) -> VoteMatrix:
    """Positive control: append real-looking supporters instead of sockpuppets.

    Supporters are spread round-robin over the organic groups, vote like
    their group on everything else (same exposure and noise), and all agree
    with the target. A robust ranking should let this cohort move the
    target where a coordinated one could not.
    """
    if target not in matrix.statements:
        raise UnknownStatement(target)
    rng = np.random.default_rng(seed)
    participants = list(matrix.participants)
    entries = dict(matrix.entries)
    target_col = matrix.statement_index(target)
    for i in range(supporters):
        group = spec.groups[i % len(spec.groups)]
        row = len(participants)
        participants.append(f"{DIVERSE_PREFIX}{i}")
        for si, sid in enumerate(matrix.statements):
            if si == target_col:
                continue
            if rng.random() >= spec.exposure:
                continue
            p_agree = group.archetype.get(sid, 0.5)
            if rng.random() < spec.noise:
                p_agree = 1.0 - p_agree
            entries[(row, si)] = 1.0 if rng.random() < p_agree else -1.0
        entries[(row, target_col)] = 1.0
    return VoteMatrix(tuple(participants), matrix.statements, entries)


# -- rankings ---------------------------------------------------------------------


def popularity_scores(matrix: VoteMatrix) -> dict[str, float]:
    """Raw mean agreement per statement: mean of non-Pass encodings."""
    sums = np.zeros(len(matrix.statements))
    counts = np.zeros(len(matrix.statements))
    for (_pi, si), v in matrix.entries.items():
        if v != 0.0:
            sums[si] += v
            counts[si] += 1
    means = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    return {s: float(means[i]) for i, s in enumerate(matrix.statements)}


def rank_of(scores: Mapping[str, float], target: str) -> int:
    """1-based rank under descending score, ties broken by statement id."""
    ordered = sorted(scores, key=lambda s: (-scores[s], s))
    return ordered.index(target) + 1


def top_decile_cutoff(n_statements: int) -> int:
    return max(1, int(np.ceil(n_statements * TOP_DECILE)))


def _gic_ranking(matrix: VoteMatrix, seed: int, k_range: tuple[int, int]) -> dict[str, float]:
    projection = project_participants(matrix)
    try:
        clustering = cluster_groups(projection.coordinates, k_range, seed)
        groups = clustering.assignment
    except DegenerateInput:
        groups = {p: 0 for p in matrix.voting_participants()}
    return {g.statement: g.score for g in group_informed_consensus(matrix, groups)}


def _factor_dispersion(model: BridgingModel, participant_ids: Sequence[str]) -> float:
    """RMS distance of the given participants' factors from their centroid."""
    if not participant_ids:
        return 0.0
    factors = np.array([model.participant_factors[p] for p in participant_ids])
    centroid = factors.mean(axis=0)
    return float(np.sqrt(np.mean(np.sum((factors - centroid) ** 2, axis=1))))


def evaluate_robustness(
    spec: PopulationSpec,
    attack: AttackSpec,
    config: BridgingConfig | None = None,
    k_range: tuple[int, int] = (2, 5),
    attack_seed: int = 1,
    style: str = "coordinated",
) -> RobustnessResult:
    """Run the pipeline with and without the attack and compare rankings.

    ``style`` is "coordinated" for the sockpuppet ballot or "diverse" for
    the positive control that injects the same headcount as genuine
    supporters drawn from the organic groups.
    """
    config = config or BridgingConfig()
    statements = sorted(
        {sid for g in spec.groups for sid in g.archetype} | set(attack.template) | {attack.target}
    )
    base, _labels = generate_population(spec, statements)
    if style == "coordinated":
        attacked = inject_attack(base, attack, seed=attack_seed)
    elif style == "diverse":
        attacked = inject_diverse_support(
            base, spec, attack.target, attack.sockpuppets, seed=attack_seed
        )
    else:
        raise InvalidSpec(f"unknown attack style {style!r}")

    def rankings(matrix: VoteMatrix) -> tuple[int, int, int, float, float, BridgingModel]:
        pop = popularity_scores(matrix)
        model = fit_bridging_model(matrix, config)
        gic = _gic_ranking(matrix, config.seed, k_range)
        return (
            rank_of(pop, attack.target),
            rank_of(model.statement_intercepts, attack.target),
            rank_of(gic, attack.target),
            pop[attack.target],
            model.statement_intercepts[attack.target],
            model,
        )

    pop_before, br_before, gic_before, pop_mean_before, intercept_before, _ = rankings(base)
    pop_after, br_after, gic_after, pop_mean_after, intercept_after, model_after = rankings(attacked)

    cutoff = top_decile_cutoff(len(statements))
    prefix = SOCKPUPPET_PREFIX if style == "coordinated" else DIVERSE_PREFIX
    sock_ids = [p for p in attacked.participants if p.startswith(prefix)]
    return RobustnessResult(
        target=attack.target,
        popularity_rank_before=pop_before,
        popularity_rank_after=pop_after,
        bridging_rank_before=br_before,
        bridging_rank_after=br_after,
        gic_rank_before=gic_before,
        gic_rank_after=gic_after,
        attack_succeeded_popularity=pop_after <= cutoff,
        attack_succeeded_bridging=br_after <= cutoff,
        sockpuppet_factor_dispersion=_factor_dispersion(model_after, sock_ids),
        popularity_gain=pop_mean_after - pop_mean_before,
        intercept_gain=intercept_after - intercept_before,
    )


# -- reference fixture -------------------------------------------------------------
#
# Two opposed organic camps of 100, 50 statements, and one target statement
# with 10% agreement from both camps. The coordinated attack adds 20% of the
# population voting Agree on the target and nothing else; the diverse
# control adds the same headcount as ordinary members of both camps who also
# agree on the target.

REFERENCE_SEED = 20240811
REFERENCE_GROUP_SIZE = 100
REFERENCE_STATEMENTS = 50
REFERENCE_TARGET = "s49"
REFERENCE_EXPOSURE = 0.1
REFERENCE_NOISE = 0.05


def reference_population_spec(seed: int = REFERENCE_SEED) -> PopulationSpec:
    statements = [f"s{i:02d}" for i in range(REFERENCE_STATEMENTS - 1)] + [REFERENCE_TARGET]
    camp_a: dict[str, float] = {}
    camp_b: dict[str, float] = {}
    for i, sid in enumerate(statements[:-1]):
        if i % 2 == 0:
            camp_a[sid], camp_b[sid] = 0.7, 0.1
        else:
            camp_a[sid], camp_b[sid] = 0.1, 0.7
    camp_a[REFERENCE_TARGET] = 0.1
    camp_b[REFERENCE_TARGET] = 0.1
    return PopulationSpec(
        groups=(
            GroupSpec(REFERENCE_GROUP_SIZE, camp_a),
            GroupSpec(REFERENCE_GROUP_SIZE, camp_b),
        ),
        noise=REFERENCE_NOISE,
        exposure=REFERENCE_EXPOSURE,
        seed=seed,
    )


def reference_attack(sockpuppets: int | None = None, jitter: float = 0.0) -> AttackSpec:
    if sockpuppets is None:
        sockpuppets = int(0.2 * 2 * REFERENCE_GROUP_SIZE)
    return AttackSpec(
        target=REFERENCE_TARGET,
        sockpuppets=sockpuppets,
        template={REFERENCE_TARGET: 1.0},
        jitter=jitter,
    )


# -- scenario files --------------------------------------------------------------


def population_spec_from_dict(data: Mapping) -> PopulationSpec:
    return PopulationSpec(
        groups=tuple(
            GroupSpec(size=g["size"], archetype={k: float(v) for k, v in g["archetype"].items()})
            for g in data["groups"]
        ),
        noise=float(data.get("noise", 0.0)),
        exposure=float(data.get("exposure", 1.0)),
        seed=int(data.get("seed", 0)),
    )


def attack_spec_from_dict(data: Mapping) -> AttackSpec:
    return AttackSpec(
        target=data["target"],
        sockpuppets=int(data["sockpuppets"]),
        template={k: float(v) for k, v in data["template"].items()},
        jitter=float(data.get("jitter", 0.0)),
    )


@dataclass(frozen=True)
class Scenario:
    name: str
    population: PopulationSpec
    attack: AttackSpec
    attack_seed: int = 1
    style: str = "coordinated"


def scenarios_from_dict(data: Mapping) -> tuple[list[Scenario], BridgingConfig, tuple[int, int]]:
    config = BridgingConfig.from_dict(data.get("config", {}))
    k_range = tuple(data.get("k_range", (2, 5)))
    base_population = (
        population_spec_from_dict(data["population"])
        if "population" in data
        else reference_population_spec()
    )
    scenarios = []
    for item in data["scenarios"]:
        population = (
            population_spec_from_dict(item["population"])
            if "population" in item
            else base_population
        )
        if "attack" in item:
            attack = attack_spec_from_dict(item["attack"])
        else:
            attack = reference_attack(int(item.get("sockpuppets", 0)))
        scenarios.append(
            Scenario(
                name=item["name"],
                population=population,
                attack=attack,
                attack_seed=int(item.get("attack_seed", 1)),
                style=item.get("style", "coordinated"),
            )
        )
    return scenarios, config, (int(k_range[0]), int(k_range[1]))


def load_scenarios(path: str) -> tuple[list[Scenario], BridgingConfig, tuple[int, int]]:
    with open(path, encoding="utf-8") as fh:
        return scenarios_from_dict(json.load(fh))


RESULT_COLUMNS = (
    "scenario",
    "style",
    "sockpuppets",
    "pop_rank_before",
    "pop_rank_after",
    "bridge_rank_before",
    "bridge_rank_after",
    "gic_rank_before",
    "gic_rank_after",
    "attack_succeeded_popularity",
    "attack_succeeded_bridging",
    "sock_factor_dispersion",
    "popularity_gain",
    "intercept_gain",
)


def run_scenarios(
    scenarios: Sequence[Scenario],
    config: BridgingConfig,
    k_range: tuple[int, int],
) -> list[dict]:
    """Run every scenario in order; rows are plain dicts keyed by RESULT_COLUMNS."""
    rows = []
    for sc in scenarios:
        result = evaluate_robustness(
            sc.population,
            sc.attack,
            config,
            k_range,
            attack_seed=sc.attack_seed,
            style=sc.style,
        )
        rows.append(
            {
                "scenario": sc.name,
                "style": sc.style,
                "sockpuppets": sc.attack.sockpuppets,
                "pop_rank_before": result.popularity_rank_before,
                "pop_rank_after": result.popularity_rank_after,
                "bridge_rank_before": result.bridging_rank_before,
                "bridge_rank_after": result.bridging_rank_after,
                "gic_rank_before": result.gic_rank_before,
                "gic_rank_after": result.gic_rank_after,
                "attack_succeeded_popularity": result.attack_succeeded_popularity,
                "attack_succeeded_bridging": result.attack_succeeded_bridging,
                "sock_factor_dispersion": result.sockpuppet_factor_dispersion,
                "popularity_gain": result.popularity_gain,
                "intercept_gain": result.intercept_gain,
            }
        )
    return rows


def results_table(rows: Sequence[Mapping]) -> str:
    """Tab-separated results, floats fixed to 6 places for stable diffs."""
    lines = ["\t".join(RESULT_COLUMNS)]
    for row in rows:
        cells = []
        for col in RESULT_COLUMNS:
            v = row[col]
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, float):
                cells.append(f"{v:.6f}")
            else:
                cells.append(str(v))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def results_summary(rows: Sequence[Mapping]) -> dict:
    return {
        "scenarios": list(rows),
        "any_popularity_breach": any(r["attack_succeeded_popularity"] for r in rows),
        "any_bridging_breach": any(r["attack_succeeded_bridging"] for r in rows),
    }
