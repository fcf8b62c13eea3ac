import numpy as np
import pytest

from plaza.consensus import build_opinion_map
from plaza.errors import InvalidSpec, UnknownStatement
from plaza.ranking import BridgingConfig, fit_bridging_model
from plaza.sim import (
    AttackSpec,
    GroupSpec,
    PopulationSpec,
    evaluate_robustness,
    generate_population,
    inject_attack,
    inject_diverse_support,
    popularity_scores,
    rank_of,
    reference_attack,
    reference_population_spec,
    results_summary,
    results_table,
    run_scenarios,
    scenarios_from_dict,
    top_decile_cutoff,
)

REFERENCE_CONFIG = BridgingConfig(seed=11, tolerance=1e-9, max_epochs=3000)


def simple_spec(**overrides):
    defaults = dict(
        groups=(
            GroupSpec(10, {"s0": 1.0, "s1": 0.0}),
            GroupSpec(10, {"s0": 0.0, "s1": 1.0}),
        ),
        noise=0.0,
        exposure=1.0,
        seed=1,
    )
    defaults.update(overrides)
    return PopulationSpec(**defaults)


class TestGeneratePopulation:
    def test_degenerate_all_agree(self):
        spec = PopulationSpec(
            groups=(GroupSpec(5, {"s0": 1.0, "s1": 1.0}),), noise=0.0, exposure=1.0, seed=0
        )
        matrix, labels = generate_population(spec, ["s0", "s1"])
        assert all(v == 1.0 for v in matrix.entries.values())
        assert len(matrix.entries) == 10
        assert set(labels.values()) == {0}

    def test_density_concentrates_around_exposure(self):
        spec = PopulationSpec(
            groups=(GroupSpec(100, {f"s{j}": 0.5 for j in range(50)}),),
            noise=0.0,
            exposure=0.3,
            seed=5,
        )
        matrix, _ = generate_population(spec, [f"s{j}" for j in range(50)])
        density = len(matrix.entries) / (100 * 50)
        assert density == pytest.approx(0.3, abs=0.03)

    def test_opposite_archetypes_recoverable_by_clustering(self):
        spec = simple_spec(
            groups=(
                GroupSpec(30, {f"s{j}": 1.0 if j % 2 else 0.0 for j in range(10)}),
                GroupSpec(30, {f"s{j}": 0.0 if j % 2 else 1.0 for j in range(10)}),
            ),
            noise=0.05,
        )
        matrix, labels = generate_population(spec, [f"s{j}" for j in range(10)])
        omap = build_opinion_map(matrix, (2, 5), seed=2)
        assert omap.k == 2
        # ground-truth labels are the oracle, up to label permutation
        agreements = sum(
            1 for p, g in omap.group_assignment.items() if g == labels[p]
        )
        rate = max(agreements, len(labels) - agreements) / len(labels)
        assert rate >= 0.95

    def test_determinism(self):
        spec = simple_spec()
        a, _ = generate_population(spec, ["s0", "s1"])
        b, _ = generate_population(spec, ["s0", "s1"])
        assert a == b

    def test_invalid_specs_rejected(self):
        with pytest.raises(InvalidSpec):
            PopulationSpec(groups=(), seed=0)
        with pytest.raises(InvalidSpec):
            simple_spec(noise=0.5)
        with pytest.raises(InvalidSpec):
            simple_spec(exposure=0.0)
        with pytest.raises(InvalidSpec):
            AttackSpec(target="s0", sockpuppets=-1, template={})
        with pytest.raises(InvalidSpec):
            AttackSpec(target="s0", sockpuppets=1, template={}, jitter=0.5)


class TestInjectAttack:
    def base(self):
        return generate_population(simple_spec(), ["s0", "s1"])[0]

    def test_zero_sockpuppets_identity(self):
        base = self.base()
        assert inject_attack(base, AttackSpec("s0", 0, {"s0": 1.0})) == base

    def test_pure_duplication(self):
        base = self.base()
        attacked = inject_attack(base, AttackSpec("s0", 10, {"s0": 1.0, "s1": -1.0}), seed=3)
        assert len(attacked.participants) == len(base.participants) + 10
        for i in range(10):
            row = attacked.row_entries(f"sock{i}")
            assert row == {"s0": 1.0, "s1": -1.0}
        for p in base.participants:
            assert attacked.row_entries(p) == base.row_entries(p)

    def test_jitter_flip_count_matches_seeded_generator(self):
        statements = [f"s{j}" for j in range(50)]
        spec = PopulationSpec(
            groups=(GroupSpec(4, {s: 0.5 for s in statements}),), exposure=1.0, seed=2
        )
        base, _ = generate_population(spec, statements)
        template = {s: 1.0 for s in statements}
        attacked = inject_attack(
            base, AttackSpec("s0", 10, template, jitter=0.1), seed=123
        )
        flipped = sum(
            1
            for i in range(10)
            for s, v in attacked.row_entries(f"sock{i}").items()
            if v == -1.0
        )
        # binomial(500, 0.1): mean 50, std ~6.7; the committed seed is the oracle
        assert abs(flipped - 50) <= 20

    def test_unknown_target(self):
        with pytest.raises(UnknownStatement):
            inject_attack(self.base(), AttackSpec("sX", 1, {"sX": 1.0}))


class TestPopularity:
    def test_mean_agreement_and_rank(self):
        matrix, _ = generate_population(
            PopulationSpec(groups=(GroupSpec(10, {"s0": 1.0, "s1": 0.0}),), seed=3),
            ["s0", "s1"],
        )
        scores = popularity_scores(matrix)
        assert scores["s0"] == 1.0
        assert scores["s1"] == -1.0
        assert rank_of(scores, "s0") == 1
        assert rank_of(scores, "s1") == 2

    def test_rank_ties_break_by_id(self):
        assert rank_of({"b": 0.5, "a": 0.5}, "a") == 1
        assert rank_of({"b": 0.5, "a": 0.5}, "b") == 2

    def test_top_decile_cutoff(self):
        assert top_decile_cutoff(50) == 5
        assert top_decile_cutoff(5) == 1
        assert top_decile_cutoff(1) == 1


class TestRobustness:
    def test_zero_sockpuppets_leaves_ranks_unchanged(self):
        result = evaluate_robustness(
            reference_population_spec(), reference_attack(0), REFERENCE_CONFIG
        )
        assert result.popularity_rank_before == result.popularity_rank_after
        assert result.bridging_rank_before == result.bridging_rank_after
        assert result.gic_rank_before == result.gic_rank_after

    def test_headline_coordinated_attack(self):
        result = evaluate_robustness(
            reference_population_spec(), reference_attack(), REFERENCE_CONFIG
        )
        assert result.attack_succeeded_popularity is True
        assert result.attack_succeeded_bridging is False

    def test_positive_control_diverse_support(self):
        result = evaluate_robustness(
            reference_population_spec(),
            reference_attack(),
            REFERENCE_CONFIG,
            style="diverse",
        )
        assert result.attack_succeeded_popularity is True
        assert result.attack_succeeded_bridging is True

    def test_determinism(self):
        args = (reference_population_spec(), reference_attack(20), REFERENCE_CONFIG)
        assert evaluate_robustness(*args) == evaluate_robustness(*args)

    def test_sockpuppet_factors_collapse(self):
        spec = reference_population_spec()
        attack = reference_attack()
        base, _ = generate_population(
            spec, sorted({s for g in spec.groups for s in g.archetype})
        )
        attacked = inject_attack(base, attack, seed=1)
        model = fit_bridging_model(attacked, REFERENCE_CONFIG)
        factors = np.array(
            [model.participant_factors[f"sock{i}"] for i in range(attack.sockpuppets)]
        )
        spread = np.max(np.abs(factors - factors[0]))
        assert spread <= 1e-6

    def test_monotone_popularity_corruption(self):
        spec = reference_population_spec()
        means = []
        for socks in (0, 20, 40, 80):
            result = evaluate_robustness(spec, reference_attack(socks), REFERENCE_CONFIG)
            means.append(result.popularity_gain)
        assert all(b >= a for a, b in zip(means, means[1:]))

    def test_intercept_movement_bounded_by_popularity_movement(self):
        spec = reference_population_spec()
        for socks in (0, 20, 40, 80):
            result = evaluate_robustness(spec, reference_attack(socks), REFERENCE_CONFIG)
            if socks == 0:
                assert result.intercept_gain == 0.0
                assert result.popularity_gain == 0.0
            else:
                assert result.intercept_gain < result.popularity_gain

    def test_duplicating_a_voter_moves_the_mean_more_than_the_intercept(self):
        # same collapse effect with the duplicated row as the ballot template
        spec = reference_population_spec()
        statements = sorted({s for g in spec.groups for s in g.archetype})
        base, _ = generate_population(spec, statements)
        target = "s49"
        agreeing = next(
            p for p in base.participants if base.row_entries(p).get(target) == 1.0
        )
        template = base.row_entries(agreeing)
        attacked = inject_attack(base, AttackSpec(target, 20, template), seed=9)
        before_model = fit_bridging_model(base, REFERENCE_CONFIG)
        after_model = fit_bridging_model(attacked, REFERENCE_CONFIG)
        pop_delta = abs(
            popularity_scores(attacked)[target] - popularity_scores(base)[target]
        )
        intercept_delta = abs(
            after_model.statement_intercepts[target]
            - before_model.statement_intercepts[target]
        )
        assert intercept_delta < pop_delta


class TestScenarioFiles:
    def test_load_and_run_committed_scenarios(self, fixtures_dir):
        import json

        with open(fixtures_dir / "attack_scenario.json") as fh:
            scenarios, config, k_range = scenarios_from_dict(json.load(fh))
        assert [s.name for s in scenarios] == [
            "no_attack",
            "coordinated_10pct",
            "coordinated_20pct",
            "coordinated_40pct",
            "diverse_support_20pct",
        ]
        rows = run_scenarios(scenarios[:1], config, k_range)
        table = results_table(rows)
        assert table.splitlines()[0].startswith("scenario\tstyle")
        summary = results_summary(rows)
        assert summary["any_popularity_breach"] is False

    def test_diverse_injection_spreads_over_groups(self):
        spec = simple_spec()
        base, _ = generate_population(spec, ["s0", "s1"])
        boosted = inject_diverse_support(base, spec, "s0", 6, seed=2)
        assert len(boosted.participants) == len(base.participants) + 6
        for i in range(6):
            assert boosted.row_entries(f"fan{i}")["s0"] == 1.0
