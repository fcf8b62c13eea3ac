import numpy as np
import pytest
from scipy.stats import spearmanr

from helpers import make_recovery_fixture, two_group_matrix
from plaza.errors import DegenerateInput, EmptyMatrix, UnknownStatement
from plaza.model import VoteMatrix
from plaza.ranking import (
    BridgingConfig,
    BridgingModel,
    RankStatus,
    bridging_rank,
    fit_bridging_model,
    import_model,
    export_model,
    predict,
)


def constant_matrix(n_p=6, n_s=4, value=1.0):
    entries = {(i, j): value for i in range(n_p) for j in range(n_s)}
    return VoteMatrix(
        tuple(f"p{i}" for i in range(n_p)), tuple(f"s{j}" for j in range(n_s)), entries
    )


def random_matrix(n_p, n_s, density, seed):
    rng = np.random.default_rng(seed)
    entries = {
        (i, j): float(rng.choice([-1.0, 1.0]))
        for i in range(n_p)
        for j in range(n_s)
        if rng.random() < density
    }
    return VoteMatrix(
        tuple(f"p{i}" for i in range(n_p)), tuple(f"s{j}" for j in range(n_s)), entries
    )


class TestFit:
    def test_constant_matrix_has_no_factor_structure(self):
        model = fit_bridging_model(constant_matrix(), BridgingConfig(seed=3))
        assert max(abs(f[0]) for f in model.statement_factors.values()) <= 0.05
        for p in model.participant_intercepts:
            for s in model.statement_intercepts:
                assert predict(model, p, s) == pytest.approx(1.0, abs=0.1)

    def test_generate_then_recover_intercept_ordering(self):
        matrix, true_intercepts = make_recovery_fixture()
        model = fit_bridging_model(matrix, BridgingConfig(seed=7))
        learned = np.array([model.statement_intercepts[s] for s in matrix.statements])
        rho = spearmanr(learned, true_intercepts).statistic
        assert rho >= 0.9

    def test_two_group_case_separates_intercept_from_alignment(self):
        model = fit_bridging_model(two_group_matrix(), BridgingConfig(seed=5))
        i_a = model.statement_intercepts["sA"]
        i_b = model.statement_intercepts["sB"]
        f_a = abs(model.statement_factors["sA"][0])
        f_b = abs(model.statement_factors["sB"][0])
        assert i_a > i_b
        assert f_b > f_a

    def test_every_entity_is_parameterized_even_pass_only(self):
        m = VoteMatrix(
            ("p0", "p1", "p2"),
            ("s0", "s1"),
            {(0, 0): 1.0, (1, 1): -1.0, (2, 0): 0.0},  # p2 has only a Pass
        )
        model = fit_bridging_model(m, BridgingConfig(seed=1))
        assert set(model.participant_intercepts) == {"p0", "p1", "p2"}
        assert set(model.statement_factors) == {"s0", "s1"}
        assert np.isfinite(model.training_loss) and model.training_loss >= 0

    def test_degenerate_shapes_rejected(self):
        with pytest.raises(DegenerateInput):
            fit_bridging_model(VoteMatrix(("p0",), ("s0", "s1"), {(0, 0): 1.0}))
        with pytest.raises(DegenerateInput):
            fit_bridging_model(VoteMatrix(("p0", "p1"), ("s0",), {(0, 0): 1.0}))

    def test_all_pass_matrix_rejected(self):
        m = VoteMatrix(("p0", "p1"), ("s0", "s1"), {(0, 0): 0.0, (1, 1): 0.0})
        with pytest.raises(EmptyMatrix):
            fit_bridging_model(m)


class TestFitProperties:
    def test_determinism_bit_identical(self):
        m = random_matrix(30, 12, 0.4, seed=9)
        a = fit_bridging_model(m, BridgingConfig(seed=21))
        b = fit_bridging_model(m, BridgingConfig(seed=21))
        assert a == b

    def test_loss_non_increasing_over_epochs(self):
        m = random_matrix(40, 15, 0.5, seed=2)
        model = fit_bridging_model(m, BridgingConfig(seed=4))
        diffs = np.diff(np.array(model.loss_history))
        assert np.all(diffs <= 1e-9)

    def test_regularization_monotonicity(self):
        m = random_matrix(40, 15, 0.5, seed=6)
        norms = []
        for lam in (0.05, 0.15, 0.5):
            config = BridgingConfig(lambda_intercept=lam, seed=13)
            model = fit_bridging_model(m, config)
            norms.append(sum(v * v for v in model.statement_intercepts.values()))
        assert norms[0] >= norms[1] >= norms[2]

    def test_permutation_equivariance(self):
        m = random_matrix(25, 10, 0.5, seed=31)
        model = fit_bridging_model(m, BridgingConfig(seed=17))
        rng = np.random.default_rng(0)
        perm = rng.permutation(len(m.participants))
        remap = {old: new for new, old in enumerate(perm)}
        permuted = VoteMatrix(
            tuple(m.participants[i] for i in perm),
            m.statements,
            {(remap[pi], si): v for (pi, si), v in m.entries.items()},
        )
        permuted_model = fit_bridging_model(permuted, BridgingConfig(seed=17))
        for p in m.participants:
            assert permuted_model.participant_intercepts[p] == pytest.approx(
                model.participant_intercepts[p], abs=1e-9
            )
            assert permuted_model.participant_factors[p][0] == pytest.approx(
                model.participant_factors[p][0], abs=1e-9
            )
        for s in m.statements:
            assert permuted_model.statement_intercepts[s] == pytest.approx(
                model.statement_intercepts[s], abs=1e-9
            )


class TestPredict:
    def zero_model(self):
        return BridgingModel(
            mu=0.0,
            participant_intercepts={"p": 0.0},
            statement_intercepts={"s": 0.0},
            participant_factors={"p": (0.0,)},
            statement_factors={"s": (0.0,)},
            training_loss=0.0,
            epochs_run=0,
            config=BridgingConfig(),
        )

    def test_zero_model(self):
        assert predict(self.zero_model(), "p", "s") == 0.0

    def test_hand_arithmetic(self):
        model = BridgingModel(
            mu=0.1,
            participant_intercepts={"p": 0.2},
            statement_intercepts={"s": 0.3},
            participant_factors={"p": (1.0,)},
            statement_factors={"s": (0.5,)},
            training_loss=0.0,
            epochs_run=0,
            config=BridgingConfig(),
        )
        assert predict(model, "p", "s") == pytest.approx(1.1)


class TestBridgingRank:
    def model_with(self, intercepts):
        return BridgingModel(
            mu=0.0,
            participant_intercepts={},
            statement_intercepts=dict(intercepts),
            participant_factors={},
            statement_factors={s: (0.0,) for s in intercepts},
            training_loss=0.0,
            epochs_run=0,
            config=BridgingConfig(),
        )

    def test_threshold_statuses(self):
        ranked = bridging_rank(
            self.model_with({"s1": 0.5, "s2": 0.1, "s3": -0.5}), ["s1", "s2", "s3"]
        )
        assert [(r.statement, r.status) for r in ranked] == [
            ("s1", RankStatus.BRIDGING),
            ("s2", RankStatus.NEUTRAL),
            ("s3", RankStatus.DIVISIVE),
        ]

    def test_tie_broken_by_id(self):
        ranked = bridging_rank(self.model_with({"zz": 0.2, "aa": 0.2}), ["zz", "aa"])
        assert [r.statement for r in ranked] == ["aa", "zz"]

    def test_unknown_statement(self):
        with pytest.raises(UnknownStatement):
            bridging_rank(self.model_with({"s1": 0.0}), ["s1", "sX"])

    def test_cross_group_statement_ranked_first(self):
        model = fit_bridging_model(two_group_matrix(), BridgingConfig(seed=5))
        ranked = bridging_rank(model, ("sA", "sB"))
        assert ranked[0].statement == "sA"


def test_model_export_round_trip():
    model = fit_bridging_model(two_group_matrix(), BridgingConfig(seed=5))
    assert import_model(export_model(model)) == model


def test_config_validation():
    with pytest.raises(ValueError):
        BridgingConfig(latent_dim=0)
    with pytest.raises(ValueError):
        BridgingConfig(lambda_intercept=0.01, lambda_factor=0.03)
    with pytest.raises(ValueError):
        BridgingConfig(lambda_factor=-0.1)
    with pytest.raises(ValueError):
        BridgingConfig(tolerance=0.0)
    BridgingConfig(lambda_intercept=0.0, lambda_factor=0.0)  # boundary is legal
