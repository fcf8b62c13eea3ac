import pytest

from plaza.errors import LifecycleViolation, TooEarly, WindowExpired
from plaza.lifecycle import (
    ActivationProposal,
    Deliberation,
    DeliberationConfig,
    DeliberationState,
    TransitionEvent,
    default_prompt,
    guard_write,
    record_upvote,
    transition,
)
from plaza.model import Statement, Vote, VoteValue

HOUR = 60 * 60 * 1000


def proposal(threshold=3, window_ms=72 * HOUR):
    return ActivationProposal(
        id="d1", topic_text="bike lanes", locale="sf",
        proposed_at=1_000, threshold=threshold, window_ms=window_ms,
    )


def deliberation(state=DeliberationState.PROPOSED, **kwargs):
    defaults = dict(
        id="d1",
        prompt=default_prompt("bike lanes"),
        locale="sf",
        config=DeliberationConfig(),
        state=state,
    )
    defaults.update(kwargs)
    return Deliberation(**defaults)


class TestRecordUpvote:
    def test_threshold_crossing_emits_once(self):
        p = proposal(threshold=3)
        activated_count = 0
        for i in range(5):
            p, crossed = record_upvote(p, f"acct{i}", now=2_000)
            activated_count += crossed
        assert activated_count == 1
        assert len(p.upvoters) == 5

    def test_double_upvote_is_noop(self):
        p = proposal()
        p, _ = record_upvote(p, "acct", now=2_000)
        p2, crossed = record_upvote(p, "acct", now=3_000)
        assert p2 == p
        assert not crossed

    def test_window_expired(self):
        p = proposal(window_ms=HOUR)
        with pytest.raises(WindowExpired):
            record_upvote(p, "late", now=1_000 + HOUR + 1)

    def test_exactly_once_under_replay(self):
        # replaying any upvote sequence emits at most one activation
        import numpy as np

        rng = np.random.default_rng(8)
        accounts = [f"acct{rng.integers(6)}" for _ in range(30)]
        p = proposal(threshold=4)
        crossings = 0
        for account in accounts:
            p, crossed = record_upvote(p, account, now=2_000)
            crossings += crossed
        assert crossings <= 1


class TestTransition:
    def test_activate_sets_conclusion_time(self):
        d = transition(deliberation(), TransitionEvent.ACTIVATE, now=5_000)
        assert d.state is DeliberationState.ACTIVE
        assert d.activated_at == 5_000
        assert d.concludes_at == 5_000 + d.config.duration_ms

    def test_illegal_skip(self):
        d = transition(deliberation(), TransitionEvent.ACTIVATE, now=5_000)
        with pytest.raises(LifecycleViolation):
            transition(d, TransitionEvent.PUBLISH, now=6_000)

    def test_conclude_too_early_by_one_ms(self):
        d = transition(deliberation(), TransitionEvent.ACTIVATE, now=0)
        with pytest.raises(TooEarly):
            transition(d, TransitionEvent.CONCLUDE, now=d.concludes_at - 1)

    def test_conclude_at_boundary(self):
        d = transition(deliberation(), TransitionEvent.ACTIVATE, now=0)
        concluded = transition(d, TransitionEvent.CONCLUDE, now=d.concludes_at)
        assert concluded.state is DeliberationState.CONCLUDED

    def test_manual_conclude_flag(self):
        config = DeliberationConfig(manual_conclude=True)
        d = transition(deliberation(config=config), TransitionEvent.ACTIVATE, now=0)
        concluded = transition(d, TransitionEvent.CONCLUDE, now=10)
        assert concluded.state is DeliberationState.CONCLUDED

    def test_full_forward_path(self):
        d = deliberation()
        d = transition(d, TransitionEvent.ACTIVATE, now=0)
        d = transition(d, TransitionEvent.CONCLUDE, now=d.concludes_at)
        d = transition(d, TransitionEvent.PUBLISH, now=d.concludes_at + 1)
        assert d.state is DeliberationState.PUBLISHED

    def test_no_backward_moves(self):
        d = deliberation(state=DeliberationState.CONCLUDED)
        with pytest.raises(LifecycleViolation):
            transition(d, TransitionEvent.ACTIVATE, now=0)
        with pytest.raises(LifecycleViolation):
            transition(d, TransitionEvent.CONCLUDE, now=0)


class TestGuardWrite:
    def active(self):
        return transition(deliberation(), TransitionEvent.ACTIVATE, now=0)

    def vote(self, at):
        return Vote("p1", "s1", VoteValue.AGREE, at)

    def test_accepts_live_write(self):
        d = self.active()
        decision = guard_write(d, self.vote(5), now=5)
        assert decision.accepted

    def test_rejects_concluded(self):
        d = self.active()
        d = transition(d, TransitionEvent.CONCLUDE, now=d.concludes_at)
        decision = guard_write(d, self.vote(0), now=d.concludes_at + 1)
        assert not decision.accepted
        assert decision.reason == "StateNotActive"

    def test_rejects_at_conclusion_instant(self):
        d = self.active()
        decision = guard_write(d, self.vote(d.concludes_at), now=d.concludes_at)
        assert not decision.accepted
        assert decision.reason == "Expired"

    def test_statement_writes_guarded_too(self):
        statement = Statement("s1", "system", "hello", 0)
        decision = guard_write(deliberation(), statement, now=0)
        assert not decision.accepted
        assert decision.reason == "StateNotActive"


def test_default_prompt_template():
    assert default_prompt("bike lanes") == "What are your thoughts on bike lanes topic?"


def test_config_round_trip():
    config = DeliberationConfig(k_min=3, k_max=4, duration_ms=123, manual_conclude=True)
    assert DeliberationConfig.from_dict(config.to_dict()) == config
