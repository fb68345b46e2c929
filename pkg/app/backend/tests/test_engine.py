"""
Tests for the Monte Carlo engine: seeds, intervals, runs, sweeps and refusals
"""
import math
import os
from unittest.mock import patch

import numpy as np
import pytest
from pydantic import ValidationError

from app.backend.errors import DomainError
from app.backend.schemas import (
    BEvent,
    BlackStep,
    BPropPair,
    Box,
    ConstantPn,
    CouplingParams,
    DEvent,
    ExperimentSpec,
    HarmonicPn,
    ModelParams,
    MSCount,
    OrientedEvent,
    SingleWord,
    WordsSeen,
)
from app.backend.services.engine import derive_seed, run, spec_digest, sweep, trial_outcome, with_value
from app.backend.services.exploration import step_black_probability
from app.backend.services.intervals import wilson_ci

BOX = Box(widths=(3, 3), height=6)


def words_spec(L: int = 2, **params) -> ExperimentSpec:
    return ExperimentSpec(experiment=WordsSeen(L=L), params=ModelParams(**params), box=BOX)


class TestSeeds:
    def test_deterministic(self):
        assert derive_seed(7, 3, "bond") == derive_seed(7, 3, "bond")

    def test_streams_are_separate(self):
        seeds = {derive_seed(7, 3, s) for s in ("bond", "site", "oriented")}
        assert len(seeds) == 3

    def test_trial_seeds_unique(self):
        assert len({derive_seed(0, k, "site") for k in range(100_000)}) == 100_000


class TestWilson:
    def test_no_successes(self):
        lo, hi = wilson_ci(0, 50)
        assert lo == 0.0 and 0.0 < hi < 0.1

    def test_all_successes(self):
        lo, hi = wilson_ci(50, 50)
        assert hi == 1.0 and 0.9 < lo < 1.0

    def test_half(self):
        lo, hi = wilson_ci(50, 100)
        assert lo == pytest.approx(0.4038, abs=1e-3)
        assert hi == pytest.approx(0.5962, abs=1e-3)

    def test_bad_counts(self):
        with pytest.raises(DomainError):
            wilson_ci(5, 3)
        with pytest.raises(DomainError):
            wilson_ci(0, 0)


class TestRun:
    """run() over each family of experiments"""

    def test_nothing_seen_without_edges(self):
        record = run(words_spec(L=1, eps=0.0, K=0), 20, 1)
        assert record.successes == 0
        assert record.p_hat == 0.0
        assert record.ci_lo == 0.0
        assert record.box == "3x3x6"

    def test_record_echoes_spec(self):
        spec = words_spec()
        record = run(spec, 5, 11)
        assert record.spec_digest == spec_digest(spec)
        assert record.master_seed == 11
        assert record.experiment == "words_seen"
        assert record.interval == "wilson"

    def test_same_seed_same_counts(self):
        spec = words_spec(L=2, eps=0.7, K=3)
        assert run(spec, 40, 5).successes == run(spec, 40, 5).successes

    def test_worker_count_does_not_change_counts(self):
        spec = ExperimentSpec(experiment=MSCount(m=1), gamma=0.8)
        assert run(spec, 60, 9, workers=1).successes == run(spec, 60, 9, workers=2).successes

    def test_black_step_matches_closed_form(self):
        params = ModelParams(eps=1.0, p=0.5, K=5, pn=ConstantPn(q=1.0))
        cp = CouplingParams(N=2, M=1, max_diag=1)
        spec = ExperimentSpec(experiment=BlackStep(), params=params, cp=cp)
        expected = step_black_probability(params, cp, "east", (1, 1))
        trials = 4000
        record = run(spec, trials, 3)
        assert record.refused == 0
        assert record.box == "1x1xlazy"
        sigma = math.sqrt(expected * (1 - expected) / trials)
        assert abs(record.p_hat - expected) < 4 * sigma

    def test_refusals_counted_separately(self):
        with patch.dict(os.environ, {"WORDPERC_MAX_WORD_LENGTH": "2"}):
            record = run(words_spec(L=4), 10, 0)
        assert record.refused == 10
        assert record.successes == 0
        assert (record.ci_lo, record.ci_hi) == (0.0, 1.0)

    def test_refused_trial_outcome(self):
        with patch.dict(os.environ, {"WORDPERC_MAX_WORD_LENGTH": "2"}):
            out = trial_outcome(words_spec(L=4), 0, 0)
        assert out.refused and not out.success
        assert "limit" in out.reason

    def test_oriented_all_events_at_full_density(self):
        record = run(ExperimentSpec(experiment=OrientedEvent(m=1), gamma=1.0), 3, 0)
        assert record.p_hat == 1.0

    def test_zero_trials(self):
        with pytest.raises(DomainError):
            run(words_spec(), 0, 0)


class TestCoupledMonotonicity:
    """Trial k uses the same uniforms at every parameter value"""

    @pytest.mark.parametrize("k", range(15))
    def test_words_seen_monotone_in_K(self, k):
        low = trial_outcome(words_spec(L=2, eps=0.5, K=1), 4, k).success
        high = trial_outcome(words_spec(L=2, eps=0.5, K=4), 4, k).success
        assert low <= high

    @pytest.mark.parametrize("k", range(15))
    def test_words_seen_monotone_in_eps(self, k):
        low = trial_outcome(words_spec(L=2, eps=0.3, K=3), 8, k).success
        high = trial_outcome(words_spec(L=2, eps=0.8, K=3), 8, k).success
        assert low <= high

    @pytest.mark.parametrize("k", range(10))
    def test_ms_failure_antitone_in_gamma(self, k):
        low = trial_outcome(ExperimentSpec(experiment=MSCount(m=1), gamma=0.6), 2, k).success
        high = trial_outcome(ExperimentSpec(experiment=MSCount(m=1), gamma=0.9), 2, k).success
        assert high <= low


class TestSweep:
    def test_counts_nondecreasing_in_K(self):
        records = sweep(words_spec(L=2, eps=0.6), "K", [0, 2, 4, 6], 30, 1)
        counts = [r.successes for r in records]
        assert counts == sorted(counts)
        assert [r.spec["params"]["K"] for r in records] == [0, 2, 4, 6]

    def test_with_value_dotted_and_alias(self):
        spec = words_spec(K=1)
        assert with_value(spec, "K", 3).params.K == 3
        assert with_value(spec, "params.eps", 0.25).params.eps == 0.25
        assert spec.params.K == 1

    def test_unknown_key(self):
        with pytest.raises(DomainError):
            with_value(words_spec(), "foo", 1)
        with pytest.raises(DomainError):
            with_value(words_spec(), "N", 1)


class TestSpecValidation:
    def test_lattice_kind_needs_box(self):
        with pytest.raises(ValidationError):
            ExperimentSpec(experiment=WordsSeen(L=2), params=ModelParams())

    def test_box_dimension_must_match(self):
        with pytest.raises(ValidationError):
            ExperimentSpec(experiment=WordsSeen(L=2), params=ModelParams(d=4), box=BOX)

    def test_coupling_needs_d3(self):
        with pytest.raises(ValidationError):
            ExperimentSpec(experiment=BlackStep(), params=ModelParams(d=2), cp=CouplingParams(N=1, M=1, max_diag=2))

    def test_oriented_needs_gamma(self):
        with pytest.raises(ValidationError):
            ExperimentSpec(experiment=MSCount(m=1))

    def test_eta_length(self):
        with pytest.raises(ValidationError):
            BEvent(m=1, eta="0101")
        assert BEvent(m=1, eta="0" * 6).m == 1


@pytest.mark.slow
class TestDeskRuns:
    """Longer runs; select with -m slow"""

    def test_high_density_events(self):
        record = run(ExperimentSpec(experiment=OrientedEvent(m=1), gamma=0.99), 500, 17)
        assert record.p_hat > 0.5
        assert record.ci_lo <= record.p_hat <= record.ci_hi

    def test_ms_failure_rare_at_high_density(self):
        record = run(ExperimentSpec(experiment=MSCount(m=2), gamma=0.97), 500, 23)
        assert record.p_hat < 0.2


class TestBlackStepRange:
    """East step with p_n = 1: P(black) = 1 - (7/8)^N"""

    @pytest.mark.parametrize("N,expected", [(1, 0.125), (2, 0.234375), (3, 0.330078125)])
    def test_product_formula(self, N, expected):
        params = ModelParams(eps=0.5, p=0.5, K=5, pn=ConstantPn(q=1.0))
        cp = CouplingParams(N=N, M=1, max_diag=1)
        assert step_black_probability(params, cp, "east", (1, 1)) == pytest.approx(expected)
        trials = 3000
        record = run(ExperimentSpec(experiment=BlackStep(), params=params, cp=cp), trials, 100 + N)
        sigma = math.sqrt(expected * (1 - expected) / trials)
        assert abs(record.p_hat - expected) < 4 * sigma


# every site carries letter 1 and every edge is open
SATURATED = ModelParams(eps=1.0, p=1.0, K=5, pn=ConstantPn(q=1.0))
CP = CouplingParams(N=2, M=2, max_diag=4)


class TestCouplingKinds:
    """b_event, b_prop_pair and d_event through the engine"""

    def test_b_event_follows_the_letters(self):
        ones = run(ExperimentSpec(experiment=BEvent(m=1, eta="1" * 6), params=SATURATED, cp=CP), 3, 0)
        zeros = run(ExperimentSpec(experiment=BEvent(m=1, eta="0" * 6), params=SATURATED, cp=CP), 3, 0)
        assert ones.p_hat == 1.0
        assert zeros.p_hat == 0.0

    def test_b_prop_pair_needs_b_m_without_b_4m(self):
        def pair(eta):
            return run(ExperimentSpec(experiment=BPropPair(m=1, eta=eta), params=SATURATED, cp=CP), 2, 0)

        # black up to diagonal 3, white beyond it
        assert pair("1" * 6 + "0" * 24).p_hat == 1.0
        # B_4 holds as well
        assert pair("1" * 30).p_hat == 0.0
        # B_1 fails
        assert pair("0" * 30).p_hat == 0.0

    def test_d_event_without_horizontal_edges(self):
        spec = ExperimentSpec(experiment=DEvent(m=1), params=ModelParams(eps=0.0, K=5), cp=CP)
        record = run(spec, 5, 0)
        assert record.successes == 0
        assert record.refused == 0

    def test_d_event_height_truncation_is_refused(self):
        params = ModelParams(eps=0.5, K=40)
        cp = CouplingParams(N=20, M=20, max_diag=4)
        box = Box(widths=(4, 4), height=3)
        d = run(ExperimentSpec(experiment=DEvent(m=1), params=params, cp=cp, box=box), 10, 0)
        b = run(ExperimentSpec(experiment=BEvent(m=1, eta="0" * 6), params=params, cp=cp, box=box), 10, 0)
        assert d.refused == 10
        assert b.refused == 10
        assert trial_outcome(ExperimentSpec(experiment=DEvent(m=1), params=params, cp=cp, box=box), 0, 0).reason \
            == "height-truncated"

    @pytest.mark.parametrize("k", range(8))
    def test_d_event_implies_every_b_event(self, k):
        params = ModelParams(eps=1.0, p=0.5, K=10, pn=ConstantPn(q=1.0))
        cp = CouplingParams(N=3, M=3, max_diag=4)
        if trial_outcome(ExperimentSpec(experiment=DEvent(m=1), params=params, cp=cp), 6, k).success:
            for eta in ("000000", "101101", "111111", "010011"):
                spec = ExperimentSpec(experiment=BEvent(m=1, eta=eta), params=params, cp=cp)
                assert trial_outcome(spec, 6, k).success


class TestQuenched:
    """A fixed bond seed shared by every trial"""

    # p = 1 makes site labels deterministic, so a trial depends on the bonds only
    PARAMS = ModelParams(p=1.0, eps=0.3, K=0)

    def spec(self, quenched=None):
        return ExperimentSpec(experiment=SingleWord(word="1"), params=self.PARAMS, box=BOX, quenched=quenched)

    @pytest.mark.parametrize("bond_seed", range(6))
    def test_pinned_environment_gives_all_or_nothing(self, bond_seed):
        record = run(self.spec(bond_seed), 40, 1)
        assert record.successes in (0, 40)

    def test_annealed_run_varies_between_trials(self):
        record = run(self.spec(), 200, 1)
        assert 0 < record.successes < 200

    def test_quenched_ignores_master_seed_for_bonds(self):
        assert run(self.spec(3), 10, 1).successes == run(self.spec(3), 10, 99).successes


@pytest.mark.slow
class TestDeskAcceptance:
    """Desk-scale sweeps over the coupling and the word oracle"""

    def test_words_seen_nondecreasing_in_K(self):
        params = ModelParams(p=0.5, eps=0.3, pn=HarmonicPn(c=1.0), K=1)
        spec = ExperimentSpec(experiment=WordsSeen(L=8), params=params, box=Box(widths=(24, 24)))
        records = sweep(spec, "K", [1, 5, 20, 50], 200, 2024)
        counts = [r.successes for r in records]
        assert counts == sorted(counts)
        assert counts[-1] > counts[0]
        assert all(r.refused == 0 for r in records)

    def test_prop_pair_rare_and_d_event_below_b_event(self):
        params = ModelParams(eps=0.5, p=0.5, K=40, pn=HarmonicPn(c=1.0))
        cp = CouplingParams(N=20, M=20, max_diag=4)
        rng = np.random.default_rng(5)
        for _ in range(4):
            eta = "".join(str(b) for b in rng.integers(0, 2, size=30))
            record = run(ExperimentSpec(experiment=BPropPair(m=1, eta=eta), params=params, cp=cp), 500, 8)
            assert record.p_hat < 0.2
        d = run(ExperimentSpec(experiment=DEvent(m=1), params=params, cp=cp), 300, 8)
        b = run(ExperimentSpec(experiment=BEvent(m=1, eta="101101"), params=params, cp=cp), 300, 8)
        assert d.successes <= b.successes
        # a north step succeeds with probability below 0.1 here
        assert step_black_probability(params, cp, "north") < 0.1
