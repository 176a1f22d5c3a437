import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irsdiag.airlink import run_initialization
from irsdiag.channel import default_geometry, synthesize_channels
from irsdiag.grid import DefectRect, FailureScene, GridDims
from irsdiag.sortpm import (
    PosteriorState,
    QuerySet,
    design_query,
    estimate_boundary_sortpm,
    posterior_update,
    run_sortpm_generic,
    singleton_fallback,
    sorted_view,
)

PI = np.pi


def qset(*members):
    return QuerySet(frozenset(members), contiguous=True)


probs_strategy = st.lists(
    st.floats(min_value=1e-6, max_value=1.0), min_size=1, max_size=12
).map(lambda w: np.array(w) / np.sum(w))


class TestPosteriorUpdate:
    def test_example1_first_update(self):
        state = PosteriorState(np.array([0.5, 0.5]))
        new = posterior_update(state, qset(1), answer=0, q=0.1)
        assert np.allclose(new.probs, [0.1, 0.9], atol=1e-15)
        assert new.round == 1

    def test_example3_first_update(self):
        state = PosteriorState(np.full(4, 0.25))
        new = posterior_update(state, qset(1, 2), answer=0, q=0.1)
        assert np.allclose(new.probs, [0.05, 0.05, 0.45, 0.45], atol=1e-15)

    def test_example3_fifth_update(self):
        state = PosteriorState(np.array([0.45, 0.45, 0.05, 0.05]))
        new = posterior_update(state, qset(1), answer=0, q=0.1)
        expected = [1 / 12, 0.75, 1 / 12, 1 / 12]
        assert np.allclose(new.probs, expected, atol=1e-12)

    def test_full_set_query_is_noop_for_yes(self):
        state = PosteriorState(np.array([0.2, 0.3, 0.5]))
        new = posterior_update(state, qset(1, 2, 3), answer=1, q=0.2)
        assert np.allclose(new.probs, state.probs, atol=1e-15)

    def test_q_out_of_range(self):
        state = PosteriorState(np.array([0.5, 0.5]))
        for q in (0.0, 0.5, 0.7, -0.1):
            with pytest.raises(ValueError):
                posterior_update(state, qset(1), 1, q)

    @given(probs=probs_strategy, q=st.floats(0.01, 0.49),
           answer=st.integers(0, 1), data=st.data())
    @settings(max_examples=100, deadline=None)
    def test_normalization_and_nonnegativity(self, probs, q, answer, data):
        members = data.draw(
            st.sets(st.integers(1, len(probs)), min_size=1, max_size=len(probs))
        )
        state = PosteriorState(probs)
        new = posterior_update(
            state, QuerySet(frozenset(members), contiguous=True), answer, q
        )
        assert np.all(new.probs >= 0)
        assert abs(new.probs.sum() - 1.0) <= 1e-12

    @given(probs=probs_strategy, q=st.floats(0.01, 0.49), data=st.data())
    @settings(max_examples=60, deadline=None)
    def test_order_consistent_on_each_side(self, probs, q, data):
        if len(probs) < 2:
            return
        members = data.draw(
            st.sets(st.integers(1, len(probs)), min_size=1, max_size=len(probs))
        )
        state = PosteriorState(probs)
        new = posterior_update(
            state, QuerySet(frozenset(members), contiguous=True), 1, q
        )
        for i in range(len(probs)):
            for j in range(len(probs)):
                same_side = ((i + 1) in members) == ((j + 1) in members)
                if same_side and probs[i] < probs[j]:
                    assert new.probs[i] <= new.probs[j] + 1e-15


class TestDesignQuery:
    def test_uniform_four_takes_half(self):
        q = design_query(PosteriorState(np.full(4, 0.25)))
        assert q.members == {1, 2} and q.contiguous

    def test_example1_second_round(self):
        q = design_query(PosteriorState(np.array([0.1, 0.9])))
        assert q.members == {2}

    def test_single_candidate(self):
        q = design_query(PosteriorState(np.array([1.0])))
        assert q.members == {1}

    def test_tie_breaks(self):
        # equal probabilities sort by ascending index; smallest l* wins ties
        q = design_query(PosteriorState(np.array([0.5, 0.5])))
        assert q.members == {1}

    def test_non_contiguous_flagged(self):
        q = design_query(PosteriorState(np.array([0.3, 0.1, 0.3, 0.3])))
        assert q.members == {1, 3} and not q.contiguous

    @given(probs=probs_strategy)
    @settings(max_examples=100, deadline=None)
    def test_matches_exhaustive_scan(self, probs):
        state = PosteriorState(probs)
        view = sorted_view(state)
        cums = np.cumsum(view.sorted_probs)
        best_l = min(
            range(1, len(probs) + 1), key=lambda l: (abs(cums[l - 1] - 0.5), l)
        )
        q = design_query(state)
        assert q.members == set(int(i) for i in view.order[:best_l])

    @given(probs=probs_strategy)
    @settings(max_examples=60, deadline=None)
    def test_selected_mass_closest_to_half(self, probs):
        state = PosteriorState(probs)
        q = design_query(state)
        mass = state.probs[np.array(sorted(q.members)) - 1].sum()
        cums = np.cumsum(sorted_view(state).sorted_probs)
        assert all(abs(mass - 0.5) <= abs(c - 0.5) + 1e-12 for c in cums)


class TestSortedView:
    def test_stable_tie_break(self):
        view = sorted_view(PosteriorState(np.array([0.25, 0.25, 0.25, 0.25])))
        assert list(view.order) == [1, 2, 3, 4]

    def test_descending(self):
        view = sorted_view(PosteriorState(np.array([0.2, 0.5, 0.3])))
        assert list(view.order) == [2, 3, 1]
        assert np.all(np.diff(view.sorted_probs) <= 0)


class TestGenericEngine:
    def test_example1_trajectory(self):
        answers = iter([0, 0, 1, 1])
        result = run_sortpm_generic(lambda s: next(answers), d=2, q=0.1,
                                    epsilon=0.05, k_max=50)
        assert result.estimate == 1
        assert result.rounds == 4
        assert result.converged
        assert np.allclose(result.history[-1], [81 / 82, 1 / 82], atol=1e-12)

    def test_single_candidate_converges_immediately(self):
        result = run_sortpm_generic(lambda s: 1, d=1, q=0.1, epsilon=0.05, k_max=5)
        assert result.estimate == 1
        assert result.rounds == 0
        assert result.converged

    def test_truthful_oracle_always_finds_target(self):
        rng = np.random.default_rng(17)
        hits = 0
        for _ in range(1000):
            omega = int(rng.integers(1, 17))
            result = run_sortpm_generic(
                lambda s: int(omega in s.members), d=16, q=0.1,
                epsilon=0.05, k_max=100,
            )
            hits += result.converged and result.estimate == omega
        assert hits == 1000

    def test_posterior_of_truth_grows_with_truthful_answers(self):
        # supermartingale behavior: >=99% of seeded runs converge to truth
        rng = np.random.default_rng(23)
        good = 0
        for _ in range(1000):
            omega = int(rng.integers(1, 33))
            result = run_sortpm_generic(
                lambda s: int(omega in s.members), d=32, q=0.1,
                epsilon=0.1, k_max=200,
            )
            good += result.converged and result.estimate == omega
        assert good >= 990

    def test_one_lie_recovery(self):
        # lie once at round 3, truthful otherwise
        omega = 5
        calls = {"k": 0}

        def oracle(s):
            calls["k"] += 1
            truth = int(omega in s.members)
            return 1 - truth if calls["k"] == 3 else truth

        result = run_sortpm_generic(oracle, d=8, q=0.1, epsilon=0.05, k_max=100)
        assert result.converged and result.estimate == omega

    def test_k_max_exhaustion_flagged(self):
        rng = np.random.default_rng(5)
        result = run_sortpm_generic(
            lambda s: int(rng.uniform() < 0.5), d=16, q=0.45,
            epsilon=1e-6, k_max=3,
        )
        assert not result.converged
        assert result.rounds == 3

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            run_sortpm_generic(lambda s: 1, d=4, q=0.1, epsilon=1.5, k_max=10)
        with pytest.raises(ValueError):
            run_sortpm_generic(lambda s: 1, d=4, q=0.1, epsilon=0.1, k_max=0)


class TestSingletonFallback:
    def test_contiguous_untouched(self):
        state = PosteriorState(np.full(4, 0.25))
        q = qset(1, 2)
        assert singleton_fallback(q, state) is q

    def test_non_contiguous_replaced_by_top(self):
        state = PosteriorState(np.array([0.1, 0.2, 0.3, 0.4]))
        q = QuerySet(frozenset({1, 4}), contiguous=False)
        out = singleton_fallback(q, state)
        assert out.members == {4} and out.contiguous


def make_radio(n=4, seed=2, rect=(2, 3, 2, 3)):
    dims = GridDims(n, n)
    geom = default_geometry(dims, 3)
    ch = synthesize_channels(geom, 1e-3, 1e-2, 1e-2, 0.0)
    scene = FailureScene.rectangular(
        dims, DefectRect(*rect), rng=np.random.default_rng(seed)
    )
    init = run_initialization(scene, ch, (1.0, 1.0), (0.0, PI), None)
    return scene, ch, init


class TestBoundaryEstimation:
    def test_example3_scene_zero_noise(self):
        scene, ch, init = make_radio()
        for seed in (1, 2, 3):
            est = estimate_boundary_sortpm(
                "h_min", scene, init, ch, np.random.default_rng(seed),
                pilot=1.0, epsilon=0.05,
            )
            assert est.index == 2
            assert est.converged

    def test_all_four_boundaries(self):
        scene, ch, init = make_radio(n=8, rect=(3, 5, 2, 6))
        expected = {"h_min": 3, "h_max": 5, "v_min": 2, "v_max": 6}
        for boundary, value in expected.items():
            est = estimate_boundary_sortpm(
                boundary, scene, init, ch, None, pilot=1.0, epsilon=0.05
            )
            assert est.index == value, boundary

    def test_full_width_defect_boundaries_at_edges(self):
        scene, ch, init = make_radio(n=4, rect=(1, 4, 2, 3))
        assert estimate_boundary_sortpm(
            "h_min", scene, init, ch, None, pilot=1.0
        ).index == 1
        assert estimate_boundary_sortpm(
            "h_max", scene, init, ch, None, pilot=1.0
        ).index == 4

    def test_slot_accounting_matches_rounds(self):
        scene, ch, init = make_radio()
        est = estimate_boundary_sortpm(
            "h_min", scene, init, ch, None, pilot=1.0, epsilon=0.05
        )
        # every round costs one or two slots
        assert est.rounds <= est.slots_used <= 2 * est.rounds

    def test_unknown_boundary_rejected(self):
        scene, ch, init = make_radio()
        with pytest.raises(ValueError):
            estimate_boundary_sortpm("h_mid", scene, init, ch, None, pilot=1.0)
