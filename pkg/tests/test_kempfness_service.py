"""
Tests for the torus Kempf-Ness sandbox
"""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from services.errors import PreconditionError, SolverError, ValidationError
from services.kempfness_service import (
    POLYSTABLE,
    SEMISTABLE,
    UNSTABLE,
    KempfNessService,
    TorusRepPoint,
    sweep,
    verdict_oracle,
)


def rep(weights, point):
    weights = tuple(tuple(w) if isinstance(w, (list, tuple)) else (w,) for w in weights)
    return TorusRepPoint(k=len(weights[0]), weights=weights, point=tuple(complex(b) for b in point))


PAIR = [1, -1]


class TestMomentMap:

    @pytest.mark.parametrize('point, expected', [((1, 1), 0.0), ((2, 1), 3.0), ((0, 0), 0.0)])
    def test_opposite_weights(self, point, expected):
        assert KempfNessService.linear_moment_map(rep(PAIR, point)) == pytest.approx([expected])

    def test_scaling_is_quadratic(self):
        report = KempfNessService.scaling_expansion_check(rep(PAIR, (2, 1)), [0.0, 2.0])
        assert report.rows[0][1] == (0.0,)
        assert report.rows[1][1] == pytest.approx((12.0,))
        assert report.max_deviation == 0.0

    @pytest.mark.parametrize('seed', range(5))
    def test_scaling_on_random_points(self, seed):
        rp = KempfNessService.random_rep_point(seed)
        assert KempfNessService.scaling_expansion_check(rp, [0.5, 1.5, 3.0]).max_deviation <= 1e-12


class TestPolystability:

    def test_balanced_point(self):
        verdict = KempfNessService.polystable(rep(PAIR, (1, 1)))
        assert verdict.verdict == POLYSTABLE
        assert verdict.minimizer == pytest.approx((0.0,), abs=1e-12)

    def test_unstable_point(self):
        verdict = KempfNessService.polystable(rep(PAIR, (1, 0)))
        assert verdict.verdict == UNSTABLE
        assert verdict.destabilizer == (-1,)

    def test_fixed_point(self):
        verdict = KempfNessService.polystable(rep(PAIR, (0, 0)))
        assert verdict.verdict == POLYSTABLE
        assert verdict.certificate_source == 'fixed-point'

    def test_semistable_point(self):
        verdict = KempfNessService.polystable(rep([1, 0], (1, 1)))
        assert verdict.verdict == SEMISTABLE
        assert verdict.destabilizer == (-1,)

    def test_zero_point_certificate(self):
        verdict = KempfNessService.polystable(rep([(1, 0), (-1, 1), (0, -1)], (1, 2, 0.5)))
        assert verdict.is_polystable
        zero = TorusRepPoint(k=2, weights=((1, 0), (-1, 1), (0, -1)), point=verdict.zero_point)
        assert np.linalg.norm(KempfNessService.linear_moment_map(zero)) <= 1e-8

    def test_brute_force_prefers_small_unstable_directions(self):
        found = KempfNessService.brute_force_destabilizer(rep([(1, 0), (0, 1)], (1, 1)))
        assert found == (UNSTABLE, (-1, -1))

    def test_random_instances_match_the_oracle(self):
        rows = sweep(range(200))
        mismatches = [row for row in rows if row['verdict'] != row['oracle']]
        assert mismatches == []
        assert {row['verdict'] for row in rows} == {POLYSTABLE, SEMISTABLE, UNSTABLE}

    def test_oracle_on_fixed_point(self):
        assert verdict_oracle(rep(PAIR, (0, 0))) == POLYSTABLE


class TestMinimization:

    def test_closed_form_minimizer(self):
        result = KempfNessService.kempf_ness_minimize(rep(PAIR, (2, 1)))
        assert result.converged
        assert result.v[0] == pytest.approx(-math.log(2) / 2, abs=1e-10)
        moved = KempfNessService.transport(rep(PAIR, (2, 1)), result.v)
        assert [abs(b) for b in moved.point] == pytest.approx([math.sqrt(2)] * 2, abs=1e-10)

    def test_zero_moment_map_needs_no_steps(self):
        result = KempfNessService.kempf_ness_minimize(rep(PAIR, (1, 1)))
        assert result.v == (0.0,)
        assert result.iterations == 0

    def test_unbounded_direction(self):
        result = KempfNessService.kempf_ness_minimize(rep([1], (1,)))
        assert not result.converged
        assert result.direction == (-1.0,)

    def test_tolerance_must_be_positive(self):
        with pytest.raises(ValidationError):
            KempfNessService.kempf_ness_minimize(rep(PAIR, (2, 1)), tol=0.0)

    def test_line_search_without_decrease_raises(self, monkeypatch):
        def rising(rp, v):
            return 1.0 + math.sqrt(float(np.linalg.norm(v)))

        monkeypatch.setattr(KempfNessService, 'kempf_ness_function', staticmethod(rising))
        with pytest.raises(SolverError):
            KempfNessService.kempf_ness_minimize(rep(PAIR, (2, 1)))

    def test_minimizers_differ_only_by_stabilizer_directions(self):
        rp = rep([(1, 0), (-1, 0)], (2, 1))
        first = KempfNessService.kempf_ness_minimize(rp)
        second = KempfNessService.kempf_ness_minimize(rp, start=[0.3, 5.0])
        kernel = np.array(first.kernel)
        difference = np.array(second.v) - np.array(first.v)
        residual = difference - kernel.T @ (kernel @ difference)
        assert np.linalg.norm(residual) <= 1e-8
        assert len(first.kernel) == 1
        assert abs(first.kernel[0][1]) == pytest.approx(1.0)

    def test_polystable_random_instances_reach_zero(self):
        for seed in range(60):
            rp = KempfNessService.random_rep_point(seed)
            result = KempfNessService.kempf_ness_minimize(rp)
            if result.converged:
                moved = KempfNessService.transport(rp, result.v)
                assert np.linalg.norm(KempfNessService.linear_moment_map(moved)) <= 1e-8


class TestKempfNessFunction:

    @pytest.mark.parametrize('seed', range(20))
    def test_hessian_is_positive_semidefinite(self, seed):
        rp = KempfNessService.random_rep_point(seed)
        v = np.random.default_rng(seed).standard_normal(rp.k)
        assert np.min(np.linalg.eigvalsh(KempfNessService.kempf_ness_hessian(rp, v))) >= -1e-10

    @pytest.mark.parametrize('seed', range(10))
    def test_gradient_is_transported_moment_map(self, seed):
        rp = KempfNessService.random_rep_point(seed)
        v = 0.3 * np.random.default_rng(seed).standard_normal(rp.k)
        h = 1e-6
        numeric = [(KempfNessService.kempf_ness_function(rp, v + h * e)
                    - KempfNessService.kempf_ness_function(rp, v - h * e)) / (2 * h) for e in np.eye(rp.k)]
        assert KempfNessService.kempf_ness_gradient(rp, v) == pytest.approx(numeric, abs=1e-6)

    @given(st.lists(st.floats(min_value=0, max_value=2 * math.pi), min_size=3, max_size=3))
    def test_phase_invariance(self, phases):
        rp = rep([(1, 0), (-1, 1), (0, -1)], (1, 2, 0.5))
        rotated = TorusRepPoint(k=2, weights=rp.weights,
                                point=tuple(b * complex(math.cos(a), math.sin(a)) for b, a in zip(rp.point, phases)))
        v = [0.2, -0.7]
        assert KempfNessService.kempf_ness_function(rotated, v) == pytest.approx(
            KempfNessService.kempf_ness_function(rp, v), rel=1e-14)


class TestLemmaBound:

    def test_closed_form_instance(self):
        report = KempfNessService.sze_lemma_bound_check(rep(PAIR, (2, 1)), delta=1.0)
        assert report.lam == pytest.approx(1 / 8, rel=1e-6)
        assert report.v_norm == pytest.approx(math.log(2) / 2, abs=1e-10)
        assert report.applicable
        assert report.holds

    def test_balanced_point_has_zero_minimizer(self):
        report = KempfNessService.sze_lemma_bound_check(rep(PAIR, (1, 1)), delta=1.0)
        assert report.v_norm == 0.0
        assert report.holds

    def test_requires_polystable_point(self):
        with pytest.raises(PreconditionError):
            KempfNessService.sze_lemma_bound_check(rep(PAIR, (1, 0)), delta=1.0)

    def test_delta_must_be_positive(self):
        with pytest.raises(ValidationError):
            KempfNessService.sze_lemma_bound_check(rep(PAIR, (2, 1)), delta=0.0)

    def test_random_polystable_instances(self):
        checked = 0
        seed = 0
        while checked < 50:
            rp = KempfNessService.random_rep_point(seed)
            seed += 1
            if not KempfNessService.polystable(rp, with_certificate=False).is_polystable:
                continue
            report = KempfNessService.sze_lemma_bound_check(rp, delta=1.0, samples=60, seed=seed)
            if report.applicable:
                assert report.holds
            checked += 1


class TestCodec:

    def test_round_trip(self):
        rp = rep([(1, 0), (-1, 1)], (1 + 2j, -0.5))
        assert KempfNessService.from_dict(rp.to_dict()) == rp

    @pytest.mark.parametrize('data', [
        {'k': 1, 'weights': [[1]]},
        {'k': 1, 'weights': [[1]], 'point': [[1.0]]},
        {'k': 2, 'weights': [[1]], 'point': [[1.0, 0.0]]},
        {'k': 1, 'weights': [[1], [2]], 'point': [[1.0, 0.0]]},
    ])
    def test_malformed_input(self, data):
        with pytest.raises(ValidationError):
            KempfNessService.from_dict(data)

    def test_verdict_payload(self):
        payload = KempfNessService.polystable(rep(PAIR, (1, 0))).to_dict()
        assert payload['verdict'] == UNSTABLE
        assert payload['certificate']['destabilizer'] == [-1]
