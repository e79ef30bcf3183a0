import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from prbslice.oracle import simulate
from prbslice.presets import preset_config, preset_scenario_spec
from prbslice.scenario import (
    DistributionSpec,
    ScenarioError,
    ScenarioSpec,
    ScenarioTrace,
    gen_arrivals,
    gen_scenario,
)

from helpers import two_premium_config


def bernoulli(p, threshold=0.5):
    return DistributionSpec("bernoulli", {"p": p}, threshold)


class TestDistributionSpec:
    def test_threshold_bounds(self):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ScenarioError):
                DistributionSpec("bernoulli", {"p": 0.5}, bad)

    def test_kind_specific_params(self):
        with pytest.raises(ScenarioError):
            DistributionSpec("lognormal", {"mu": 0, "sigma": 0}, 0.5)
        with pytest.raises(ScenarioError):
            DistributionSpec("poisson", {"rate": 0}, 0.5)
        with pytest.raises(ScenarioError):
            DistributionSpec("bernoulli", {"p": 1.5}, 0.5)
        with pytest.raises(ScenarioError):
            DistributionSpec("uniform", {}, 0.5)

    def test_dict_round_trip(self):
        spec = DistributionSpec("poisson", {"rate": 3.0}, 0.2)
        assert DistributionSpec.from_dict(spec.to_dict()) == spec


class TestGenArrivals:
    def test_degenerate_true(self):
        assert gen_arrivals(bernoulli(1.0), seed=7, horizon=5) == [True] * 5

    def test_degenerate_false(self):
        assert gen_arrivals(bernoulli(0.0), seed=7, horizon=5) == [False] * 5

    def test_rejects_zero_horizon(self):
        with pytest.raises(ScenarioError):
            gen_arrivals(bernoulli(0.5), seed=1, horizon=0)

    def test_poisson_rate_matches_exceedance_mass(self):
        # independent oracle: the probability that a draw's pmf clears the
        # threshold is the summed pmf over the qualifying support
        rate, threshold = 3.0, 0.2
        expected = sum(
            stats.poisson.pmf(k, rate)
            for k in range(200)
            if stats.poisson.pmf(k, rate) > threshold
        )
        flags = gen_arrivals(DistributionSpec("poisson", {"rate": rate},
                                              threshold), seed=42, horizon=30)
        assert abs(sum(flags) / 30 - expected) <= 0.15

    def test_lognormal_deterministic(self):
        spec = DistributionSpec("lognormal", {"mu": 0.0, "sigma": 1.0}, 0.42)
        assert (gen_arrivals(spec, 5, 50) == gen_arrivals(spec, 5, 50))
        assert (gen_arrivals(spec, 5, 50) != gen_arrivals(spec, 6, 50))


class TestGenScenario:
    def test_determinism_bit_identical(self):
        config = preset_config("3-3-7")
        spec = preset_scenario_spec("3-3-7")
        a = spec.generate(config, 11)
        b = spec.generate(config, 11)
        assert a == b
        assert a.to_json() == b.to_json()

    def test_zero_departure_rate(self):
        config = preset_config("3-2-4")
        spec = preset_scenario_spec("3-2-4")
        trace = gen_scenario(config, spec.per_service, 0.0, seed=3)
        assert all(not f for row in trace.departures for f in row)

    def test_degenerate_empty_network(self):
        config = two_premium_config()
        per_service = {1: bernoulli(0.0), 2: bernoulli(0.0)}
        scenario = gen_scenario(config, per_service, 0.5, seed=9)
        trace = simulate(config, scenario)
        assert all(sl.usr == 0 for st in trace.states for sl in st.slices)
        # with nobody inside, every departure coin must have been dropped
        assert all(not f for row in scenario.departures for f in row)

    def test_admissible_replay(self):
        config = preset_config("3-2-4")
        spec = preset_scenario_spec("3-2-4")
        scenario = spec.generate(config, 1)
        trace = simulate(config, scenario)   # raises on any breach
        assert all(sl.usr >= 0 for st in trace.states for sl in st.slices)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=10 ** 9))
    def test_admissible_for_any_seed(self, seed):
        config = preset_config("3-2-4", horizon=20)
        spec = preset_scenario_spec("3-2-4")
        scenario = spec.generate(config, seed)
        simulate(config, scenario)

    def test_unit_transitions(self):
        config = preset_config("5-3-10")
        scenario = preset_scenario_spec("5-3-10").generate(config, 2)
        assert len(scenario.arrivals) == config.num_services
        assert len(scenario.departures) == config.num_slices
        assert all(len(r) == config.horizon for r in scenario.arrivals)
        assert all(len(r) == config.horizon for r in scenario.departures)

    def test_missing_service_spec_rejected(self):
        config = preset_config("3-2-4")
        with pytest.raises(ScenarioError, match="no distribution spec"):
            gen_scenario(config, {1: bernoulli(0.5)}, 0.1, seed=1)


class TestSerialization:
    def test_trace_round_trip(self):
        config = preset_config("3-2-4")
        trace = preset_scenario_spec("3-2-4").generate(config, 4)
        assert ScenarioTrace.from_json(trace.to_json()) == trace

    def test_spec_round_trip(self):
        spec = preset_scenario_spec("5-4-13")
        again = ScenarioSpec.from_json(spec.to_json())
        assert again == spec

    def test_dimension_check(self):
        config = preset_config("3-2-4")
        trace = preset_scenario_spec("3-2-4").generate(config, 4)
        other = preset_config("3-3-7")
        with pytest.raises(ScenarioError):
            trace.check_dimensions(other)
