import math

import pytest

import maqkd


def test_preset_listing():
    names = maqkd.preset_names()
    assert len(names) == 25
    assert "ideal" in names
    assert "no-memory-baseline" in names


def test_unknown_preset_raises():
    with pytest.raises(ValueError):
        maqkd.load_preset("no-such-preset")


def test_secret_key_rate_composition():
    cfg = maqkd.load_preset("ideal")
    pt = maqkd.secret_key_rate(cfg, 100.0)
    assert pt.r_per_pulse > 0.0
    assert pt.r_per_second > 0.0
    assert pt.y11 == pytest.approx(pt.p_sbsm * pt.p_mbsm, rel=1e-12)
    assert 0.0 <= pt.e_x <= 0.5
    assert 0.0 <= pt.e_z <= 0.5


def test_config_is_mutable():
    cfg = maqkd.load_preset("ideal")
    cfg.scheme = maqkd.Scheme.NLA
    cfg.nla_reflectivity = 0.2
    cfg.validate()
    pt = maqkd.secret_key_rate(cfg, 100.0)
    assert pt.r_per_pulse > 0.0


def test_plob_bound_values():
    assert maqkd.plob_bound(700.0, 17.3) == pytest.approx(
        3.8598057130751004e-18, rel=1e-12
    )
    assert maqkd.plob_bound(17.3 * math.log(2.0), 17.3) == pytest.approx(1.0)


def test_binary_entropy():
    assert maqkd.binary_entropy(0.5) == 1.0
    assert maqkd.binary_entropy(0.0) == 0.0
    with pytest.raises(ValueError):
        maqkd.binary_entropy(2.0)


def test_no_memory_baseline():
    cfg = maqkd.load_preset("no-memory-baseline")
    pt = maqkd.no_memory_rate(cfg, 200.0)
    assert pt.r_per_second > 0.0
    assert pt.r_per_second == pytest.approx(pt.r_per_pulse * 1e9, rel=1e-12)


def test_crossover_on_analytic_curves():
    km = maqkd.crossover_distance(
        lambda l: math.exp(-l / 100.0), lambda l: 1e-3, 10.0, 2000.0
    )
    assert abs(km - 100.0 * math.log(1000.0)) <= 0.5


def test_sampled_timing_reproducible():
    a = maqkd.sample_timing(0.02, 1e-9, 1.5e-6, 50000, 42)
    b = maqkd.sample_timing(0.02, 1e-9, 1.5e-6, 50000, 42)
    assert a.expected_rounds == b.expected_rounds
    assert a.rng == "mt19937_64"
