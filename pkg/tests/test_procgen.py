import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volterraboot import procgen, rng
from volterraboot.procgen import (
    P1,
    P2,
    P3,
    P4,
    Innovation,
    NonStationaryError,
    ProcessKind,
    ProcessSpec,
    SimulationOverflowError,
    TimeSeries,
    simulate,
    true_rho1,
)
from volterraboot.stats import autocorrelation


def test_benchmark_parameters():
    assert P1.kind is ProcessKind.AR1 and P1.parameters == (0.75,)
    assert P1.innovation is Innovation.GAUSSIAN_STD
    assert P2.kind is ProcessKind.GARCH11 and P2.parameters == (1.0, 0.2, 0.65)
    assert P2.innovation is Innovation.GAUSSIAN_STD
    assert P3.kind is ProcessKind.BILINEAR and P3.parameters == (0.6, 0.75)
    assert P3.innovation is Innovation.UNIFORM_SQRT3
    assert P4.kind is ProcessKind.EXPAR and P4.parameters == (0.45, 0.48, 0.96)
    assert P4.innovation is Innovation.UNIFORM_SQRT3


@pytest.mark.parametrize("spec", [P1, P2, P3, P4])
def test_zero_innovations_give_zero_path(spec):
    x = simulate(spec, 50, burn_in=10, innovation_override=np.zeros(60))
    assert np.all(x.values == 0.0)


@pytest.mark.parametrize("spec", [P1, P2, P3, P4])
def test_determinism(spec):
    a = simulate(spec, 100, seed=42)
    b = simulate(spec, 100, seed=42)
    assert a.values.tobytes() == b.values.tobytes()
    assert len(a) == 100
    assert simulate(spec, 100, seed=43) != a


def test_recursions_by_hand():
    eps = np.array([1.0, -0.5, 2.0, 0.25])
    x = simulate(P1, 4, burn_in=0, innovation_override=eps).values
    assert np.allclose(x, [1.0, 0.25, 2.1875, 1.890625])

    x = simulate(P3, 3, burn_in=0, innovation_override=eps).values
    x1 = 1.0
    x2 = 0.6 * x1 - 0.5 + 0.75 * x1 * 1.0
    x3 = 0.6 * x2 + 2.0 + 0.75 * x2 * -0.5
    assert np.allclose(x, [x1, x2, x3])

    x = simulate(P4, 2, burn_in=0, innovation_override=eps).values
    assert np.allclose(x, [1.0, (0.45 + 0.48 * math.exp(-0.96)) - 0.5])

    x = simulate(P2, 3, burn_in=0, innovation_override=eps).values
    s0 = 1.0 / (1 - 0.85)
    s1 = 1 + 0.2 * s0
    s2 = 1 + 0.2 * s1 + 0.65 * 1.0
    s3 = 1 + 0.2 * s2 + 0.65 * 0.25
    assert np.allclose(x, [math.sqrt(s1), -0.5 * math.sqrt(s2), 2 * math.sqrt(s3)])


def test_linear_ma():
    spec = ProcessSpec(ProcessKind.LINEAR_MA, (1.0, 0.5))
    x = simulate(spec, 3, burn_in=0, innovation_override=[1.0, 2.0, 3.0, 4.0]).values
    assert np.allclose(x, [2.5, 4.0, 5.5])


def test_override_too_short():
    with pytest.raises(ValueError, match="at least"):
        simulate(P1, 10, burn_in=5, innovation_override=np.zeros(14))


@pytest.mark.parametrize(
    "kind,params",
    [
        (ProcessKind.AR1, (1.0,)),
        (ProcessKind.AR1, (-1.2,)),
        (ProcessKind.GARCH11, (1.0, 0.5, 0.5)),
        (ProcessKind.GARCH11, (0.0, 0.2, 0.65)),
        (ProcessKind.LINEAR_MA, (1.0, float("nan"))),
    ],
)
def test_nonstationary_rejected(kind, params):
    with pytest.raises(NonStationaryError):
        ProcessSpec(kind, params)


def test_overflow_names_index():
    spec = ProcessSpec(ProcessKind.BILINEAR, (0.6, 0.75), Innovation.UNIFORM_SQRT3)
    eps = np.full(2000, 1e3)  # drives the bilinear term to overflow
    with pytest.raises(SimulationOverflowError) as info:
        simulate(spec, 1000, burn_in=0, innovation_override=eps)
    assert 0 <= info.value.index < 1000
    assert str(info.value.index) in str(info.value)


def test_time_series_rejects_nonfinite():
    with pytest.raises(ValueError, match="index 1"):
        TimeSeries([0.0, float("inf")])
    x = TimeSeries([1.0, 2.0])
    with pytest.raises(ValueError):
        x.values[0] = 3.0


def test_csv_round_trip(tmp_path, gen):
    x = TimeSeries(gen.standard_normal(50) * 1e-3)
    path = tmp_path / "x.csv"
    x.to_csv(path)
    assert path.read_text().splitlines()[0] == "x"
    assert procgen.read_csv(path).values.tobytes() == x.values.tobytes()


def test_csv_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x\n1.0\nabc\n")
    with pytest.raises(ValueError, match=":3:"):
        procgen.read_csv(path)


def test_uniform_innovation_variance():
    e = procgen.draw_innovations(Innovation.UNIFORM_SQRT3, 100_000, rng.generator(5))
    assert np.all(np.abs(e) < math.sqrt(3))
    assert abs(e.var() - 1.0) < 0.02


def test_garch_mean_near_zero():
    x = simulate(P2, 100_000, seed=9)
    assert abs(x.values.mean()) < 0.05


def test_ar1_rho_monte_carlo():
    # analytic rho(1) = phi = 0.75
    rhos = [autocorrelation(simulate(P1, 2000, seed=rng.derive_seed(1, r)), 1) for r in range(200)]
    assert abs(np.mean(rhos) - 0.75) < 0.02


def test_burn_in_reaches_stationarity():
    seeds = [rng.derive_seed(77, r) for r in range(10_000)]
    a = procgen.simulate_batch(P1, 1, seeds, burn_in=100)[0]
    b = procgen.simulate_batch(P1, 1, seeds, burn_in=500)[0]
    assert abs(a.mean() - b.mean()) < 0.02


def test_batch_matches_single():
    seeds = [3, 4, 5]
    batch = procgen.simulate_batch(P4, 30, seeds)
    for j, s in enumerate(seeds):
        assert np.array_equal(batch[:, j], simulate(P4, 30, seed=s).values)


def test_true_rho1_single_rep():
    r = true_rho1(P3, reps=1, n=100, seed=11)
    x = simulate(P3, 100, seed=rng.derive_seed(11, 0))
    assert r == pytest.approx(autocorrelation(x, 1), abs=1e-14)


def test_true_rho1_ar1_long():
    assert abs(true_rho1(P1, reps=2000, n=2000, seed=3) - 0.75) < 0.01


def test_true_rho1_garch_uncorrelated():
    assert abs(true_rho1(P2, reps=20_000, n=100, seed=3)) < 0.02


@settings(max_examples=25, deadline=None)
@given(
    phi=st.floats(-0.95, 0.95),
    n=st.integers(1, 40),
    burn=st.integers(0, 20),
    seed=st.integers(0, 2**63),
)
def test_ar1_length_and_determinism(phi, n, burn, seed):
    spec = ProcessSpec(ProcessKind.AR1, (phi,))
    a = simulate(spec, n, burn, seed)
    assert len(a) == n
    assert a == simulate(spec, n, burn, seed)


def test_white_noise_process_is_innovations():
    from volterraboot.procgen import WHITE_NOISE, draw_innovations, get_process

    assert get_process("iid") is WHITE_NOISE
    x = simulate(WHITE_NOISE, 50, burn_in=10, seed=3)
    eps = draw_innovations(WHITE_NOISE.innovation, 60, rng.generator(3))
    assert np.allclose(x.values, eps[10:])
