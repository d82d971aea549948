import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimojam.channel import LinkConfig
from mimojam.jamming import (
    JammingAction,
    Scheme,
    allocate_energy,
    effective_jamming,
    gen_jamming_block,
)
from mimojam.phy import FramePlan

CFG = LinkConfig()
PLAN = FramePlan.for_link(2, 4)


def test_scheme_parse():
    assert Scheme.parse("Pilot") is Scheme.PILOT
    assert Scheme.parse(Scheme.ACK) is Scheme.ACK
    with pytest.raises(ValueError):
        Scheme.parse("tone")


def test_action_validation():
    with pytest.raises(ValueError):
        JammingAction("pilot", 1.0)
    with pytest.raises(ValueError):
        JammingAction("barrage", -1.0)


def test_barrage_sjr():
    alloc = allocate_energy(JammingAction("barrage", 20.0), CFG, PLAN)
    assert alloc.E_j == pytest.approx(20 / 245760)
    sjr = 10 * np.log10(CFG.E_s / (CFG.L * alloc.E_j))
    assert sjr == pytest.approx(37.88, abs=0.01)
    assert alloc.jam_slots == range(4, 4 + 122880)


def test_pilot_unit_energy():
    alloc = allocate_energy(JammingAction("pilot", 1.0, T_p=4), CFG, PLAN)
    assert alloc.E_j == pytest.approx(1 / 8)
    assert alloc.jam_slots == range(0, 4)


def test_ack_unit_energy():
    alloc = allocate_energy(JammingAction("ack", 1.0), CFG, PLAN)
    assert alloc.E_j == pytest.approx(1 / 1024)
    assert alloc.jam_slots.start == 4 + 122880


@pytest.mark.parametrize("E", [0.0, 3.0, 1e6])
def test_none_is_silent(E):
    assert allocate_energy(JammingAction("none", E), CFG, PLAN).E_j == 0.0


def test_pilot_past_data_rejected():
    plan = FramePlan(K=4, D=8, A=4)
    with pytest.raises(ValueError):
        allocate_energy(JammingAction("pilot", 1.0, T_p=13), CFG, plan)


@settings(max_examples=100, deadline=None)
@given(scheme=st.sampled_from(["barrage", "pilot", "ack"]),
       E=st.floats(1e-6, 1e4), T_p=st.integers(1, 516), L=st.integers(1, 4))
def test_energy_conservation(scheme, E, T_p, L):
    cfg = LinkConfig(M=1, N=1, L=L)
    plan = FramePlan(K=16, D=500, A=64)
    alloc = allocate_energy(JammingAction(scheme, E, T_p), cfg, plan)
    assert L * alloc.E_j * len(alloc.jam_slots) == pytest.approx(E, rel=1e-12)


def test_effective_short_burst_averages_over_pilot():
    plan = FramePlan(K=16, D=100, A=10)
    eff = effective_jamming(JammingAction("pilot", 8.0, T_p=4), CFG, plan)
    # E_j = 8/(2*4) = 1 on 4 of 16 slots
    assert eff.E_jp == pytest.approx(0.25)
    assert eff.E_jb == 0.0


def test_effective_long_burst_spills():
    plan = FramePlan(K=4, D=100, A=10)
    eff = effective_jamming(JammingAction("pilot", 16.0, T_p=8), CFG, plan)
    assert eff.E_jp == pytest.approx(1.0)
    assert eff.E_jb == pytest.approx(4 / 100)


def test_effective_peak_cap():
    plan = FramePlan(K=16, D=100, A=10)
    eff = effective_jamming(JammingAction("pilot", 8.0, T_p=4), CFG, plan, peak_energy=0.5)
    assert eff.E_jp == pytest.approx(0.125)


def test_jamming_block_zero():
    assert not np.any(gen_jamming_block(2, 0.0, 5, np.random.default_rng(0)).matrix)


def test_jamming_block_power_and_independence():
    Z = gen_jamming_block(2, 0.5, 100_000, np.random.default_rng(1)).matrix
    p = np.mean(np.abs(Z) ** 2, axis=1)
    assert np.all((p >= 0.495) & (p <= 0.505))
    rho = np.vdot(Z[0, :-1], Z[0, 1:]) / np.vdot(Z[0], Z[0])
    assert abs(rho) < 0.02
    rho01 = np.vdot(Z[0], Z[1]) / np.sqrt(np.vdot(Z[0], Z[0]).real * np.vdot(Z[1], Z[1]).real)
    assert abs(rho01) < 0.02
