import json

import numpy as np
import pytest

from cphase import core, gate
from cphase.exceptions import DegeneratePostSelectionError, InvalidInputError
from cphase.gate import (
    AttenuatorParams,
    GateConfig,
    ModeSplitting,
    PDBSParams,
    apply_gate,
    apply_gate_normalized,
    build_operators,
    check_alignment,
    hom_scan,
    ideal_cphase,
)


def _transparent():
    mode = ModeSplitting(1.0, 1.0, 0.0, 0.0)
    return GateConfig(PDBSParams(mode, mode, lossless=True), AttenuatorParams(1, 1, 1, 1))


def test_ideal_cphase_examples():
    np.testing.assert_allclose(ideal_cphase(core.product_state("HH")), core.product_state("HH"))
    np.testing.assert_allclose(ideal_cphase(core.product_state("VV")), -core.product_state("VV"))
    target = (core.product_state("LH") + core.product_state("RV")) / np.sqrt(2)
    out = ideal_cphase(core.product_state("L+"))
    assert abs(np.vdot(target, out)) == pytest.approx(1.0, abs=1e-12)


def test_build_operators_ideal(ideal):
    ops = build_operators(ideal)
    np.testing.assert_allclose(ops.total, np.diag([1, 1, 1, -1]) / 3, atol=1e-15)


def test_m_tt_m_rr_structure(rng):
    a = ModeSplitting(*rng.uniform(0, 1, 4))
    b = ModeSplitting(*rng.uniform(0, 1, 4))
    cfg = GateConfig(PDBSParams(a, b), AttenuatorParams(*rng.uniform(0, 1, 4)))
    ops = build_operators(cfg)
    assert np.count_nonzero(ops.m_tt - np.diag(np.diag(ops.m_tt))) == 0
    mask = np.zeros((4, 4), bool)
    mask[[0, 1, 2, 3], [0, 2, 1, 3]] = True
    assert np.all(ops.m_rr[~mask] == 0)
    # amplitude of |HV> collects c_VH via reflection of both photons
    att = cfg.att
    assert ops.m_rr[1, 2] == pytest.approx(-a.r_v * b.r_h * att.a_h * att.b_v)


def test_m_rr_single_element_without_h_reflection(rng):
    a = ModeSplitting(rng.uniform(), rng.uniform(), 0.0, rng.uniform())
    b = ModeSplitting(rng.uniform(), rng.uniform(), 0.0, rng.uniform())
    cfg = GateConfig(PDBSParams(a, b), AttenuatorParams(*rng.uniform(0.1, 1, 4)))
    m_rr = build_operators(cfg).m_rr
    assert np.count_nonzero(m_rr) == 1 and m_rr[3, 3] != 0


def test_transparent_optics_is_identity():
    np.testing.assert_allclose(build_operators(_transparent()).total, np.eye(4))


def test_check_alignment(ideal):
    rep = check_alignment(ideal)
    assert rep.all_ok
    assert rep.ratio_residual == pytest.approx(0.0, abs=1e-12)

    measured = gate.symmetric_config(2.018)
    rep = check_alignment(measured, tol=0.01)
    assert not rep.ratio_ok
    assert rep.ratio_residual == pytest.approx(0.018, abs=1e-12)
    assert rep.reflection_h_ok and rep.attenuation_ok


def test_check_alignment_attenuation_condition():
    s3 = np.sqrt(1 / 3)
    mode = ModeSplitting(1.0, s3, 0.0, np.sqrt(2 / 3))
    cfg = GateConfig(PDBSParams(mode, mode), AttenuatorParams(s3, 1.0, s3, 1.0))
    assert check_alignment(cfg, tol=1e-12).attenuation_ok


def test_check_alignment_zero_transmission():
    mode = ModeSplitting(1.0, 0.0, 0.0, 1.0)
    rep = check_alignment(GateConfig(PDBSParams(mode, mode), AttenuatorParams(1, 1, 1, 1)))
    assert not rep.ratio_ok and np.isinf(rep.ratio_residual)


def test_config_validation():
    with pytest.raises(InvalidInputError):
        ModeSplitting(1.2, 0, 0, 0)
    with pytest.raises(InvalidInputError):
        PDBSParams(ModeSplitting(0.5, 0.5, 0, 0), ModeSplitting(0.5, 0.5, 0, 0), lossless=True)
    with pytest.raises(InvalidInputError):
        gate.ideal_config(quality=1.5)


def test_success_probabilities(ideal):
    hh = core.density(core.product_state("HH"))
    vv = core.density(core.product_state("VV"))
    out, p = apply_gate(hh, ideal)
    assert p == pytest.approx(1 / 9, abs=1e-15)
    np.testing.assert_allclose(out, hh / 9, atol=1e-15)
    assert apply_gate(vv, ideal)[1] == pytest.approx(1 / 9, abs=1e-15)
    assert apply_gate(vv, ideal.with_quality(0.0))[1] == pytest.approx(5 / 9, abs=1e-15)


def test_normalized_examples(ideal):
    target = (core.product_state("LH") + core.product_state("RV")) / np.sqrt(2)
    out = apply_gate_normalized(core.product_state("L+"), ideal)
    np.testing.assert_allclose(out, core.density(target), atol=1e-14)

    partial = ideal.with_quality(0.91)
    np.testing.assert_allclose(apply_gate_normalized(core.product_state("VV"), partial),
                               np.diag([0, 0, 0, 1]), atol=1e-15)

    # |++>: coherent weight Q/9, incoherent (1-Q)*2/9 of which half overlaps the target
    q = 0.91
    out = apply_gate_normalized(core.product_state("++"), partial)
    f = core.fidelity_pure(out, ideal_cphase(core.product_state("++")))
    assert f == pytest.approx((1 + q) / (4 - 2 * q), abs=1e-12)
    assert f < 1


def test_degenerate_post_selection():
    mode = ModeSplitting(0, 0, 0, 0)
    cfg = GateConfig(PDBSParams(mode, mode), AttenuatorParams(0, 0, 0, 0))
    with pytest.raises(DegeneratePostSelectionError):
        apply_gate_normalized(core.product_state("HH"), cfg)


def test_ideal_equals_cphase_on_random_inputs(ideal, rng):
    for _ in range(200):
        psi = core.random_pure_state(rng)
        out, p = apply_gate(psi, ideal)
        assert p == pytest.approx(1 / 9, abs=1e-14)
        assert core.fidelity_pure(out / p, ideal_cphase(psi)) == pytest.approx(1.0, abs=1e-12)


def test_vv_probability_linear_in_quality(ideal):
    vv = core.product_state("VV")
    for q in np.linspace(0, 1, 11):
        assert apply_gate(vv, ideal.with_quality(q))[1] == pytest.approx(q / 9 + (1 - q) * 5 / 9, abs=1e-14)


def test_channel_completely_positive(ideal, rng):
    for q in np.linspace(0, 1, 6):
        cfg = ideal.with_quality(q)
        for _ in range(20):
            out, _ = apply_gate(core.random_density_matrix(rng), cfg)
            assert np.linalg.eigvalsh(out)[0] >= -1e-12
        # Choi matrix of the map is positive
        choi = np.zeros((16, 16), complex)
        for i in range(4):
            for j in range(4):
                eij = np.zeros((4, 4))
                eij[i, j] = 1
                choi += np.kron(eij, gate.channel(eij, build_operators(cfg), q))
        assert np.linalg.eigvalsh(choi)[0] >= -1e-12


def test_kraus_form_matches_channel(ideal, rng):
    cfg = ideal.with_quality(0.7)
    ops = build_operators(cfg)
    rho = core.random_density_matrix(rng)
    via_kraus = sum(k @ rho @ k.conj().T for k in gate.kraus_form(ops, cfg.quality))
    np.testing.assert_allclose(via_kraus, gate.channel(rho, ops, cfg.quality), atol=1e-15)


def test_additional_vv_noise_bounded(ideal, rng):
    partial = ideal.with_quality(0.91)
    worst = 0.0
    for _ in range(500):
        psi = core.random_pure_state(rng)
        excess = apply_gate_normalized(psi, partial)[3, 3].real - apply_gate_normalized(psi, ideal)[3, 3].real
        worst = max(worst, excess)
    assert 0 < worst <= 0.09


def test_hom_endpoints(ideal):
    vv = core.product_state("VV")
    c0, c_inf = hom_scan(ideal, vv, [0.0, np.inf])
    assert c0 == pytest.approx(1 / 9, abs=1e-15)
    assert c_inf == pytest.approx(5 / 9, abs=1e-15)
    assert gate.visibility(c0, c_inf) == pytest.approx(0.8, abs=1e-12)
    assert gate.hom_visibility(ideal.with_quality(0.91), vv) == pytest.approx(0.8 * 0.91, abs=1e-12)


def test_hom_flat_for_hh(ideal):
    scan = hom_scan(ideal.with_quality(0.6), core.product_state("HH"), np.linspace(-500, 500, 21))
    np.testing.assert_allclose(scan, 1 / 9, atol=1e-15)


def test_hom_symmetric_and_monotone(ideal):
    d = np.linspace(0, 600, 61)
    vv = core.product_state("VV")
    right = hom_scan(ideal, vv, d)
    left = hom_scan(ideal, vv, -d)
    np.testing.assert_allclose(right, left, atol=1e-15)
    assert np.all(np.diff(right) >= 0)


def test_hom_width_is_coherence_length(ideal):
    vv = core.product_state("VV")
    c0, c_half, c_inf = hom_scan(ideal, vv, [0.0, ideal.coherence_length / 2, np.inf])
    assert (c_inf - c_half) / (c_inf - c0) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("c0, c_inf, expected", [(1 / 9, 5 / 9, 0.8), (0.3, 0.3, 0.0)])
def test_visibility(c0, c_inf, expected):
    assert gate.visibility(c0, c_inf) == pytest.approx(expected, abs=1e-12)


def test_visibility_from_scan(ideal):
    c0, c_inf = hom_scan(ideal.with_quality(0.91), core.product_state("VV"), [0, np.inf])
    assert gate.visibility(c0, c_inf) == pytest.approx(0.728, abs=1e-12)


def test_visibility_errors():
    with pytest.raises(InvalidInputError):
        gate.visibility(0.1, 0.0)
    with pytest.raises(InvalidInputError):
        gate.overlap_quality(0.5, 0.0)


@pytest.mark.parametrize("v, vth, q", [(0.728, 0.8, 0.91), (0.8, 0.8, 1.0), (0.4, 0.8, 0.5)])
def test_overlap_quality(v, vth, q):
    assert gate.overlap_quality(v, vth) == pytest.approx(q, abs=1e-12)


def test_presets_round_trip(tmp_path):
    for name in gate.PRESETS:
        cfg = gate.load_config(name)
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert gate.load_config(path) == cfg
    exp = gate.load_config("paper-experimental")
    assert exp.quality == 0.91
    assert check_alignment(exp).ratio == pytest.approx(2.018, abs=1e-12)
    assert gate.load_config("ideal") == gate.ideal_config()


def test_bad_schema(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"schema": "other"}')
    with pytest.raises(InvalidInputError):
        gate.load_config(p)
