import numpy as np
import pytest

from cphase import fit, gate
from cphase.exceptions import ConvergenceError, InvalidInputError
from cphase.fit import ModelSpec, chi_from_model, chi_objective, fit_quality
from cphase.qpt import ideal_chi, reconstruct_chi, simulate_process_data


def test_objective_zero_at_truth():
    spec = ModelSpec()
    for q in np.linspace(0, 1, 11):
        chi = chi_from_model(spec, {"quality": q})
        assert chi_objective(chi, chi) == 0.0
        assert chi_objective(chi_from_model(spec, {"quality": min(q + 0.1, 1.0) if q < 1 else 0.9}), chi) > 0


def test_chi_affine_and_monotone_in_quality():
    spec = ModelSpec()
    qs = np.linspace(0, 1, 11)
    chis = [chi_from_model(spec, {"quality": q}) for q in qs]
    ii_zz = np.array([c[0, 15].real for c in chis])
    assert np.all(np.diff(ii_zz) < 0)
    assert ii_zz[0] == pytest.approx(1 / 9) and ii_zz[-1] == pytest.approx(-1 / 9)
    for q, c in zip(qs, chis):
        np.testing.assert_allclose(c, (1 - q) * chis[0] + q * chis[-1], atol=1e-12)


@pytest.mark.parametrize("q", [0.0, 0.3, 0.904, 1.0])
def test_noiseless_recovery(q):
    chi = chi_from_model(ModelSpec(), {"quality": q})
    res = fit_quality(chi)
    assert res.quality == pytest.approx(q, abs=1e-6)
    assert res.residual < 1e-12
    assert res.fidelity_mean == pytest.approx(1.0, abs=1e-9)


def test_fit_of_ideal_chi_hits_upper_bound():
    res = fit_quality(ideal_chi())
    assert res.quality == 1.0
    assert res.residual < 1e-20


def test_depolarization_model_reduces_to_quality():
    chi_q = chi_from_model(ModelSpec(), {"quality": 0.8})
    chi_d = chi_from_model(ModelSpec("depolarization"), {"quality": 0.8, "depolarization": 0.0})
    np.testing.assert_allclose(chi_q, chi_d, atol=1e-15)
    res = fit_quality(chi_q, ModelSpec("depolarization"))
    assert res.params["depolarization"] < 1e-4
    assert res.quality == pytest.approx(0.8, abs=1e-4)


def test_depolarization_recovered():
    spec = ModelSpec("depolarization")
    chi = chi_from_model(spec, {"quality": 0.9, "depolarization": 0.05})
    res = fit_quality(chi, spec)
    assert res.params["depolarization"] == pytest.approx(0.05, abs=1e-3)
    assert res.quality == pytest.approx(0.9, abs=1e-3)


def test_free_ratio_variant():
    spec_true = ModelSpec(skeleton=gate.symmetric_config(2.018))
    chi = chi_from_model(spec_true, {"quality": 0.9})
    res = fit_quality(chi, ModelSpec(free_ratio=True))
    assert res.params["ratio"] == pytest.approx(2.018, abs=1e-2)
    assert res.quality == pytest.approx(0.9, abs=1e-2)


def test_rejects_non_hermitian_and_bad_variant():
    chi = ideal_chi().copy()
    chi[0, 1] = 0.3
    with pytest.raises(InvalidInputError):
        fit_quality(chi)
    with pytest.raises(InvalidInputError):
        ModelSpec("whatever")


def test_iteration_cap_raises_with_best_estimate():
    chi = chi_from_model(ModelSpec(), {"quality": 0.6})
    with pytest.raises(ConvergenceError) as info:
        fit_quality(chi, maxiter=2)
    assert info.value.best is not None
    assert 0 <= info.value.best.quality <= 1


def test_model_vs_data_fidelity_high():
    measured = fit.model_process_data(ModelSpec(), {"quality": 0.91})
    _, mean, std = fit.model_output_fidelities(ModelSpec(), {"quality": 0.904}, measured)
    assert mean > 0.999 and std < 1e-3


def test_noisy_fit_near_truth(experimental):
    data = simulate_process_data(experimental, pairs=4000, seed=0)
    res = fit_quality(reconstruct_chi(data), ModelSpec(skeleton=experimental), measured=data)
    assert abs(res.quality - 0.91) < 0.03
    assert res.fidelity_mean > 0.98
    d = res.to_dict()
    assert d["variant"] == "quality" and d["params"]["quality"] == res.quality
