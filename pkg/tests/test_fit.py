import json
import math

import numpy as np
import pytest

from photondiode.core import EmitterParams, GateWindow, ValidationError
from photondiode.fit import DipModel, fit_dip


@pytest.fixture(scope="module")
def emitter():
    return EmitterParams(800.0, 1.0 / 62.34, 1.31495, 0.2 / 0.61, 1.45)


@pytest.fixture(scope="module")
def gate():
    return GateWindow(1680.0, 1980.0)


@pytest.fixture(scope="module")
def model(emitter, gate):
    return DipModel(emitter, gate)


DELTAS = np.linspace(-150.0, 150.0, 15)


class TestRoundTrips:
    def test_noiseless_recovery(self, model, emitter, gate):
        truth = model.areas(DELTAS, 60.0, 31.0)
        res = fit_dip(list(zip(DELTAS, truth)), (40.0, 20.0), emitter, gate)
        assert res.converged
        assert res.tau_c == pytest.approx(60.0, rel=1e-3)
        assert res.sigma_jitter == pytest.approx(31.0, rel=1e-3)

    def test_one_percent_noise_within_five_percent(self, model, emitter, gate):
        truth = model.areas(DELTAS, 60.0, 31.0)
        rng = np.random.default_rng(3)
        noisy = truth * (1.0 + 0.01 * rng.standard_normal(len(truth)))
        res = fit_dip(list(zip(DELTAS, noisy)), (40.0, 20.0), emitter, gate)
        assert res.converged
        assert res.tau_c == pytest.approx(60.0, rel=0.05)
        assert res.sigma_jitter == pytest.approx(31.0, rel=0.05)

    def test_reference_curve_recovers_device_numbers(self, model, emitter, gate):
        # a dip generated at the device operating point reads back the
        # 60 ps coherence, 31 ps jitter, and a raw visibility near 0.6
        truth = model.areas(DELTAS, 60.0, 31.0)
        rng = np.random.default_rng(12)
        noisy = truth * (1.0 + 0.02 * rng.standard_normal(len(truth)))
        res = fit_dip(list(zip(DELTAS, noisy)), (50.0, 20.0), emitter, gate)
        assert res.tau_c == pytest.approx(60.0, rel=0.1)
        assert res.sigma_jitter == pytest.approx(31.0, rel=0.1)
        assert 0.55 <= res.visibility_at_zero <= 0.7

    def test_flat_data_degenerate(self, model, emitter, gate):
        res = fit_dip([(d, 0.5) for d in DELTAS], (60.0, 31.0), emitter, gate)
        assert res.visibility_at_zero == pytest.approx(0.0, abs=1e-6)
        assert res.degenerate

    def test_weights_accepted(self, model, emitter, gate):
        truth = model.areas(DELTAS, 60.0, 31.0)
        rows = [(d, a, 1.0 / max(a, 0.05)) for d, a in zip(DELTAS, truth)]
        res = fit_dip(rows, (45.0, 25.0), emitter, gate)
        assert res.converged
        assert res.tau_c == pytest.approx(60.0, rel=1e-3)


class TestInvariants:
    def test_reordering_invariance(self, model, emitter, gate):
        truth = model.areas(DELTAS, 60.0, 31.0)
        rng = np.random.default_rng(5)
        noisy = truth * (1.0 + 0.01 * rng.standard_normal(len(truth)))
        rows = list(zip(DELTAS, noisy))
        res_a = fit_dip(rows, (40.0, 20.0), emitter, gate)
        perm = rng.permutation(len(rows))
        res_b = fit_dip([rows[i] for i in perm], (40.0, 20.0), emitter, gate)
        assert res_a.tau_c == pytest.approx(res_b.tau_c, rel=1e-6)
        assert res_a.sigma_jitter == pytest.approx(res_b.sigma_jitter, rel=1e-6)

    def test_jacobian_against_central_differences(self, model, emitter, gate):
        # forward differences used inside the optimizer vs an independent
        # central-difference recomputation at the optimum
        truth = model.areas(DELTAS, 60.0, 31.0)
        res = fit_dip(list(zip(DELTAS, truth)), (40.0, 20.0), emitter, gate)
        p0 = np.array([math.log(res.tau_c), math.log(res.sigma_jitter)])
        h_fwd, h_cen = 1e-5, 1e-4

        def areas_at(p):
            return model.areas(DELTAS, math.exp(p[0]), math.exp(p[1]))

        base = areas_at(p0)
        for k in range(2):
            fwd = p0.copy()
            fwd[k] += h_fwd
            col_f = (areas_at(fwd) - base) / h_fwd
            plus, minus = p0.copy(), p0.copy()
            plus[k] += h_cen
            minus[k] -= h_cen
            col_c = (areas_at(plus) - areas_at(minus)) / (2.0 * h_cen)
            scale = np.max(np.abs(col_c))
            np.testing.assert_allclose(col_f, col_c, atol=1e-4 * scale)


class TestValidationAndOutput:
    def test_too_few_points(self, emitter, gate):
        with pytest.raises(ValidationError):
            fit_dip([(0.0, 0.2), (10.0, 0.21), (20.0, 0.25)], (60.0, 31.0),
                    emitter, gate)

    def test_nonpositive_initial(self, emitter, gate):
        rows = [(d, 0.3) for d in DELTAS]
        with pytest.raises(ValidationError):
            fit_dip(rows, (-1.0, 31.0), emitter, gate)

    def test_json_output(self, tmp_path, model, emitter, gate):
        truth = model.areas(DELTAS, 60.0, 31.0)
        res = fit_dip(list(zip(DELTAS, truth)), (40.0, 20.0), emitter, gate)
        path = tmp_path / "fit.json"
        res.to_json(path)
        doc = json.loads(path.read_text())
        assert doc["converged"] is True
        assert doc["tau_c_ps"] == pytest.approx(60.0, rel=1e-3)
        assert "sigma_jitter_ps" in doc and "visibility_at_zero" in doc

    def test_summary_text(self, model, emitter, gate):
        truth = model.areas(DELTAS, 60.0, 31.0)
        res = fit_dip(list(zip(DELTAS, truth)), (40.0, 20.0), emitter, gate)
        text = res.summary()
        assert "coherence time" in text and "jitter width" in text
