import math

import numpy as np
import pytest

from photondiode import _rng
from photondiode.analytic import Mode, dip_curve
from photondiode.analysis import peak_areas
from photondiode.core import (
    GateWindow,
    JitterInterpretation,
    JitterSpec,
    ValidationError,
)
from photondiode.montecarlo import (
    DetectorSim,
    InterferometerSim,
    SourceSim,
    sample_phase_trajectory,
    simulate_hbt,
    simulate_hom,
)
from photondiode.presets import (
    reference_detector,
    reference_emitter,
    reference_interferometer,
    reference_jitter,
    reference_source,
    reference_waveform,
)

PERIOD = 1980.0


def ideal_source(jitter_sigma=0.0, decay=30.0, gamma=0.0, background=0.0):
    return SourceSim(
        emitter=reference_emitter(),
        waveform=reference_waveform(),
        gate=GateWindow(1680.0, 1980.0),
        jitter=JitterSpec(jitter_sigma, JitterInterpretation.STD_DEV),
        background_mean=background,
        packet_decay=decay,
        packet_dephasing=gamma,
    )


def area_sigma(report, n):
    outer = np.mean([report.raw_counts[k] for k in range(-6, 7) if abs(k) >= 2])
    return report.areas[n] * math.sqrt(
        1.0 / max(report.raw_counts[n], 1.0) + 1.0 / (10.0 * outer))


class TestPhaseTrajectory:
    def test_zero_rate_is_flat(self):
        times = np.linspace(0.0, 300.0, 129)
        theta = sample_phase_trajectory(0.0, times, seed=3)
        np.testing.assert_array_equal(theta, np.zeros_like(times))

    def test_matches_internal_batch(self):
        # the public op and the vectorized internal draw share streams
        times = np.linspace(0.0, 300.0, 65)
        gamma, h = 0.02, 300.0 / 64
        z = _rng.normal_stream(9, _rng.TRAJECTORY, np.arange(5, dtype=np.uint64), 64)
        for c in range(5):
            theta = sample_phase_trajectory(gamma, times, seed=9, cycle=c)
            ref = np.concatenate([[0.0], np.cumsum(math.sqrt(2 * gamma * h) * z[c])])
            np.testing.assert_allclose(theta, ref, rtol=1e-12)

    def test_increment_variance(self):
        # ensemble variance at lag tau approaches 2 gamma tau
        gamma, n_traj = 1.0 / 62.34, 20_000
        times = np.linspace(0.0, 300.0, 76)
        h = times[1] - times[0]
        z = _rng.normal_stream(17, _rng.TRAJECTORY, np.arange(n_traj, dtype=np.uint64), 75)
        theta = np.cumsum(math.sqrt(2 * gamma * h) * z, axis=1)
        for lag_idx in (25, 75):
            tau = lag_idx * h
            sample = theta[:, lag_idx - 1]
            var = float(np.var(sample))
            se = math.sqrt(2.0 / (n_traj - 1)) * (2 * gamma * tau)
            assert abs(var - 2 * gamma * tau) < 3.0 * se

    def test_characteristic_function(self):
        gamma, n_traj = 1.0 / 62.34, 20_000
        times = np.linspace(0.0, 300.0, 76)
        h = times[1] - times[0]
        z = _rng.normal_stream(21, _rng.TRAJECTORY, np.arange(n_traj, dtype=np.uint64), 75)
        theta = np.cumsum(math.sqrt(2 * gamma * h) * z, axis=1)
        tau = 50 * h
        est = np.mean(np.exp(1j * theta[:, 49]))
        se = math.sqrt(0.5 / n_traj)
        assert abs(est.real - math.exp(-gamma * tau)) < 3.0 * se
        assert abs(est.imag) < 3.0 * se

    def test_grid_validation(self):
        with pytest.raises(ValidationError):
            sample_phase_trajectory(0.01, np.array([0.0, 1.0, 3.0]), seed=1)
        with pytest.raises(ValidationError):
            sample_phase_trajectory(-0.01, np.linspace(0, 1, 5), seed=1)


class TestSimulateHom:
    def test_perfect_suppression(self):
        # identical packets, no jitter, no dephasing: the central window
        # stays exactly empty
        src = ideal_source()
        det = reference_detector()
        hist = simulate_hom(src, reference_interferometer(), det, 50_000, seed=2)
        rep = peak_areas(hist, PERIOD)
        assert rep.raw_counts[0] == 0

    def test_distinguishable_peak_pattern(self):
        # photon routed half/half through two couplers: central peak 1/2,
        # adjacent 3/4, outer unity (see analysis docs for the counting)
        src = ideal_source(jitter_sigma=10.0)
        det = reference_detector()
        mz = reference_interferometer(Mode.ORTHOGONAL)
        hist = simulate_hom(src, mz, det, 300_000, seed=4)
        rep = peak_areas(hist, PERIOD)
        for n, target in ((0, 0.5), (-1, 0.75), (1, 0.75), (3, 1.0), (-5, 1.0)):
            assert abs(rep.areas[n] - target) < 3.0 * area_sigma(rep, n), f"peak {n}"

    def test_orthogonal_matches_classical_chi2(self):
        # interference-free routing: chi-square over the 13 peaks against
        # the classical expectation, 1% level (chi2_0.99[13] = 27.69)
        src = ideal_source(jitter_sigma=10.0)
        hist = simulate_hom(src, reference_interferometer(Mode.ORTHOGONAL),
                            reference_detector(), 200_000, seed=8)
        rep = peak_areas(hist, PERIOD)
        n_cycles = 200_000
        expected = {n: n_cycles / 4.0 for n in range(-6, 7)}
        expected[0] = n_cycles / 8.0
        expected[1] = expected[-1] = 3.0 * n_cycles / 16.0
        chi2 = sum((rep.raw_counts[n] - expected[n]) ** 2 / expected[n]
                   for n in range(-6, 7))
        assert chi2 < 27.69

    def test_central_area_matches_analytic_reference(self):
        src = reference_source()
        det = reference_detector()
        hist = simulate_hom(src, reference_interferometer(), det, 200_000, seed=6)
        rep = peak_areas(hist, PERIOD)
        dc = dip_curve([0.0], src.emitter, src.gate, src.jitter,
                       packet_decay=src.packet_decay,
                       dephasing_rate=src.packet_dephasing)
        assert abs(rep.areas[0] - dc.points[0][1]) < 3.0 * area_sigma(rep, 0)

    def test_central_area_matches_analytic_with_dephasing(self):
        # dual-route check of the phase-diffusion average: realized Wiener
        # trajectories against the exp(-2 gamma |tau|) kernel
        src = ideal_source(jitter_sigma=5.0, gamma=1.0 / 200.0)
        det = reference_detector()
        hist = simulate_hom(src, reference_interferometer(), det, 150_000, seed=12)
        rep = peak_areas(hist, PERIOD)
        dc = dip_curve([0.0], src.emitter, src.gate,
                       JitterSpec(5.0, JitterInterpretation.STD_DEV),
                       packet_decay=30.0, dephasing_rate=1.0 / 200.0)
        assert abs(rep.areas[0] - dc.points[0][1]) < 3.5 * area_sigma(rep, 0)

    def test_period_mismatch_raises_central_area(self):
        src = reference_source()
        det = reference_detector()
        mz = InterferometerSim(delay=PERIOD - 120.0)
        hist = simulate_hom(src, mz, det, 100_000, seed=5)
        rep0 = peak_areas(simulate_hom(src, reference_interferometer(), det,
                                       100_000, seed=5), PERIOD)
        rep = peak_areas(hist, PERIOD)
        assert rep.areas[0] > rep0.areas[0] + 0.05

    def test_photon_conservation(self):
        # unit efficiency, no background, no darks: every photon detected
        # exactly once
        src = ideal_source(jitter_sigma=10.0)
        det = DetectorSim(efficiency=1.0, dark_rate=0.0, timing_sigma=100.0,
                          bin_width=64.0)
        hist = simulate_hom(src, reference_interferometer(), det, 40_000, seed=3)
        assert hist.meta["n_events_d1"] + hist.meta["n_events_d2"] == 40_000

    def test_efficiency_thins(self):
        src = ideal_source(jitter_sigma=10.0)
        det = DetectorSim(efficiency=0.4, dark_rate=0.0, timing_sigma=100.0,
                          bin_width=64.0)
        hist = simulate_hom(src, reference_interferometer(), det, 40_000, seed=3)
        total = hist.meta["n_events_d1"] + hist.meta["n_events_d2"]
        assert abs(total - 16_000) < 4.0 * math.sqrt(40_000 * 0.4 * 0.6)

    def test_emission_probability(self):
        src = SourceSim(
            emitter=reference_emitter(), waveform=reference_waveform(),
            gate=GateWindow(1680.0, 1980.0),
            jitter=JitterSpec(10.0, JitterInterpretation.STD_DEV),
            emission_probability=0.6, packet_decay=30.0, packet_dephasing=0.0)
        hist = simulate_hom(src, reference_interferometer(), reference_detector(),
                            50_000, seed=9)
        total = hist.meta["n_events_d1"] + hist.meta["n_events_d2"]
        assert abs(total - 30_000) < 4.0 * math.sqrt(50_000 * 0.6 * 0.4)

    def test_reproducible_and_seed_sensitive(self):
        src = reference_source(background_mean=0.02)
        det = reference_detector(dark_rate=1e-6)
        mz = reference_interferometer()
        a = simulate_hom(src, mz, det, 30_000, seed=7)
        b = simulate_hom(src, mz, det, 30_000, seed=7)
        c = simulate_hom(src, mz, det, 30_000, seed=8)
        np.testing.assert_array_equal(a.counts, b.counts)
        assert not np.array_equal(a.counts, c.counts)

    @pytest.mark.parametrize("workers", [2, 4, 8])
    def test_worker_count_invariance(self, workers):
        src = reference_source(background_mean=0.02)
        det = reference_detector(dark_rate=1e-6)
        mz = reference_interferometer()
        base = simulate_hom(src, mz, det, 30_000, seed=7, workers=1)
        split = simulate_hom(src, mz, det, 30_000, seed=7, workers=workers)
        np.testing.assert_array_equal(base.counts, split.counts)

    def test_span_validation(self):
        det = DetectorSim(span=5.0 * PERIOD)
        with pytest.raises(ValidationError):
            simulate_hom(reference_source(), reference_interferometer(), det,
                         1000, seed=1)

    def test_cycles_validation(self):
        with pytest.raises(ValidationError):
            simulate_hom(reference_source(), reference_interferometer(),
                         reference_detector(), 0, seed=1)


class TestSimulateHbt:
    def test_single_photons_never_coincide(self):
        src = ideal_source(jitter_sigma=10.0)
        hist = simulate_hbt(src, reference_detector(), 100_000, seed=5)
        rep = peak_areas(hist, PERIOD)
        assert rep.raw_counts[0] == 0

    def test_background_sets_g2(self):
        # mean b solves 2(b + b^2/2)/(1+b)^2 = g2_target
        g2_target = 0.03
        b = (-1.94 + math.sqrt(1.94**2 + 4 * 0.97 * 0.03)) / (2 * 0.97)
        src = ideal_source(jitter_sigma=10.0, background=b)
        hist = simulate_hbt(src, reference_detector(), 400_000, seed=11)
        rep = peak_areas(hist, PERIOD)
        sigma = rep.areas[0] / math.sqrt(max(rep.raw_counts[0], 1))
        assert abs(rep.areas[0] - g2_target) < max(3.0 * sigma, 0.005)

    def test_side_peaks_flat(self):
        src = ideal_source(jitter_sigma=10.0, background=0.0315)
        hist = simulate_hbt(src, reference_detector(), 300_000, seed=13)
        rep = peak_areas(hist, PERIOD)
        for n in range(-6, 7):
            if n == 0:
                continue
            assert abs(rep.areas[n] - 1.0) < 3.5 * area_sigma(rep, n), f"peak {n}"

    def test_reproducibility_with_workers(self):
        src = ideal_source(jitter_sigma=10.0, background=0.05)
        det = reference_detector(dark_rate=1e-6)
        a = simulate_hbt(src, det, 30_000, seed=2, workers=1)
        b = simulate_hbt(src, det, 30_000, seed=2, workers=5)
        np.testing.assert_array_equal(a.counts, b.counts)


class TestHistogramContainer:
    def test_geometry(self):
        det = DetectorSim(bin_width=64.0)
        origin, nbins = det.histogram_geometry(PERIOD)
        assert nbins % 2 == 1
        assert origin == -0.5 * nbins * 64.0
        assert nbins * 64.0 >= 13.0 * PERIOD

    def test_csv_and_sidecar(self, tmp_path):
        src = ideal_source(jitter_sigma=10.0)
        hist = simulate_hbt(src, reference_detector(), 5_000, seed=5)
        path = tmp_path / "hist.csv"
        hist.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "bin_start_ps,counts"
        assert len(lines) == 1 + len(hist.counts)
        sidecar = tmp_path / "hist.meta.json"
        assert sidecar.exists()
        import json
        meta = json.loads(sidecar.read_text())
        assert meta["seed"] == 5 and meta["cycles"] == 5_000
        assert "config_hash" in meta

    def test_validation(self):
        with pytest.raises(ValidationError):
            DetectorSim(efficiency=1.2)
        with pytest.raises(ValidationError):
            DetectorSim(bin_width=0.0)
        with pytest.raises(ValidationError):
            InterferometerSim(delay=-1.0)
        with pytest.raises(ValidationError):
            InterferometerSim(delay=100.0, split_a=1.0)
        with pytest.raises(ValidationError):
            SourceSim(emitter=reference_emitter(), waveform=reference_waveform(),
                      gate=GateWindow(1680.0, 1980.0), jitter=reference_jitter(),
                      emission_probability=1.5)
