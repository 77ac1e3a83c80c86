"""Ensemble sampling, dip detection and classification."""

import numpy as np
import pytest

from cqed.montecarlo import (
    ClassifyContext,
    MCConfig,
    detect_dips,
    run_grid,
    run_mc,
    run_single,
    sample_ensemble,
)
from cqed.params import SystemParams
from cqed.scattering import Spectrum, compute_spectrum, g2_zero


def fig4_config(mean_ghz, runs=12, seed=42, **kw):
    return MCConfig.in_ghz_2pi(
        runs=runs, n=5, mean_omega_e=mean_ghz, sigma_inhom=25.0,
        omega_c=0.0, kappa_b=12.5, kappa_c=12.5, g=5.0, gamma=0.3,
        seed=seed, omega_min=-100.0, omega_max=125.0, **kw)


class TestSampling:
    def test_deterministic_per_run(self):
        cfg = fig4_config(0.0)
        a = sample_ensemble(cfg, 3)
        b = sample_ensemble(cfg, 3)
        np.testing.assert_array_equal(a, b)
        c = sample_ensemble(cfg, 4)
        assert not np.array_equal(a, c)

    def test_zero_spread(self):
        cfg = fig4_config(20.0)
        cfg = MCConfig(**{**cfg.__dict__, "sigma_inhom": 0.0})
        np.testing.assert_array_equal(sample_ensemble(cfg, 0),
                                      np.full(5, cfg.mean_omega_e))

    def test_sample_mean_within_standard_error(self):
        cfg = MCConfig(runs=1, n=10**4, mean_omega_e=0.3, sigma_inhom=0.7,
                       seed=42)
        draws = sample_ensemble(cfg, 0)
        se = cfg.sigma_inhom / np.sqrt(draws.size)
        assert abs(draws.mean() - 0.3) < 4 * se

    def test_units_scaling(self):
        cfg = fig4_config(20.0)
        assert cfg.sigma_inhom == pytest.approx(1.0)   # 25 GHz over kappa
        assert cfg.mean_omega_e == pytest.approx(0.8)
        assert cfg.gamma == pytest.approx(0.012)


class TestDetectDips:
    def test_flat_spectrum_no_dips(self):
        p = SystemParams.in_kappa_units(0.0, 0.5, 0.5)
        grid = np.linspace(-2, 2, 401)
        spectrum = compute_spectrum(p, grid)
        assert detect_dips(spectrum) == []

    def test_synthetic_gaussian_dip(self):
        w0, width = 0.3123, 0.2
        grid = np.linspace(-2, 2, 801)

        def g2_func(w):
            return 1.0 - 0.5 * np.exp(-((w - w0) / width) ** 2)

        spectrum = Spectrum(omega_grid=grid, t=np.ones_like(grid),
                            g2zero=g2_func(grid))
        # localization of a smooth quadratic minimum saturates at sqrt(eps)
        dips = detect_dips(spectrum, g2_func, refine_tol=1e-8)
        assert len(dips) == 1
        assert dips[0].omega_b == pytest.approx(w0, abs=1e-6)
        assert dips[0].g2_at_dip == pytest.approx(0.5, abs=1e-12)

    def test_single_detuned_emitter_polaritonic_dip(self):
        p = SystemParams.in_kappa_units(0.0, 0.5, 0.5, [(0.8, 0.01, 0.2)])
        grid = np.linspace(-1.5, 2.0, 2001)
        spectrum = compute_spectrum(p, grid)
        ctx = ClassifyContext.from_params(p, spectrum, ensemble_mean=0.8)
        dips = detect_dips(spectrum, lambda w: g2_zero(p, w)[0], 1e-9, ctx)
        node = grid[int(np.argmin(spectrum.t))]
        pol = [d for d in dips if d.dip_class == "polaritonic"
               and d.omega_b > node]
        assert pol and all(d.g2_at_dip < 1 for d in pol)

    def test_refinement_never_worsens(self):
        p = SystemParams.in_kappa_units(0.0, 0.5, 0.5, [(0.8, 0.01, 0.2)])
        grid = np.linspace(0.5, 1.5, 301)   # deliberately coarse
        spectrum = compute_spectrum(p, grid)
        raw = detect_dips(spectrum)
        refined = detect_dips(spectrum, lambda w: g2_zero(p, w)[0], 1e-10)
        for a, b in zip(raw, refined):
            assert b.g2_at_dip <= a.g2_at_dip + 1e-15


class TestRunMC:
    def test_bit_identical_reruns(self):
        cfg = fig4_config(20.0, runs=4)
        r1 = run_mc(cfg)
        r2 = run_mc(cfg)
        assert r1.to_json() == r2.to_json()

    def test_threads_do_not_change_results(self):
        cfg1 = fig4_config(20.0, runs=4)
        cfg2 = fig4_config(20.0, runs=4, threads=2)
        assert run_mc(cfg1).to_json().replace('"threads": 1', "") \
            == run_mc(cfg2).to_json().replace('"threads": 2', "")

    def test_degenerate_ensemble_reduces_to_identical(self):
        cfg = MCConfig(runs=1, n=4, mean_omega_e=0.8, sigma_inhom=0.0,
                       g=0.2, gamma=0.01, seed=1, omega_min=-1.5,
                       omega_max=2.0)
        result = run_mc(cfg)
        run = result.runs[0]
        assert run.error is None
        np.testing.assert_array_equal(run.emitter_freqs, [0.8] * 4)
        # matches a deterministic single detection on the same grid
        params = cfg.system_params(run.emitter_freqs)
        grid = run_grid(cfg, run.emitter_freqs)
        spectrum = compute_spectrum(params, grid)
        ctx = ClassifyContext.from_params(params, spectrum,
                                          ensemble_mean=cfg.mean_omega_e)
        dips = detect_dips(spectrum, lambda w: g2_zero(params, w)[0],
                           cfg.refine_tol, ctx)
        assert tuple(dips) == run.dips

    def test_subradiant_dips_near_emitter_lines(self):
        result = run_mc(fig4_config(0.0, runs=10))
        checked = 0
        for run in result.runs:
            for dip in run.dips:
                if dip.dip_class == "subradiant":
                    dist = np.min(np.abs(run.emitter_freqs - dip.omega_b))
                    assert dist <= 3 * result.config.gamma + 1e-12
                    checked += 1
        assert checked > 0

    def test_histogram_counts_sum_to_dips(self):
        result = run_mc(fig4_config(20.0, runs=6))
        for dip_class, hists in result.histograms.items():
            dips = result.dips_by_class(dip_class)
            in_range = [d for d in dips
                        if result.config.omega_min <= d.omega_b
                        <= result.config.omega_max]
            assert sum(hists["omega_b"]["counts"]) == len(in_range)

    def test_errors_recorded_not_fatal(self):
        # A lossless ensemble member hits the exact transmission zero.
        cfg = MCConfig(runs=1, n=1, mean_omega_e=0.8, sigma_inhom=0.0,
                       g=0.2, gamma=0.0, seed=0, omega_min=0.79,
                       omega_max=0.81, coarse_step=0.02 / 400)
        result = run_mc(cfg)
        assert result.provenance["failed_runs"] == 1
        assert result.runs[0].error is not None

    def test_json_round_trip(self):
        import json
        result = run_mc(fig4_config(20.0, runs=2))
        doc = json.loads(result.to_json())
        assert doc["provenance"]["config_hash"] \
            == result.config.config_hash()
        assert len(doc["runs"]) == 2

    def test_grid_contains_fine_windows(self):
        cfg = fig4_config(20.0)
        freqs = sample_ensemble(cfg, 0)
        grid = run_grid(cfg, freqs)
        step = cfg.gamma / 10
        for om in freqs:
            if cfg.omega_min + 0.1 < om < cfg.omega_max - 0.1:
                sel = np.abs(grid - om) < 2 * cfg.gamma
                assert np.all(np.diff(grid[sel]) <= step + 1e-12)
