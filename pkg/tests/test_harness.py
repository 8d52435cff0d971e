import json
import os

import numpy as np
import pytest

from spinctrl.csvio import read_csv
from spinctrl.dynamics import PropagationSettings
from spinctrl.harness import (
    ExperimentConfig,
    SchemeSpec,
    build_problem,
    campaign_fingerprint,
    compare_schemes,
    draw_couplings,
    landscape_sweep,
    read_campaign_csv,
    run_campaign,
    write_comparison_csv,
    write_landscape_csv,
)
from spinctrl.optimizers import SearchBox, grid_search
from spinctrl.pulses import GaussianFamily


def tiny_config(**overrides):
    base = dict(
        master_seed=42,
        n_trials=2,
        n_spins=4,
        schemes=(
            SchemeSpec.make("gauss5", "gaussian_grid", res_a=5, res_omega=5),
        ),
        tf_values=(0.5,),
        substeps=64,
        adaptive=False,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestDrawCouplings:
    def test_deterministic_and_in_range(self):
        a = draw_couplings(7, 5, 4)
        b = draw_couplings(7, 5, 4)
        assert np.array_equal(a.couplings, b.couplings)
        assert np.all(np.abs(a.couplings) <= 1.0)

    def test_trial_streams_are_prefix_stable(self):
        short = draw_couplings(7, 3, 4)
        long = draw_couplings(7, 10, 4)
        assert np.array_equal(short.couplings, long.couplings[:3])

    def test_mean_near_zero(self):
        trials = draw_couplings(11, 2500, 4)
        assert abs(float(trials.couplings.mean())) <= 0.05

    def test_checksums_identify_trials(self):
        trials = draw_couplings(13, 3, 4)
        shas = {trials.trial_checksum(t) for t in range(3)}
        assert len(shas) == 3

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            draw_couplings(1, 0, 4)


class TestExperimentConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            tiny_config(schemes=())
        with pytest.raises(ValueError):
            tiny_config(tf_values=(0.0,))
        with pytest.raises(ValueError):
            tiny_config(breaker="both")
        with pytest.raises(ValueError):
            tiny_config(
                schemes=(
                    SchemeSpec.make("x", "gaussian_grid"),
                    SchemeSpec.make("x", "dcrab"),
                )
            )

    def test_round_trip_dict(self):
        config = tiny_config()
        again = ExperimentConfig.from_dict(config.to_dict())
        assert again == config

    def test_from_dict_rejects_unknown_keys(self):
        data = tiny_config().to_dict()
        data["surprise"] = 1
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict(data)


class TestRunCampaign:
    def test_single_cell_matches_direct_grid_search(self, tmp_path):
        config = tiny_config(n_trials=1)
        result = run_campaign(config, str(tmp_path / "camp"))
        assert len(result.records) == 1
        record = result.records[0]

        trials = draw_couplings(42, 1, 4)
        problem = build_problem(config, trials.trial_couplings(0), 0.5)
        box = SearchBox(bounds=((-50.0, 50.0), (0.02, 4.0)), resolution=(5, 5))
        direct = grid_search(
            problem, GaussianFamily(t_f=0.5), box, PropagationSettings(substeps=64, adaptive=False)
        )
        assert record.best_f == pytest.approx(direct.best.fidelity, abs=1e-13)
        assert record.params_dict()["a"] == pytest.approx(direct.best.params[0])

    def test_rerun_is_reproducible(self, tmp_path):
        config = tiny_config()
        first = run_campaign(config, str(tmp_path / "a"))
        second = run_campaign(config, str(tmp_path / "b"))
        assert campaign_fingerprint(first.csv_path) == campaign_fingerprint(second.csv_path)
        rows_a = [
            (r.trial, r.t_f, r.scheme_id, r.best_f, r.n_evals, r.couplings_sha, r.params)
            for r in first.records
        ]
        rows_b = [
            (r.trial, r.t_f, r.scheme_id, r.best_f, r.n_evals, r.couplings_sha, r.params)
            for r in second.records
        ]
        assert rows_a == rows_b

    def test_resume_matches_uninterrupted(self, tmp_path):
        config = tiny_config()
        full = run_campaign(config, str(tmp_path / "full"))

        partial_dir = tmp_path / "partial"
        run_campaign(config, str(partial_dir))
        # simulate an interruption: drop one cell, truncate another,
        # remove the merged CSV
        cells = sorted(os.listdir(partial_dir / "cells"))
        os.remove(partial_dir / "cells" / cells[0])
        with open(partial_dir / "cells" / cells[1], "w") as fh:
            fh.write('{"trial": 0, "t_f"')
        os.remove(partial_dir / "campaign.csv")
        resumed = run_campaign(config, str(partial_dir), resume=True)
        assert campaign_fingerprint(full.csv_path) == campaign_fingerprint(resumed.csv_path)

    def test_cell_failure_is_recorded_and_campaign_continues(self, tmp_path):
        config = tiny_config(
            n_trials=1,
            schemes=(
                SchemeSpec.make("bad", "poly_grid", n_lambda=4),  # grids must be 2D
                SchemeSpec.make("gauss3", "gaussian_grid", res_a=3, res_omega=3),
            ),
        )
        result = run_campaign(config, str(tmp_path / "camp"))
        assert len(result.failures) == 1
        assert "bad" in result.failures[0][0]
        assert [r.scheme_id for r in result.records] == ["gauss3"]

    def test_manifest_contents(self, tmp_path):
        config = tiny_config(n_trials=1)
        result = run_campaign(config, str(tmp_path / "camp"))
        with open(result.manifest_path) as fh:
            manifest = json.load(fh)
        assert manifest["config"]["master_seed"] == 42
        assert manifest["trialset_sha"]
        assert manifest["fingerprint"] == campaign_fingerprint(result.csv_path)

    def test_csv_round_trip(self, tmp_path):
        config = tiny_config(n_trials=1)
        result = run_campaign(config, str(tmp_path / "camp"))
        records = read_campaign_csv(result.csv_path)
        assert len(records) == 1
        assert records[0].scheme_id == "gauss5"
        assert records[0].best_f == pytest.approx(result.records[0].best_f, rel=1e-11)

    def test_worker_pool_matches_sequential(self, tmp_path):
        config = tiny_config(
            n_trials=2,
            schemes=(SchemeSpec.make("gauss3", "gaussian_grid", res_a=3, res_omega=3),),
        )
        seq = run_campaign(config, str(tmp_path / "seq"), workers=1)
        par = run_campaign(config, str(tmp_path / "par"), workers=2)
        assert campaign_fingerprint(seq.csv_path) == campaign_fingerprint(par.csv_path)

    def test_unknown_scheme_option_fails_cell(self, tmp_path):
        config = tiny_config(
            n_trials=1,
            schemes=(SchemeSpec.make("gauss", "gaussian_grid", resolution=9),),
        )
        result = run_campaign(config, str(tmp_path / "camp"))
        assert len(result.failures) == 1
        assert "unknown option" in result.failures[0][1]

    def test_export_pulses_writes_cell_pulse_csvs(self, tmp_path):
        config = tiny_config(
            n_trials=1,
            export_pulses=True,
            schemes=(SchemeSpec.make("gauss3", "gaussian_grid", res_a=3, res_omega=3),),
        )
        out_dir = tmp_path / "camp"
        run_campaign(config, str(out_dir))
        pulse_files = sorted(os.listdir(out_dir / "pulses"))
        assert pulse_files == ["pulse_0000_tf0_gauss3.csv"]
        schema, _, header, rows = read_csv(str(out_dir / "pulses" / pulse_files[0]))
        assert schema == "spinctrl.pulse.v1"
        assert header == ["t", "g"] and len(rows) == 512


class TestLandscape:
    def test_two_by_two_matches_grid_search(self, tmp_path):
        config = tiny_config()
        trials = draw_couplings(42, 1, 4)
        problem = build_problem(config, trials.trial_couplings(0), 0.5)
        family = GaussianFamily(t_f=0.5)
        box = SearchBox(bounds=((-50.0, 50.0), (0.02, 4.0)), resolution=(2, 2))
        settings = PropagationSettings(substeps=64, adaptive=False)
        grid = landscape_sweep(problem, family, box, settings, trial=1)
        assert grid.values.shape == (2, 2)
        direct = grid_search(problem, family, box, settings)
        assert float(grid.values.max()) == pytest.approx(direct.best.fidelity, abs=0)

        path = str(tmp_path / "landscape.csv")
        write_landscape_csv(grid, path)
        schema, meta, header, rows = read_csv(path)
        assert schema == "spinctrl.landscape.v1"
        assert header == ["x", "y", "F"]
        assert meta["trial"] == "1"
        assert len(rows) == 4
        assert float(rows[0][0]) == -50.0

    def test_polynomial_ridge_is_linear_with_unit_negative_slope(self):
        # the short-time landscape of the two-point polynomial pulse has
        # high-fidelity strips along lines lambda1 + lambda2 = const; the
        # intercept is draw-specific, the slope is not
        from spinctrl.pulses import PolynomialFamily
        from spinctrl.spin_model import SpinChainSpec
        from spinctrl.dynamics import ControlProblem

        couplings = draw_couplings(2024, 3, 4).trial_couplings(2)
        problem = ControlProblem.for_chain(SpinChainSpec(4, couplings), t_f=0.1)
        box = SearchBox(bounds=((-30.0, 30.0), (-30.0, 30.0)), resolution=(61, 61))
        settings = PropagationSettings(substeps=64, adaptive=False, method="splitstep")
        grid = landscape_sweep(problem, PolynomialFamily(t_f=0.1, n_lambda=2), box, settings)
        ii, jj = np.nonzero(grid.values >= grid.values.max() - 0.02)
        l1, l2 = grid.axes[0][ii], grid.axes[1][jj]
        # mirror strips at positive and negative total weight: fit each
        branches = 0
        for sign in (1.0, -1.0):
            pick = np.sign(l1 + l2) == sign
            if pick.sum() < 10:
                continue
            slope, intercept = np.polyfit(l1[pick], l2[pick], 1)
            rms = float(np.sqrt(np.mean((l2[pick] - (slope * l1[pick] + intercept)) ** 2)))
            assert abs(slope + 1.0) <= 0.1
            assert rms <= 2.0  # tight against the 60-wide box
            branches += 1
        assert branches >= 1


class TestCompare:
    def make_records(self, tmp_path, schemes):
        config = tiny_config(n_trials=2, schemes=schemes)
        return run_campaign(config, str(tmp_path / "camp")).records

    def test_self_comparison_is_zero(self, tmp_path):
        records = self.make_records(
            tmp_path, (SchemeSpec.make("gauss3", "gaussian_grid", res_a=3, res_omega=3),)
        )
        record = compare_schemes(records, "gauss3")
        assert len(record.rows) == 2
        assert all(row[5] == 0.0 for row in record.rows)
        assert record.median_for(0.5, "gauss3") == 0.0

    def test_deltas_bounded_and_written(self, tmp_path):
        records = self.make_records(
            tmp_path,
            (
                SchemeSpec.make("gauss3", "gaussian_grid", res_a=3, res_omega=3),
                SchemeSpec.make("rand5", "gaussian_random", n_guesses=5),
            ),
        )
        record = compare_schemes(records, "gauss3")
        for row in record.rows:
            assert -1.0 <= row[5] <= 1.0
        path = str(tmp_path / "compare.csv")
        write_comparison_csv(record, path)
        schema, meta, header, rows = read_csv(path)
        assert schema == "spinctrl.compare.v1"
        assert meta["reference"] == "gauss3"
        assert len(rows) == 4

    def test_mismatched_couplings_rejected(self, tmp_path):
        records = list(
            self.make_records(
                tmp_path,
                (
                    SchemeSpec.make("gauss3", "gaussian_grid", res_a=3, res_omega=3),
                    SchemeSpec.make("rand5", "gaussian_random", n_guesses=5),
                ),
            )
        )
        from dataclasses import replace

        idx = next(i for i, r in enumerate(records) if r.scheme_id == "rand5")
        records[idx] = replace(records[idx], couplings_sha="deadbeefdead")
        with pytest.raises(ValueError):
            compare_schemes(records, "gauss3")

    def test_missing_reference_rejected(self, tmp_path):
        records = self.make_records(
            tmp_path, (SchemeSpec.make("gauss3", "gaussian_grid", res_a=3, res_omega=3),)
        )
        with pytest.raises(ValueError):
            compare_schemes(records, "other")
