import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fdiscc.config import ConfigError, desk_config
from fdiscc.harness import (RUN_CSV_COLUMNS, SWEEP_CSV_COLUMNS, SweepSpec,
                            aggregate, apply_parameter, load_sweep_spec,
                            result_row, run_cell, run_sweep, write_csv)


class TestSweepSpec:
    def test_load_and_validate(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({
            "parameter": "m_passive", "values": [8, 16], "schemes": ["proposed"],
            "n_seeds": 2, "output": "rows.csv"}))
        spec = load_sweep_spec(path)
        assert spec.parameter == "m_passive"
        assert spec.values == (8, 16)

    def test_unknown_parameter_rejected(self):
        with pytest.raises(ConfigError):
            SweepSpec(parameter="bogus", values=(1,)).validate()

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ConfigError):
            SweepSpec(parameter="m_passive", values=(8,), schemes=("zzz",)).validate()

    def test_nonphysical_values_rejected(self):
        with pytest.raises(ConfigError):
            SweepSpec(parameter="p_bs_watt", values=(-1.0,)).validate()
        with pytest.raises(ConfigError):
            SweepSpec(parameter="m_passive", values=(2.5,)).validate()

    def test_unknown_key_named(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"parameter": "m_passive", "values": [8],
                                    "bogus_key": 1}))
        with pytest.raises(ConfigError, match="bogus_key"):
            load_sweep_spec(path)


class TestApplyParameter:
    def test_scalar_fields(self):
        cfg = desk_config()
        assert apply_parameter(cfg, "p_bs_watt", 0.5).p_bs_watt == 0.5
        assert apply_parameter(cfg, "m_passive", 24).m_passive == 24
        assert apply_parameter(cfg, "n_tx", 6).n_tx == 6

    def test_cache_fields(self):
        cfg = desk_config()
        assert apply_parameter(cfg, "skew", 0.8).cache.skew == 0.8
        assert apply_parameter(cfg, "backhaul_rate", 5e7).cache.backhaul_rate == 5e7


class TestRows:
    def test_row_count_arithmetic(self):
        spec = SweepSpec(parameter="m_passive", values=(4, 6), schemes=("proposed", "hd"),
                         n_seeds=2, max_iter=2)
        cfg = desk_config(m_passive=8, m_active=2, n_cm=1, n_cp=1)
        rows = run_sweep(spec, base_cfg=cfg)
        assert len(rows) == 2 * 2 * 2
        assert all(set(SWEEP_CSV_COLUMNS) <= set(r.keys()) for r in rows)

    def test_rows_sorted_deterministically(self):
        spec = SweepSpec(parameter="m_passive", values=(6, 4), schemes=("hd", "proposed"),
                         n_seeds=2, max_iter=2)
        cfg = desk_config(m_passive=8, m_active=2, n_cm=1, n_cp=1)
        rows = run_sweep(spec, base_cfg=cfg)
        keys = [(r["m_passive"], r["scheme"], r["seed"]) for r in rows]
        assert keys == sorted(keys)

    def test_cell_determinism(self):
        cfg = desk_config(m_passive=6, m_active=2, n_cm=1, n_cp=1)
        a = run_cell(cfg, "m_passive", 6, "proposed", 1, max_iter=3)
        b = run_cell(cfg, "m_passive", 6, "proposed", 1, max_iter=3)
        a.pop("wall_time_s")
        b.pop("wall_time_s")
        assert a == b

    def test_csv_write_fixed_header(self, tmp_path):
        cfg = desk_config(m_passive=6, m_active=2, n_cm=1, n_cp=1)
        row = run_cell(cfg, "m_passive", 6, "proposed", 0, max_iter=2)
        path = tmp_path / "rows.csv"
        write_csv([row], SWEEP_CSV_COLUMNS, path)
        with open(path) as fh:
            header = next(csv.reader(fh))
        assert tuple(header) == SWEEP_CSV_COLUMNS


class TestAggregate:
    def test_single_row_median(self):
        rows = [{"scheme": "proposed", "m_passive": 8, "utility_bits": 5.0,
                 **{c: 1 for c in ("m_active", "n_tx", "n_rx", "n_cm", "n_cp",
                                   "p_bs_watt", "gamma_tar_linear",
                                   "backhaul_rate", "skew")}}]
        out = aggregate(rows)
        assert out[0]["utility_bits_median"] == 5.0
        assert out[0]["utility_bits_iqr"] == 0.0

    def test_median_vs_sort_oracle(self):
        rng = np.random.default_rng(0)
        vals = rng.normal(size=9)
        rows = [{"scheme": "proposed", "m_passive": 8, "utility_bits": float(v),
                 **{c: 1 for c in ("m_active", "n_tx", "n_rx", "n_cm", "n_cp",
                                   "p_bs_watt", "gamma_tar_linear",
                                   "backhaul_rate", "skew")}} for v in vals]
        out = aggregate(rows)
        assert out[0]["utility_bits_median"] == sorted(vals)[4]

    def test_empty_group_errors(self):
        with pytest.raises(ValueError):
            aggregate([])


def run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "fdiscc.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


class TestCli:
    def test_run_deterministic_csvs(self, tmp_path):
        for sub in ("a", "b"):
            r = run_cli(["run", "--config", "default", "--seed", "1",
                         "--out", str(tmp_path / sub), "--max-iter", "4"], tmp_path)
            assert r.returncode == 0, r.stderr
        for name in ("metrics.csv", "trace.csv"):
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            assert a == b, name

    def test_unknown_scheme_exit_code_2(self, tmp_path):
        r = run_cli(["run", "--scheme", "bogus", "--out", str(tmp_path)], tmp_path)
        assert r.returncode == 2

    def test_malformed_config_names_key(self, tmp_path):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"m_passive": 8, "not_a_key": 1}))
        r = run_cli(["run", "--config", str(cfg_path), "--out", str(tmp_path / "o")],
                    tmp_path)
        assert r.returncode == 2
        assert "not_a_key" in r.stderr

    def test_sweep_emits_rows(self, tmp_path):
        spec = {"parameter": "m_passive", "values": [4, 6], "schemes": ["proposed"],
                "n_seeds": 2, "output": "rows.csv", "max_iter": 2,
                "base_config": {"m_passive": 8, "m_active": 2, "n_cm": 1, "n_cp": 1,
                                "gamma_tar_linear": 1.0}}
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        r = run_cli(["sweep", "--spec", str(spec_path), "--out", str(tmp_path)], tmp_path)
        assert r.returncode == 0, r.stderr
        with open(tmp_path / "rows.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert (tmp_path / "rows_aggregate.csv").exists()

    def test_selftest_passes(self, tmp_path):
        r = run_cli(["selftest"], tmp_path)
        assert r.returncode == 0, r.stdout + r.stderr
        assert "FAIL" not in r.stdout
