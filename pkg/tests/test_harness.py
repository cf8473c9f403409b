from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from rmmucb.bandit import EnvironmentSpec, run_trajectory
from rmmucb.exceptions import ConfigurationError
from rmmucb.harness import (
    CSV_HEADER,
    PRESETS,
    AggregateCurve,
    ExperimentConfig,
    aggregate,
    config_from_mapping,
    csv_text,
    derive_stream,
    gnuplot_script,
    parse_config_text,
    preset_values,
    read_config_file,
    read_policies_from_csv,
    run_experiment,
    run_trajectories,
    write_outputs,
)
from rmmucb.policies import make_policy
from rmmucb.streams import name_label

ENV = EnvironmentSpec.symmetrized_pareto([1.0, 0.5], 0.1)


def small_config(tmp_path, **kw):
    base = dict(env=ENV, policies=("vanilla-ucb", "mars"), horizon=40, reps=3,
                master_seed=11, out_dir=tmp_path)
    base.update(kw)
    return ExperimentConfig(**base)


class TestDeriveStream:
    def test_replay(self):
        a = derive_stream(5, [1, 2]).random(100)
        b = derive_stream(5, [1, 2]).random(100)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("labels", [[1, 3], [0, 2], [2, 1], [1, 2, 0]])
    def test_distinct_labels(self, labels):
        a = derive_stream(5, [1, 2]).integers(2**62, size=100)
        b = derive_stream(5, labels).integers(2**62, size=100)
        assert not np.any(a == b)

    def test_distinct_seeds(self):
        a = derive_stream(5, [1]).integers(2**62, size=100)
        b = derive_stream(6, [1]).integers(2**62, size=100)
        assert not np.any(a == b)

    def test_uniformity_chi_square(self):
        draws = derive_stream(2024, [7, 0]).integers(0, 100, size=1_000_000)
        counts = np.bincount(draws, minlength=100)
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_negative_label(self):
        with pytest.raises(ValueError):
            derive_stream(1, [-1])


class TestConfig:
    @pytest.mark.parametrize("kw", [
        dict(policies=("nope",)),
        dict(policies=()),
        dict(policies=("mars", "mars")),
        dict(reps=0),
        dict(horizon=1),
        dict(workers=0),
        dict(master_seed=-1),
        dict(m_max=1),
    ])
    def test_invalid(self, tmp_path, kw):
        with pytest.raises(ConfigurationError):
            small_config(tmp_path, **kw)

    def test_unknown_policy_lists_valid_names(self, tmp_path):
        with pytest.raises(ConfigurationError, match="trunc-ucb"):
            small_config(tmp_path, policies=("ucb-v",))

    def test_mapping_roundtrip(self, tmp_path):
        cfg = small_config(tmp_path, m_max=500)
        again = config_from_mapping(dict(cfg.items()))
        assert again == cfg

    def test_gaussian_roundtrip(self, tmp_path):
        cfg = small_config(tmp_path, env=EnvironmentSpec.gaussian([0.25, 0.0, -1.5], 2.0))
        assert config_from_mapping(dict(cfg.items())) == cfg

    @pytest.mark.parametrize("values,match", [
        ({"means": "1"}, "two arms"),
        ({"means": "1,x"}, "means"),
        ({"means": "1,0", "horizon": "ten"}, "horizon"),
        ({"means": "1,0", "env": "cauchy"}, "env"),
        ({"means": "1,0", "colour": "red"}, "colour"),
        ({"means": "1,0", "pareto-eps": "0"}, "pareto-eps"),
        ({"means": "1,0", "env": "gaussian", "gauss-std": "-1"}, "gauss-std"),
        ({"means": "1,inf"}, "finite"),
        ({}, "means"),
    ])
    def test_mapping_errors(self, values, match):
        with pytest.raises(ConfigurationError, match=match):
            config_from_mapping(values)

    def test_parse_config_text(self):
        text = "# comment\n\nmeans = 1.0, 0.9\nreps=4\n"
        assert parse_config_text(text) == {"means": "1.0, 0.9", "reps": "4"}
        assert config_from_mapping(parse_config_text(text)).reps == 4

    def test_parse_config_text_bad_line(self):
        with pytest.raises(ConfigurationError, match="line 2"):
            parse_config_text("reps=1\nmeans\n")

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(OSError, match="missing.txt"):
            read_config_file(tmp_path / "missing.txt")

    @pytest.mark.parametrize("name,gap,eps", [("fig1a", 0.1, 0.1), ("fig1b", 0.5, 0.1), ("figS", 0.1, 0.5)])
    def test_presets(self, name, gap, eps):
        cfg = config_from_mapping(preset_values(name))
        assert cfg.horizon == 1000 and cfg.reps == 20
        np.testing.assert_allclose(cfg.env.gaps, [0.0, gap])
        assert all(arm.tail == eps for arm in cfg.env.arms)
        assert set(cfg.policies) == {"rmm-ucb", "mars", "vanilla-ucb", "mom-ucb", "trunc-ucb"}

    def test_unknown_preset(self):
        with pytest.raises(ConfigurationError, match=", ".join(PRESETS)):
            preset_values("fig9")


class TestRunExperiment:
    def test_reps_one_gives_zero_std(self, tmp_path):
        res = run_experiment(small_config(tmp_path, reps=1))
        for curve in res.values():
            assert curve.reps == 1
            np.testing.assert_array_equal(curve.std, 0.0)

    def test_best_arm_reference_curve(self, tmp_path):
        res = run_experiment(small_config(tmp_path, policies=("best-arm",), horizon=100))
        curve = res["best-arm"]
        assert curve.mean[0] == 0.0
        np.testing.assert_array_equal(curve.mean[1:], 0.5)
        np.testing.assert_array_equal(curve.std, 0.0)

    def test_matches_direct_recomputation(self, tmp_path):
        """Aggregates equal a single-threaded replay of each trajectory."""
        cfg = small_config(tmp_path)
        res = run_experiment(cfg)
        for policy in cfg.policies:
            rows = np.stack([
                run_trajectory(ENV, make_policy(policy, ENV), cfg.horizon,
                               derive_stream(cfg.master_seed, [name_label(policy), rep])).regret
                for rep in range(cfg.reps)
            ])
            np.testing.assert_array_equal(res[policy].mean, rows.mean(axis=0))
            np.testing.assert_array_equal(res[policy].std, rows.std(axis=0, ddof=1))

    def test_curve_invariants(self, tmp_path):
        res = run_experiment(small_config(tmp_path))
        for curve in res.values():
            assert curve.mean.size == 40
            assert np.all(np.diff(curve.mean) >= 0)
            assert np.all(curve.std >= 0)

    def test_worker_count_does_not_matter(self, tmp_path):
        one = run_trajectories(small_config(tmp_path, workers=1))
        many = run_trajectories(small_config(tmp_path, workers=3))
        for policy in one:
            np.testing.assert_array_equal(one[policy], many[policy])

    def test_policy_isolation(self, tmp_path):
        a = run_trajectories(small_config(tmp_path, policies=("vanilla-ucb", "mars")))
        b = run_trajectories(small_config(tmp_path, policies=("mars", "trunc-ucb")))
        np.testing.assert_array_equal(a["mars"], b["mars"])

    def test_seed_changes_results(self, tmp_path):
        a = run_trajectories(small_config(tmp_path, policies=("mars",)))
        b = run_trajectories(small_config(tmp_path, policies=("mars",), master_seed=12))
        assert not np.array_equal(a["mars"], b["mars"])

    def test_aggregate_sample_std(self):
        curve = aggregate(np.array([[0.0, 1.0], [2.0, 5.0]]))
        np.testing.assert_allclose(curve.mean, [1.0, 3.0])
        np.testing.assert_allclose(curve.std, [np.sqrt(2.0), np.sqrt(8.0)])
        assert curve.reps == 2


class TestOutputs:
    def test_csv_shape(self, tmp_path):
        cfg = small_config(tmp_path, policies=("vanilla-ucb",), horizon=3, reps=2)
        csv_path, _ = write_outputs(run_experiment(cfg), cfg)
        raw = csv_path.read_bytes()
        assert b"\r" not in raw
        lines = raw.decode("utf-8").splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 4
        assert [int(line.split(",")[1]) for line in lines[1:]] == [1, 2, 3]

    def test_round_column_contiguous(self, tmp_path):
        cfg = small_config(tmp_path)
        csv_path, _ = write_outputs(run_experiment(cfg), cfg)
        rows = [line.split(",") for line in csv_path.read_text().splitlines()[1:]]
        for policy in cfg.policies:
            rounds = [int(r[1]) for r in rows if r[0] == policy]
            assert rounds == list(range(1, cfg.horizon + 1))

    def test_full_precision(self):
        curve = AggregateCurve(np.array([0.1 + 0.2, 1 / 3]), np.array([0.0, 2.0**-40]), 2)
        rows = csv_text({"p": curve}).splitlines()[1:]
        assert float(rows[0].split(",")[2]) == 0.1 + 0.2
        assert float(rows[1].split(",")[2]) == 1 / 3
        assert float(rows[1].split(",")[3]) == 2.0**-40

    def test_manifest_contents(self, tmp_path):
        cfg = small_config(tmp_path, m_max=300)
        _, manifest = write_outputs(run_experiment(cfg), cfg)
        values = parse_config_text(manifest.read_text())
        assert values["version"] == "0.1.0"
        assert values["m-max-active"] == "true"
        assert values["seed"] == "11"
        assert values["m-max"] == "300"

    def test_manifest_reproduces_csv(self, tmp_path):
        cfg = small_config(tmp_path / "a")
        csv_path, manifest = write_outputs(run_experiment(cfg), cfg)
        values = read_config_file(manifest)
        values["out"] = str(tmp_path / "b")
        again = config_from_mapping(values)
        csv2, _ = write_outputs(run_experiment(again), again)
        assert csv_path.read_bytes() == csv2.read_bytes()

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        cfg = small_config(blocker / "sub", reps=1)
        with pytest.raises(OSError, match=str(blocker)):
            write_outputs(run_experiment(cfg), cfg)

    def test_empty_results(self, tmp_path):
        with pytest.raises(ConfigurationError):
            write_outputs({}, small_config(tmp_path))

    def test_gnuplot_script(self, tmp_path):
        cfg = small_config(tmp_path)
        csv_path, _ = write_outputs(run_experiment(cfg), cfg)
        policies = read_policies_from_csv(csv_path)
        assert policies == ["vanilla-ucb", "mars"]
        script = gnuplot_script(csv_path, policies)
        assert str(csv_path) in script
        assert 'policies = "vanilla-ucb mars"' in script
        assert "set datafile separator ','" in script

    def test_policies_from_foreign_csv(self, tmp_path):
        path = Path(tmp_path) / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ConfigurationError):
            read_policies_from_csv(path)
