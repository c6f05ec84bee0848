import csv
import json

import numpy as np
import pytest

from abwlab.core import InsufficientDataError
from abwlab.harness import (
    ConfigError,
    Method,
    ScenarioConfig,
    emit_results,
    get_scenario,
    run_scenario,
    scenario_catalog,
    sd_metric,
)
from abwlab.harness.cli import main
from abwlab.harness.runner import aggregate, run_bandit_episode, run_kalman_episode


def small(name="burstiness-exp", **kw):
    params = dict(repetitions=3, steps=30, kalman_steps=3)
    params.update(kw)
    return get_scenario(name).replace(**params)


def test_sd_metric_examples():
    assert sd_metric([50, 50, 50], 50) == 0
    assert sd_metric([49, 51], 50) == pytest.approx(np.sqrt(2))
    base = [40, 55, 61]
    num = lambda e: sd_metric(e, 50) ** 2 * (len(e) - 1)
    assert num(base + [50]) <= num(base) * (1 + 1e-12)
    with pytest.raises(InsufficientDataError):
        sd_metric([50], 50)


def test_catalog_contents():
    cat = scenario_catalog()
    expected = {f"burstiness-{k}" for k in ("cbr", "exp", "pareto")} | {
        f"intensity-{r}" for r in (25, 50, 75)} | {f"multihop-{h}" for h in range(1, 5)} | {
        "tightbottleneck-I", "tightbottleneck-II"}
    assert set(cat) == expected
    assert cat["tightbottleneck-I"].true_available_bandwidth == 25
    assert cat["tightbottleneck-II"].true_available_bandwidth == 25
    assert [l.capacity for l in cat["tightbottleneck-I"].path.links] == [50, 100]
    assert [l.capacity for l in cat["tightbottleneck-II"].path.links] == [100, 50]
    assert cat["burstiness-pareto"].path.links[0].cross_traffic.pareto_shape == 1.5
    assert [cat[f"intensity-{r}"].true_available_bandwidth for r in (25, 50, 75)] == [75, 50, 25]
    assert len(cat["multihop-4"].path.links) == 4
    for c in cat.values():
        tight = c.path.links[c.path.tight_link]
        # every preset keeps gamma inside the convergent range of its tight link
        assert c.bandit.gamma < 1 - tight.cross_traffic.mean_rate / tight.capacity


def test_multihop_1_matches_burstiness_exp():
    a = get_scenario("multihop-1").to_dict()
    b = get_scenario("burstiness-exp").to_dict()
    a.pop("name"), b.pop("name")
    assert a == b


@pytest.mark.parametrize("name", sorted(scenario_catalog()))
def test_config_roundtrip(name):
    c = get_scenario(name)
    assert ScenarioConfig.from_json(c.to_json()) == c


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(bogus=1),
    lambda d: d["path"]["links"][0].update(bandwidth=3),
    lambda d: d["bandit"].update(alpha=0.1),
    lambda d: d["path"]["links"][0]["cross_traffic"].update(kind="FRACTAL"),
    lambda d: d.update(steps=5),
    lambda d: d.update(repetitions=0),
    lambda d: d.pop("path"),
])
def test_bad_configs_rejected(mutate):
    doc = get_scenario("burstiness-exp").to_dict()
    mutate(doc)
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(doc)


def test_single_repetition_is_the_episode():
    c = small(repetitions=1)
    res = run_scenario(c)
    ep = run_bandit_episode(c, 0)
    np.testing.assert_array_equal(res.methods[Method.BANDIT].mean_estimate, [r.estimate for r in ep])
    kep = run_kalman_episode(c, 0)
    np.testing.assert_array_equal(res.methods[Method.KALMAN].mean_estimate, [r.estimate for r in kep])


def test_episode_streams_independent_of_repetition_count():
    a = run_scenario(small(repetitions=2), [Method.BANDIT]).methods[Method.BANDIT]
    b = run_scenario(small(repetitions=4), [Method.BANDIT]).methods[Method.BANDIT]
    np.testing.assert_array_equal(a.estimates, b.estimates[:2])
    np.testing.assert_array_equal(a.rewards, b.rewards[:2])


def test_seed_fanout_distinct_streams():
    c = small()
    rewards = [[r.reward_or_strain for r in run_bandit_episode(c, i)] for i in range(3)]
    assert rewards[0] != rewards[1] != rewards[2]
    other = [r.reward_or_strain for r in run_bandit_episode(c.replace(master_seed=99), 0)]
    assert other != rewards[0]


def test_aggregation_order_independent():
    c = small(repetitions=4)
    eps = {i: run_bandit_episode(c, i) for i in range(4)}
    shuffled = {i: eps[i] for i in (2, 0, 3, 1)}
    a, b = aggregate(c, Method.BANDIT, eps), aggregate(c, Method.BANDIT, shuffled)
    np.testing.assert_array_equal(a.estimates, b.estimates)
    np.testing.assert_array_equal(a.sd, b.sd)


def test_probe_load_accounting():
    c = small()
    res = run_scenario(c)
    per_train = c.probe.packet_count * c.probe.packet_size_bits
    b, k = res.methods[Method.BANDIT], res.methods[Method.KALMAN]
    np.testing.assert_array_equal(b.probe_bits_cum, per_train * np.arange(1, c.steps + 1))
    np.testing.assert_array_equal(k.probe_bits_cum, c.grid.count * per_train * np.arange(1, c.kalman_steps + 1))
    assert np.all(np.diff(b.probe_bits_cum) > 0) and np.all(np.diff(k.probe_bits_cum) > 0)
    for agg in (b, k):
        assert np.all((agg.estimates >= 0) & (agg.estimates <= c.grid.top))


def test_workers_give_identical_results():
    c = small(repetitions=2, steps=20, kalman_steps=2)
    a = run_scenario(c, workers=1)
    b = run_scenario(c, workers=2)
    for m in a.methods:
        np.testing.assert_array_equal(a.methods[m].estimates, b.methods[m].estimates)


def test_cbr_bandit_converges_within_two_passes():
    c = get_scenario("burstiness-cbr").replace(repetitions=10, steps=40)
    agg = run_scenario(c, [Method.BANDIT]).methods[Method.BANDIT]
    assert agg.at_step(40)[0] == pytest.approx(50, abs=2.5)


def test_emit_results_schema(tmp_path):
    res = run_scenario(small())
    paths = emit_results(res, "csv", tmp_path)
    assert {p.name for p in paths} == {"steps.csv", "summary.json", "plot_bandit.csv", "plot_kalman.csv"}
    lines = (tmp_path / "steps.csv").read_text().splitlines()
    assert lines[0] == "step,method,mean_estimate_mbps,sd_mbps,mean_reward,probe_bits_cum"
    assert len(lines) == 1 + 30 + 3
    doc = json.loads((tmp_path / "summary.json").read_text())
    assert doc["scenario"] == "burstiness-exp"
    assert doc["true_available_bandwidth_mbps"] == 50
    assert set(doc["methods"]) == {"BANDIT", "KALMAN"}
    for m in doc["methods"].values():
        assert {"final_mean_estimate_mbps", "final_sd_mbps"} <= set(m)
    with (tmp_path / "plot_bandit.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 30 and float(rows[-1]["true_available_bandwidth_mbps"]) == 50

    emit_results(res, "json", tmp_path / "j")
    steps = json.loads((tmp_path / "j" / "steps.json").read_text())
    assert steps[0]["method"] == "BANDIT" and len(steps) == 33


def test_emit_results_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_results(run_scenario(small()), "csv", blocker / "sub")


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["catalog"]) == 0
    assert "tightbottleneck-II" in capsys.readouterr().out
    assert main(["run", "nope"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x", "path": {"links": [{"capacity": 100}]}, "extra": 1}')
    assert main(["run", "--config", str(bad)]) == 2
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["run", "burstiness-exp", "--reps", "0"]) == 2
    with pytest.raises(SystemExit) as err:
        main(["run", "--format", "xml"])
    assert err.value.code == 2


def test_cli_runtime_failure_exit_code(tmp_path, monkeypatch):
    from abwlab.harness import runner

    def boom(config, episode):
        raise ArithmeticError("boom")

    monkeypatch.setitem(runner._EPISODE_RUNNERS, Method.BANDIT, boom)
    assert main(["run", "burstiness-exp", "--reps", "1", "--steps", "20"]) == 3


def test_cli_run_and_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(small().replace(name="custom").to_json())
    assert main(["run", "--config", str(cfg), "--method", "kalman"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["scenario"] == "custom" and list(doc["methods"]) == ["KALMAN"]


def test_cli_seed_env_override(tmp_path, monkeypatch):
    args = ["run", "burstiness-exp", "--reps", "2", "--steps", "20", "--format", "csv"]
    monkeypatch.setenv("ABWLAB_SEED", "42")
    assert main(args + ["--seed", "7", "--out", str(tmp_path / "a")]) == 0
    monkeypatch.delenv("ABWLAB_SEED")
    assert main(args + ["--seed", "42", "--out", str(tmp_path / "b")]) == 0
    assert main(args + ["--seed", "7", "--out", str(tmp_path / "c")]) == 0
    a, b, c = ((tmp_path / d / "steps.csv").read_bytes() for d in "abc")
    assert a == b != c
    assert json.loads((tmp_path / "a" / "summary.json").read_text())["master_seed"] == 42


def test_cli_fluid_curve(tmp_path, capsys):
    assert main(["fluid-curve", "burstiness-cbr"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert len(rows) == 20
    by_rate = {float(r["r_in_mbps"]): r for r in rows}
    assert float(by_rate[75]["r_out_mbps"]) == pytest.approx(60)
    assert float(by_rate[75]["strain"]) == pytest.approx(0.25)
    assert float(by_rate[50]["strain"]) == 0
    rewards = {r: float(v["reward"]) for r, v in by_rate.items()}
    assert max(rewards, key=rewards.get) == 50
    out = tmp_path / "curve.json"
    assert main(["fluid-curve", "tightbottleneck-I", "--points", "100", "--format", "json",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["curve"]) == 100 and doc["available_bandwidth_mbps"] == 25


@pytest.mark.slow
def test_bandit_sd_below_kalman_sd_single_link():
    c = get_scenario("burstiness-exp").replace(repetitions=20, steps=300, kalman_steps=300)
    res = run_scenario(c)
    assert res.methods[Method.BANDIT].at_step(300)[1] < res.methods[Method.KALMAN].at_step(300)[1]
