import json
import shutil
from pathlib import Path

import pytest

from econsim import io, reporting
from econsim.cli import main

SMALL = "[train]\nepisodes_per_iter = 4\nminibatch = 16\nhidden = 8, 8\n"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """Tiny two-seed training runs of every scenario, shared by the tests below."""
    root = tmp_path_factory.mktemp("runs")
    cfg = root / "small.ini"
    cfg.write_text(SMALL + "[evaluation]\nepisodes = 6\n")
    for name in "ABC":
        assert main(["train", "--scenario", name, "--config", str(cfg), "--iterations", "3",
                     "--seed", "0", "--seed", "1", "--out", str(root / name)]) == 0
        assert main(["evaluate", "--checkpoint-dir", str(root / name), "--out", str(root / f"eval_{name}")]) == 0
    return root


def test_missing_config_exits_2(capsys, tmp_path):
    code, _, err = run(capsys, "train", "--scenario", "A", "--config", tmp_path / "none.ini", "--out", tmp_path)
    assert code == 2 and "config not found" in err


def test_invalid_config_reports_line(capsys, tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[run]\nscenario = A\n[firm]\nalpah = 1\n")
    code, _, err = run(capsys, "train", "--config", cfg, "--out", tmp_path / "o")
    assert code == 2 and f"{cfg}:4:" in err


def test_usage_errors_exit_2(capsys, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["train"])
    assert info.value.code == 2
    code, _, err = run(capsys, "train", "--out", tmp_path)
    assert code == 2 and "no scenario" in err


def test_default_scenario_a_curves_shape(capsys, tmp_path):
    code, _, _ = run(capsys, "train", "--scenario", "A", "--iterations", 5, "--seed", 0, "--out", tmp_path)
    assert code == 0
    cols, rows = io.read_curves(tmp_path / "seed_0" / "curves.csv")
    assert len(rows) == 5 and len(cols) == 1 + 5
    assert sorted(p.name for p in (tmp_path / "seed_0" / "checkpoints").iterdir()) == [
        "central_bank.json", "firm.json", "household_0.json", "household_1.json", "household_2.json"]
    frozen = (tmp_path / "config.ini").read_text()
    assert "iterations = 5" in frozen and "seeds = 0" in frozen


def test_repeated_training_is_byte_identical(capsys, tmp_path):
    for out in ("a", "b"):
        assert run(capsys, "train", "--scenario", "C", "--iterations", 2, "--seed", 4,
                   "--out", tmp_path / out)[0] == 0
    for rel in ("seed_4/curves.csv", "seed_4/diagnostics.csv", "seed_4/checkpoints/government.json",
                "config.ini"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_frozen_config_reproduces_the_run(capsys, tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    assert run(capsys, "train", "--scenario", "B", "--config", cfg, "--iterations", 2, "--seed", 3,
               "--out", tmp_path / "first")[0] == 0
    assert run(capsys, "train", "--config", tmp_path / "first" / "config.ini",
               "--out", tmp_path / "second")[0] == 0
    assert ((tmp_path / "first" / "seed_3" / "curves.csv").read_bytes()
            == (tmp_path / "second" / "seed_3" / "curves.csv").read_bytes())


def test_zero_iterations_writes_initial_checkpoint_only(capsys, tmp_path):
    assert run(capsys, "train", "--scenario", "B", "--iterations", 0, "--seed", 0, "--out", tmp_path)[0] == 0
    params, meta = io.load_checkpoint(tmp_path / "seed_0" / "checkpoints" / "household_0.json")
    assert meta["iteration"] == 0
    assert io.read_curves(tmp_path / "seed_0" / "curves.csv")[1] == []


def test_two_agent_smoke_config(capsys, tmp_path):
    cfg = tmp_path / "smoke.ini"
    cfg.write_text("[run]\nscenario = A\nlearners = household_0, firm\n[households]\ngamma = 0.1\n" + SMALL)
    assert run(capsys, "train", "--config", cfg, "--iterations", 5, "--seed", 0, "--out", tmp_path / "o")[0] == 0
    cols, rows = io.read_curves(tmp_path / "o" / "seed_0" / "curves.csv")
    assert cols == ["iteration", "household_0", "firm"] and len(rows) == 5


def test_threads_env_does_not_change_results(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "small.ini"
    cfg.write_text(SMALL)
    args = ["train", "--scenario", "A", "--config", cfg, "--iterations", 2, "--seed", 0, "--seed", 1]
    monkeypatch.setenv("ECONSIM_THREADS", "1")
    assert run(capsys, *args, "--out", tmp_path / "serial")[0] == 0
    monkeypatch.setenv("ECONSIM_THREADS", "2")
    assert run(capsys, *args, "--out", tmp_path / "parallel")[0] == 0
    for seed in (0, 1):
        rel = f"seed_{seed}/curves.csv"
        assert (tmp_path / "serial" / rel).read_bytes() == (tmp_path / "parallel" / rel).read_bytes()
    monkeypatch.setenv("ECONSIM_THREADS", "zero")
    code, _, err = run(capsys, *args, "--out", tmp_path / "x")
    assert code == 2 and "ECONSIM_THREADS" in err


def test_evaluate_zero_episodes_writes_header_only(capsys, trained, tmp_path):
    code, _, _ = run(capsys, "evaluate", "--checkpoint-dir", trained / "B", "--episodes", 0, "--out", tmp_path)
    assert code == 0
    lines = (tmp_path / "seed_0" / "episodes_default.csv").read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("episode,t,")
    assert io.read_report(tmp_path / "report.json")["study"] is None


def test_evaluate_writes_logs_and_report(trained):
    doc, runs = reporting.load_evaluation(trained / "eval_A")
    assert doc["arms"] == ["credit_0", "credit_5000"] and doc["seeds"] == [0, 1]
    assert all(len(r.arms["credit_0"]) == 6 * 12 for r in runs)
    assert [h["name"] for h in doc["study"]["hypotheses"]] == [
        "savings_delta_positive", "c_act_delta_positive", "c_act_delta_last_gt_first"]


def test_credit_override_reproduces_credit_arm(capsys, trained, tmp_path):
    code, _, _ = run(capsys, "evaluate", "--checkpoint-dir", trained / "A", "--credit-override", 5000,
                     "--episodes", 6, "--out", tmp_path)
    assert code == 0
    for seed in (0, 1):
        rel = f"seed_{seed}/episodes_credit_5000.csv"
        assert (tmp_path / rel).read_bytes() == (trained / "eval_A" / rel).read_bytes()


def test_evaluate_single_seed_directory(capsys, trained, tmp_path):
    code, _, _ = run(capsys, "evaluate", "--checkpoint-dir", trained / "A" / "seed_1", "--out", tmp_path)
    assert code == 0
    assert io.read_report(tmp_path / "report.json")["seeds"] == [1]
    rel = "seed_1/episodes_credit_0.csv"
    assert (tmp_path / rel).read_bytes() == (trained / "eval_A" / rel).read_bytes()


def test_corrupt_checkpoint_exits_3(capsys, trained, tmp_path):
    shutil.copytree(trained / "B", tmp_path / "B")
    (tmp_path / "B" / "seed_0" / "checkpoints" / "firm.json").write_text("{ truncated")
    code, _, err = run(capsys, "evaluate", "--checkpoint-dir", tmp_path / "B", "--out", tmp_path / "e")
    assert code == 3 and "schema error" in err


def test_grid_mismatch_refuses_to_run(capsys, trained, tmp_path):
    cfg = tmp_path / "other.ini"
    cfg.write_text((trained / "B" / "config.ini").read_text().replace(
        "price = 188.0, 255.0, 322.0, 389.0, 456.0", "price = 188.0, 255.0, 322.0, 389.0, 500.0"))
    code, _, err = run(capsys, "evaluate", "--checkpoint-dir", trained / "B", "--config", cfg,
                       "--out", tmp_path / "e")
    assert code == 3 and "other action grids" in err
    assert not (tmp_path / "e" / "report.json").exists()


def test_report_zero_runs_exits_2(capsys, tmp_path):
    code, _, err = run(capsys, "report", "--out", tmp_path)
    assert code == 2


def test_report_single_run_is_passthrough(capsys, trained, tmp_path):
    code, out, _ = run(capsys, "report", "--runs", trained / "eval_A", "--out", tmp_path)
    assert code == 0 and "[A] savings_delta_positive" in out
    combined = io.read_report(tmp_path / "report.json")
    single = io.read_report(trained / "eval_A" / "report.json")
    assert combined["scenarios"]["A"]["study"] == single["study"]
    for name in ("fig2_household_observables", "fig2_box_summary", "fig3_delta", "training_curves", "verdicts"):
        cols, rows = reporting.read_table(tmp_path / f"{name}.csv", name)
        assert rows, name
    assert (tmp_path / "fig3_consumption_delta.png").stat().st_size > 0


def test_report_b_and_c_emits_dispersion_table(capsys, trained, tmp_path):
    code, out, _ = run(capsys, "report", "--runs", trained / "eval_B", trained / "eval_C", "--out", tmp_path)
    assert code == 0 and "[C] dispersion_c_lt_b" in out
    cols, rows = reporting.read_table(tmp_path / "dispersion_b_vs_c.csv", "dispersion_b_vs_c")
    assert {(r["scenario"], r["seed"]) for r in rows} == {
        (s, k) for s in "BC" for k in ("0", "1", "pooled")}
    assert (tmp_path / "dispersion_b_vs_c.png").exists()
    assert (tmp_path / "fig5_effective_eta.png").exists() and (tmp_path / "fig7_credit_share.png").exists()


def test_report_rejects_incompatible_scenarios(capsys, trained, tmp_path):
    code, _, err = run(capsys, "report", "--runs", trained / "eval_A", trained / "eval_B", "--out", tmp_path)
    assert code == 2 and "incompatible scenarios" in err


def test_report_rejects_duplicate_seeds(capsys, trained, tmp_path):
    code, _, err = run(capsys, "report", "--runs", trained / "eval_B", trained / "eval_B", "--out", tmp_path)
    assert code == 2 and "already included" in err


def test_report_on_missing_directory_exits_3(capsys, tmp_path):
    code, _, _ = run(capsys, "report", "--runs", tmp_path / "nothing", "--out", tmp_path / "o")
    assert code == 3


def test_report_tables_round_trip(capsys, trained, tmp_path):
    assert run(capsys, "report", "--runs", trained / "eval_C", "--out", tmp_path, "--no-figures")[0] == 0
    assert not list(tmp_path.glob("*.png"))
    for path in tmp_path.glob("*.csv"):
        name = path.stem
        cols, rows = reporting.read_table(path, name)
        io.write_csv(tmp_path / "again.csv.tmp", name, cols, rows)
        assert (tmp_path / "again.csv.tmp").read_bytes() == path.read_bytes(), name
    json.loads((tmp_path / "report.json").read_text())
