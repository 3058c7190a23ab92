"""
场景端到端测试模块 (Scenario End-to-End Test Module)

该模块用随附的场景配置完整运行命令行，检查产物内容与退出码。
主要功能：
- classify：Big Brake 场景的分类结果
- bogoliubov：共形无质量场在 Bang-Crunch 宇宙中不产生粒子对
- duffing：四次振子周期表全部小于 2π
- 入口脚本 run_scenario.py 的调用与产物的逐字节确定性
"""

import json
import os
import subprocess
import sys

from cosmokg.cli import EXIT_OK, run

ROOT = os.path.dirname(os.path.abspath(__file__))
SCENARIOS = os.path.join(ROOT, "cosmokg", "scenarios")


def scenario(name):
    return os.path.join(SCENARIOS, f"{name}.json")


def read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def test_classify_big_brake(tmp_path):
    print("开始测试 Big Brake 分类...")
    assert run("classify", scenario("big_brake"), str(tmp_path)) == EXIT_OK
    report = read_json(tmp_path / "classify.json")["result"]["reports"]["Future"]
    print(f"分类结果: {report['singularity_class']} ({report['row']})")
    assert report["singularity_class"] == "BigBrake"
    assert report["phi0_exists"] and report["phi1_exists"]


def test_conformal_bang_crunch_creates_no_pairs(tmp_path):
    print("开始测试共形无质量场的粒子产生...")
    assert run("bogoliubov", scenario("conformal_bang_crunch"), str(tmp_path), threads=2) == EXIT_OK
    result = read_json(tmp_path / "bogoliubov.json")["result"]
    N = float(result["bogoliubov"]["N_pairs"])
    print(f"粒子对数目: {N:.3e}")
    assert N < 1e-10
    assert [float(p["cutoff"]) for p in result["partial_sums"]] == [10.0, 50.0, 100.0]


def test_duffing_periods_below_harmonic(tmp_path):
    print("开始测试四次振子周期表...")
    assert run("duffing", scenario("duffing_sweep"), str(tmp_path)) == EXIT_OK
    with open(tmp_path / "duffing.csv", "r", encoding="utf-8") as f:
        rows = [line.rstrip("\n").split(",") for line in f if not line.startswith("#")]
    header, rows = rows[0], rows[1:]
    assert len(rows) == 9
    assert all(row[header.index("below_2pi")] == "true" for row in rows)


def test_entry_script_is_deterministic(tmp_path):
    outputs = []
    for label in ("first", "second"):
        out = tmp_path / label
        completed = subprocess.run(
            [sys.executable, os.path.join(ROOT, "run_scenario.py"), "classify",
             "--config", scenario("big_brake"), "--out", str(out), "--log-level", "WARNING"],
            cwd=ROOT, capture_output=True, text=True)
        assert completed.returncode == EXIT_OK, completed.stderr
        with open(out / "classify.json", "rb") as f:
            outputs.append(f.read())
    assert outputs[0] == outputs[1]
