"""
命令行模块 (CosmoKG CLI Module)

该模块读取场景配置、分派命令并写出确定性的结果产物。
主要功能：
- 命令 classify、potential、evolve、asymptotics、bogoliubov、wkb-compare、riccati、duffing
- 每个产物带元数据头（配置哈希、容差、版本）
- 退出码：0 成功，1 配置错误，2 数值失败（记录出错模块与错误名）

用法：
    python run_scenario.py classify --config cosmokg/scenarios/big_brake.json --out results
"""

import argparse
import logging
import math
import os

from .common import (
    CosmoKGError, ConfigError, Command, Side, get_logger,
)
from .config import ScenarioConfig, STANDALONE_COMMANDS
from .dynamics import (
    ChartPotential, CauchyData, ModeState, Probe, sample_mode, asymptotic_data,
)
from .potential import classify, fit_potential_exponent, sample_potential
from .quantum import bogoliubov_spectrum, pair_creation_number, hilbert_schmidt_certificate
from .asymptotics import power_profile, solve_riccati, verify_riemann_bounds
from .wkb import ConstantProfile, GaussianBump, chart_profile, compare_wkb
from .semilinear import duffing_sweep
from .utils import (
    artifact_metadata, prepare_output_directory, write_csv, write_json,
)

logger = get_logger("cli")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class RunContext:
    """一次命令运行的上下文"""

    def __init__(self, command, config, out_dir, threads=1, seed=0):
        self.command = command
        self.config = config
        self.out_dir = out_dir
        self.threads = threads
        self.seed = seed
        self.artifacts = []

    @property
    def settings(self):
        return self.config.settings

    def metadata(self, **extra):
        metadata = artifact_metadata(self.config.config_hash, self.settings, self.command)
        metadata["scenario"] = self.config.name
        metadata["seed"] = self.seed
        metadata.update(extra)
        return metadata

    def json(self, name, payload, **extra):
        path = write_json(os.path.join(self.out_dir, name), payload, self.metadata(**extra))
        self.artifacts.append(path)
        logger.info(f"产物已写出: {path}")
        return path

    def csv(self, name, header, rows, **extra):
        path = write_csv(os.path.join(self.out_dir, name), header, rows, self.metadata(**extra))
        self.artifacts.append(path)
        logger.info(f"产物已写出: {path}")
        return path


def _singular_sides(model):
    return [side for side in Side.ALL if model.is_singular(side)]


def run_classify(ctx):
    config = ctx.config
    chart = config.chart()
    reports = {side: classify(config.model, config.coupling, side, chart)
               for side in _singular_sides(config.model)}
    ctx.json("classify.json", {"model": config.model, "coupling": config.coupling,
                               "reports": reports})


def run_potential(ctx):
    config = ctx.config
    block = config.block("potential")
    chart = config.chart()
    sides = block["sides"] or _singular_sides(config.model)
    rows, fits = [], {}
    for side in sides:
        samples = sample_potential(chart, config.coupling, side, block["inner"], block["decades"],
                                   block["points"])
        fitted, predicted = fit_potential_exponent(chart, config.coupling, side, block["inner"],
                                                   block["decades"], block["points"])
        rows.extend(samples.rows())
        fits[side] = {"variable": samples.variable, "fitted_exponent": fitted,
                      "predicted_exponent": predicted, "limit": samples.predicted.limit}
    ctx.csv("potential.csv", ["side", "variable", "x", "tau", "V"], rows)
    ctx.json("potential_fit.json", fits)


def _evolve_points(config, block, chart):
    if block["distances"] is not None:
        return [Probe(block["side"], d) for d in block["distances"]]
    if block["taus"] is not None:
        return list(block["taus"])
    if not chart.is_finite(block["side"]):
        raise ConfigError(f"{block['side']} 端 τ 为无穷，需要给出采样点", field_path="evolve.taus")
    return [Probe(block["side"], d) for d in config.settings.probes]


def run_evolve(ctx):
    config = ctx.config
    block = config.block("evolve")
    chart = config.chart()
    potential = ChartPotential(chart, config.coupling)
    points = _evolve_points(config, block, chart)
    psi0, dpsi0 = complex(*block["psi0"]), complex(*block["dpsi0"])
    header = ["tau", "re_psi", "im_psi", "re_dpsi", "im_dpsi"]
    for index, (mu, mult) in enumerate(config.mode_ladder(ctx.threads)):
        state = ModeState(mu, block["tau0"], psi0, dpsi0)
        trajectory = sample_mode(potential, mu, state, points, ctx.settings)
        # 到所在区域端点的精确距离按行序记在元数据中（无穷端一侧为 null）
        distances = [s.distance for s in trajectory.states]
        ctx.csv(f"mode_{index}.csv", header, trajectory.rows(), mu=mu, mult=mult,
                distances=distances)


def run_asymptotics(ctx):
    config = ctx.config
    block = config.block("asymptotics")
    seed = (complex(*block["psi0"]), complex(*block["dpsi0"]))
    cauchy = CauchyData(block["tau0"], [(mu, mult) + seed for mu, mult in config.mode_ladder(ctx.threads)])
    data = asymptotic_data(config.chart(), config.coupling, cauchy, block["side"], ctx.settings,
                           ctx.threads)
    ctx.json("asymptotics.json", {"cauchy": cauchy, "asymptotics": data})


def run_bogoliubov(ctx):
    config = ctx.config
    block = config.block("bogoliubov")
    spectrum = config.spectrum(ctx.threads)
    bogo = bogoliubov_spectrum(config.chart(), config.coupling, spectrum, ctx.settings, ctx.threads,
                               block["channel"])
    pairs = pair_creation_number(spectrum, bogo, block["fit_window"])
    certificate = None
    if math.isfinite(pairs.decay_slope):
        certificate = hilbert_schmidt_certificate(config.coupling.d, pairs.decay_slope)
    cutoffs = block["partial_cutoffs"] or []
    ctx.csv("bogoliubov.csv", bogo.CSV_HEADER, bogo.rows())
    ctx.json("bogoliubov.json", {
        "spectrum": spectrum,
        "bogoliubov": bogo,
        "pair_creation": pairs,
        "certificate": certificate,
        "partial_sums": [{"cutoff": c, "N": n} for c, n in zip(cutoffs, bogo.partial_sums(cutoffs))],
    })


def _wkb_profile(config, profile, order):
    if profile["kind"] == "constant":
        return ConstantProfile(profile["value"])
    if profile["kind"] == "gaussian":
        return GaussianBump(profile["amplitude"], profile["width"], profile["center"])
    if config.model is None or config.coupling is None:
        raise ConfigError("chart 剖面需要 universe 与 coupling 配置块", field_path="wkb.profile.kind")
    return chart_profile(config.model, config.coupling, order)


def run_wkb_compare(ctx):
    block = ctx.config.block("wkb")
    profile = _wkb_profile(ctx.config, block["profile"], block["order"])
    result = compare_wkb(profile, block["order"], block["mus"], tuple(block["span"]), ctx.settings,
                         block["stride"])
    header = ["mu", "olver_error", "phase_error", "phase_budget", "phase_within_bound",
              "form_difference"]
    ctx.csv("wkb_compare.csv", header, result["rows"])
    ctx.json("wkb_compare.json", {key: value for key, value in result.items() if key != "rows"})


def run_riccati(ctx):
    block = ctx.config.block("riccati")
    V = power_profile(block["gamma"], block["coefficient"])
    solution = solve_riccati(V, block["tau_plus"], block["tau_one"], block["M"], block["sign"],
                             n_grid=block["n_grid"], grading=block["grading"])
    lower, upper = solution.sandwich_bounds()
    report = {"riccati": solution,
              "min_margin_lower": float((solution.A - lower).min()),
              "min_margin_upper": float((upper - solution.A).min())}
    if block["riemann"] is not None:
        report["riemann"] = verify_riemann_bounds(block["riemann"]["q"], block["M"],
                                                  block["riemann"]["lambdas"],
                                                  threads=ctx.threads)
    ctx.json("riccati.json", report)


def run_duffing(ctx):
    rows = duffing_sweep(ctx.config.block("duffing")["phi0"], ctx.threads)
    header = ["phi0", "period", "period_numeric", "relative_difference", "upper_bound", "below_2pi"]
    ctx.csv("duffing.csv", header, rows)


COMMANDS = {
    Command.CLASSIFY: run_classify,
    Command.POTENTIAL: run_potential,
    Command.EVOLVE: run_evolve,
    Command.ASYMPTOTICS: run_asymptotics,
    Command.BOGOLIUBOV: run_bogoliubov,
    Command.WKB_COMPARE: run_wkb_compare,
    Command.RICCATI: run_riccati,
    Command.DUFFING: run_duffing,
}


def run(command, config_path, out_dir, threads=1, seed=0):
    """执行单个命令，返回退出码"""
    try:
        config = ScenarioConfig.from_file(config_path)
        config.require_universe(command)
        prepare_output_directory(out_dir)
    except ConfigError as e:
        logger.error(f"读取配置失败: {e}")
        return EXIT_CONFIG

    ctx = RunContext(command, config, out_dir, threads, seed)
    try:
        COMMANDS[command](ctx)
    except ConfigError as e:
        logger.error(f"{command}失败: {e}")
        return EXIT_CONFIG
    except CosmoKGError as e:
        logger.error(f"{command}失败: {e.name} ({e.module}): {e}")
        return EXIT_NUMERICAL
    except ValueError as e:
        # 配置校验之外的参数错误，仍按配置问题处理
        logger.error(f"{command}失败: 参数无效: {e}")
        return EXIT_CONFIG
    logger.info(f"{command} 完成，共写出 {len(ctx.artifacts)} 个产物")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(description='宇宙学Klein-Gordon场数值实验')
    parser.add_argument('command', choices=Command.ALL, help='要执行的命令')
    parser.add_argument('--config', required=True, help='场景配置文件（JSON）')
    parser.add_argument('--out', required=True, help='产物输出目录')
    parser.add_argument('--threads', type=int, default=1, help='工作线程数 (默认: 1)')
    parser.add_argument('--seed', type=int, default=0, help='记录在产物元数据中的种子 (默认: 0)')
    parser.add_argument('--log-level', choices=LOG_LEVELS, default='INFO', help='日志级别 (默认: INFO)')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.getLogger("CosmoKG").setLevel(args.log_level)
    if args.threads < 1:
        logger.error("读取配置失败: --threads 必须 ≥ 1")
        return EXIT_CONFIG
    return run(args.command, args.config, args.out, args.threads, args.seed)
