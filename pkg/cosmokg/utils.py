"""
工具函数模块 (CosmoKG Utilities Module)

该模块提供各计算模块和命令行共享的辅助函数。
主要功能：
- 配置哈希计算（SHA-256）用于产物可追溯
- 确定性的浮点格式化（17位有效数字科学计数法）
- 产物目录准备（创建并确认可写）
- 带元数据头的CSV/JSON写出
- 几何探针序列、Aitken与Richardson外推、对数-对数斜率拟合

作为各模块的辅助组件，避免重复代码，并保证同一配置产生逐字节一致的产物。
"""

import os
import csv
import json
import hashlib
import math
import platform

import numpy as np
import scipy

from .common import MAX_LIMIT_ORDER, MIN_LIMIT_ORDER, ConfigError, NoConvergence, get_logger

logger = get_logger("utils")


def canonical_json(data):
    """规范化JSON文本（键排序，无多余空白）"""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def compute_config_hash(config_dict):
    """计算配置的SHA-256哈希值"""
    hash_obj = hashlib.sha256()
    hash_obj.update(canonical_json(config_dict).encode("utf-8"))
    return hash_obj.hexdigest()


def format_float(value):
    """17位有效数字的科学计数法"""
    value = float(value)
    if value != value:
        return "nan"
    if value in (float("inf"), float("-inf")):
        return "inf" if value > 0 else "-inf"
    return f"{value:.16e}"


def to_jsonable(value):
    """把数值结果转为可确定性序列化的对象（浮点转格式化字符串）"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": format_float(value.real), "im": format_float(value.imag)}
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    return value


def prepare_output_directory(directory):
    """创建产物目录并确认可写；失败时抛出指向 --out 的 ConfigError"""
    marker = os.path.join(directory, f".cosmokg_write_{os.getpid()}")
    try:
        os.makedirs(directory, exist_ok=True)
        with open(marker, "w", encoding="utf-8") as f:
            f.write("")
        os.remove(marker)
    except OSError as e:
        raise ConfigError(f"产物目录不可用: {directory} ({e.strerror or e})", field_path="--out") from e
    logger.debug(f"产物目录就绪: {directory}")
    return directory


def artifact_metadata(config_hash, settings=None, command=None):
    """产物元数据：配置哈希、容差、版本（不含时间戳以保证确定性）"""
    from . import __version__

    metadata = {
        "config_hash": config_hash,
        "cosmokg_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "python_version": platform.python_version(),
    }
    if command is not None:
        metadata["command"] = command
    if settings is not None:
        metadata["tolerances"] = settings.to_dict()
    return metadata


def write_json(path, payload, metadata):
    """写出带metadata块的JSON产物"""
    document = {"metadata": to_jsonable(metadata), "result": to_jsonable(payload)}
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(document, sort_keys=True, indent=2, ensure_ascii=True))
        f.write("\n")
    return path


def write_csv(path, header, rows, metadata):
    """写出CSV产物：'# key: value' 元数据头、表头行、逗号分隔、LF换行"""
    with open(path, "w", encoding="utf-8", newline="") as f:
        for key in sorted(metadata):
            f.write(f"# {key}: {canonical_json(to_jsonable(metadata[key]))}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
    return path


def _csv_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def read_csv_metadata(path):
    """读取CSV产物的元数据头"""
    metadata = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].rstrip("\n").partition(": ")
            metadata[key] = json.loads(value)
    return metadata


def geometric_probes(start, stop, per_decade=1):
    """从start到stop（递减）的几何探针序列"""
    if start <= 0 or stop <= 0 or stop >= start:
        raise ValueError("探针序列需要 start > stop > 0")
    decades = np.log10(start / stop)
    count = int(round(decades * per_decade)) + 1
    return tuple(float(x) for x in np.geomspace(start, stop, count))


def aitken_extrapolate(values):
    """
    对收敛序列做Aitken Δ²外推

    返回 (外推值, 误差估计)。误差估计取最后两次外推之差；
    少于四个值时退化为最后一步的增量。
    """
    values = [complex(v) for v in values]
    if len(values) < 2:
        raise ValueError("至少需要两个值")
    if len(values) == 2:
        return values[-1], abs(values[-1] - values[-2])

    def extrapolate(v0, v1, v2):
        d1 = v1 - v0
        d2 = v2 - v1
        if d1 == 0:
            return v2
        rho = d2 / d1
        if abs(rho) >= 0.9:
            return v2
        return v2 + d2 * rho / (1 - rho)

    last = extrapolate(*values[-3:])
    if len(values) >= 4:
        previous = extrapolate(*values[-4:-1])
        return last, abs(last - previous)
    return last, abs(values[-1] - values[-2])


def richardson_extrapolate(steps, values, order):
    """误差展开为 h^order, h^{2·order}, … 时的多级Richardson外推（对 x = h^order 的Neville格式）"""
    steps = np.asarray(steps, dtype=float)
    table = [np.asarray(values, dtype=complex)]
    for level in range(1, len(steps)):
        prev = table[-1]
        ratio = (steps[:-level] / steps[level:]) ** order
        table.append((ratio * prev[1:] - prev[:-1]) / (ratio - 1))
    best = table[-1][-1]
    return best if best.imag != 0 else best.real


def extrapolate_limit(distances, values, tol, floor=0.0, label="极限", module="utils"):
    """
    几何探针序列 Δ → 0 的极限外推

    主阶 p 由最后三个探针的差分比估计（截到 [MIN_LIMIT_ORDER, MAX_LIMIT_ORDER]），
    在最后至多四个探针上按 p, 2p, 3p 做Richardson外推；误差估计为去掉最后一个探针后
    外推值的变化。最后一步差分不超过 floor·(1+|v|) 时视为已收敛到积分噪声，直接取末值。
    返回 (极限, 误差估计)；误差超过 tol·(1+|极限|) 时抛出 NoConvergence。
    """
    distances = np.asarray(distances, dtype=float)
    values = np.asarray(values, dtype=complex)
    if len(values) < 3:
        raise ValueError("至少需要三个探针")
    last = complex(values[-1])
    d1 = abs(values[-2] - values[-3])
    d2 = abs(values[-1] - values[-2])
    if d2 <= floor * (1.0 + abs(last)):
        return last, float(d2)
    if d1 <= d2:
        raise NoConvergence(f"{label}: 探针差分不减小（{d1:.3e} → {d2:.3e}）", module=module)
    order = math.log(d1 / d2) / math.log(distances[-2] / distances[-1])
    order = min(max(order, MIN_LIMIT_ORDER), MAX_LIMIT_ORDER)
    k = min(4, len(values))
    best = complex(richardson_extrapolate(distances[-k:], values[-k:], order))
    previous = complex(richardson_extrapolate(distances[-k:-1], values[-k:-1], order))
    error = abs(best - previous)
    if error > tol * (1.0 + abs(best)):
        raise NoConvergence(f"{label}: 相邻外推值相差 {error:.3e}，探针序列不收敛", module=module)
    return best, float(error)


def loglog_slope(x, y):
    """log|y| 对 log x 的最小二乘斜率与截距"""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    mask = (x > 0) & (y > 0)
    if mask.sum() < 2:
        raise ValueError("斜率拟合至少需要两个正值点")
    slope, intercept = np.polyfit(np.log(x[mask]), np.log(y[mask]), 1)
    return float(slope), float(intercept)
