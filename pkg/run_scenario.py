"""
场景运行入口 (CosmoKG Scenario Runner)

从仓库根目录运行单个命令：
    python run_scenario.py <command> --config <场景文件> --out <输出目录> [--threads N] [--seed N]
"""

import sys

from cosmokg.cli import main

if __name__ == "__main__":
    sys.exit(main())
