#!/usr/bin/env python3
"""
SplitLab - Main runner

Reproduces every benchmark preset in sequence.
"""

import argparse
import logging
import sys

from config import DB_PATH, LOG_LEVEL, OUTPUT_DIR
from db.database import LabDatabase
from errors import SplitLabError
from presets import PRESETS, preset_spec
from study import ConvergenceStudy

logging.basicConfig(
    level=LOG_LEVEL,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def main():
    """Run all presets, continuing past failures"""
    parser = argparse.ArgumentParser(description='Reproduce all SplitLab presets')
    parser.add_argument('--paper-scale', '--full-scale', dest='full_scale', action='store_true',
                        help='Full-scale particle count and T')
    parser.add_argument('--out-dir', default=OUTPUT_DIR, help='Output directory')
    parser.add_argument('--db', default=DB_PATH, help='Run ledger path')
    parser.add_argument('--only', nargs='+', choices=sorted(PRESETS), help='Subset of presets')
    args = parser.parse_args()

    db = LabDatabase(args.db)
    failed = []

    for name in args.only or PRESETS:
        logger.info(f"Reproducing preset {name}")
        try:
            report = ConvergenceStudy(preset_spec(name, args.full_scale, out_dir=args.out_dir), db).run()
        except SplitLabError as e:
            logger.error(f"Preset {name} failed: {e}")
            failed.append(name)
            continue
        slope = f"{report.kl_fit.slope:.2f}" if report.kl_fit else "n/a"
        logger.info(f"Preset {name} done: KL slope {slope} (benchmark {PRESETS[name].endpoint_slope:.2f})")

    if failed:
        logger.error(f"{len(failed)} preset(s) failed: {', '.join(failed)}")
        sys.exit(1)


if __name__ == '__main__':
    main()
