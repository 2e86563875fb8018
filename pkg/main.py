#!/usr/bin/env python3
"""LDOF Outlier Toolkit - Main Entry Point
Top-n local distance-based outlier detection with KNN and LOF
baselines, synthetic scenes, k-sweeps and theorem checks.
"""
import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
