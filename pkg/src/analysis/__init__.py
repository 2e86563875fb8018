"""LDOF Analysis Package
Closed-form bounds, synthetic data and evaluation protocols.
Submodules are imported directly (``from src.analysis.evaluation import ...``).
"""
