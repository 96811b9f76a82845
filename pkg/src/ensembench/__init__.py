"""
ensembench - Neural-Network Ensemble Benchmark

Trains deep, snapshot, batch and MIMO ensembles on synthetic ID/OOD shape
images and scores them on uncertainty, diversity quality, rejection accuracy
and computational cost.
"""

__version__ = "0.1.0"
