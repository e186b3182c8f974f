# Experiment sweeps
