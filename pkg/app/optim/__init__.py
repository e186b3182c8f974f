# Optimizer, operators and metrics
