# Channel, fairness and AoI models
