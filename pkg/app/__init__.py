"""fairline: fairness and AoI optimization of NR V2X Mode 2 selection windows."""
