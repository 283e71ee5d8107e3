# Weight-adjusted DG wave solver
