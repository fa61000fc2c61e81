# Core simulation modules: graph, signals, dynamics, gains, simulation
