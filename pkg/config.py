
# Reproducibility
DEFAULT_SEED = 42
DEFAULT_TRIALS = 1000

# Exponent used when a command needs one and --p is not given
DEFAULT_P = 2.0

# Section / prefix sizes per command
DEFAULT_N_BOUNDS = 1000
DEFAULT_N_NORM = 64
DEFAULT_N_VERIFY = 50   # upper end of the random N drawn per trial

# Output Mode
# Options: 'table' (human), 'csv', 'json'
OUTPUT_FORMAT = 'table'

# Verifier tolerance: residual >= -VERIFY_TOL * max(1, |rhs|) counts as a pass
VERIFY_TOL = 1e-12

# Roundoff allowance for the local and averaged feasibility margins
FEASIBILITY_RTOL = 1e-12

# Power iteration
NORM_TOL = 1e-10
NORM_MAX_ITER = 100000

# Exponents past this switch the Carleman-side coefficients to scaled evaluation
LOG_SCALE_THRESHOLD = 700.0

# Sections above this size are never materialized densely
DENSE_LIMIT = 4096

# Brute force oracle grid sizes, keyed by section size
BRUTE_FORCE_GRID = {
    2: 100000,
    3: 300,
    4: 60,
}
# Nelder-Mead restarts from the best grid points
BRUTE_FORCE_STARTS = 4

# Bisection for the minimal feasible L
BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200
BISECTION_EDGE = 1e-12  # bracket is (EDGE, p * (1 - EDGE))

# Caps process-pool concurrency for `verify`
THREADS_ENV = 'HARDY_BOUNDS_THREADS'

# Exponents drawn per trial when --p is not given
TRIAL_EXPONENTS = [1.5, 2.0, 3.0]

# Sweep axis defaults
SWEEP_DEFAULTS = {
    'p': [1.25, 1.5, 2.0, 3.0, 4.0],
    'alpha': [0.0, 0.5, 1.0, 2.0],
    'n': [10, 100, 1000],
}
