"""
Constants shared across the SATA toolkit.
"""


class Tolerances:
    # Fractional solution invariants.
    SIMPLEX_SLACK = 1e-9
    NEGATIVE_X = 1e-12

    # Pivoting and optimality inside the simplex tableau.
    PIVOT = 1e-12
    FEASIBILITY = 1e-9
    LP_OBJECTIVE = 1e-8

    # Values within this distance of a robot's largest x are treated as tied when rounding.
    ROUNDING_TIE = 1e-9

    # Equivalence and ordering checks.
    EQUIVALENCE = 1e-9
    ORDERING = 1e-9
    H_CONVERGENCE = 1e-6

    # Largest ratio between positive weights the LP kernel accepts.
    WEIGHT_DYNAMIC_RANGE = 1e12


class Limits:
    ENUMERATION_CAP = 10 ** 6
    LP_PRIMITIVE_CAP = 200
    ENUMERATION_CHUNK = 1 << 15
    SIMPLEX_MAX_PIVOTS = 50_000
    DEFAULT_MAX_ROUNDS = 10_000


class Geometry:
    # Inverse-distance quality is clamped at this distance (meters).
    MIN_DISTANCE = 0.1
    # Attempts at a boundary-respecting heading before steering a target toward the arena center.
    HEADING_RESAMPLE_ATTEMPTS = 100


class Columns:
    EPISODE = ['step', 'policy', 'estimated', 'actual', 'rounds', 'bytes']
    EPISODE_EXTRA = ['seed', 'target_count', 'estimated_bottleneck', 'observed_total', 'assumption_violations', 'world_hash']
    ROUND_LOG = ['round', 'sender', 'receiver', 'bytes']
    FRACTIONAL = ['robot', 'primitive', 'x', 'chosen']
    SWEEP_CASE = ['robots', 'targets', 'phi', 'weights']
    SWEEP = SWEEP_CASE + ['trial', 'instance_seed', 'measured_phi', 'solver', 'h', 'epsilon', 'objective', 'value', 'fractional_value',
                          'rounds']


class ExitCodes:
    OK = 0
    IO_ERROR = 1
    PARSE_ERROR = 2
    SOLVER_ERROR = 3
    VERIFICATION_FAILED = 4
