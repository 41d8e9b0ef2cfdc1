"""LQR design for discrete-time periodic systems via a no-overlap lifting."""
from .control import (
    LiftedController,
    PeriodicGains,
    closed_loop_monodromy,
    compare_controllers,
    controller_from_lifted,
    controls_from_lifted,
    gains_from_periodic,
)
from .dpare import PeriodicRiccatiSolution, solve_hench_laub, solve_yang
from .errors import LiftLQRError
from .lifted_dare import LiftedRiccatiSolution, algorithm_3_1, reduce, solve_reduced
from .lifting import LiftedSystem, lift
from .model import (
    PeriodicSystem,
    converged_periodic_riccati,
    finite_horizon_riccati,
    random_stabilizable,
    simulate,
    validate,
)

__version__ = "0.1.0"
