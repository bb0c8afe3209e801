"""sharplab: a desk-scale laboratory for sharp-interface limits.

Simulates the singularly perturbed Allen-Cahn equation and a
FitzHugh-Nagumo-type reaction-diffusion system on 2-D grids, solves the
corresponding limit interface motions (forced curvature flow, radial ODE,
coupled curve/field system), and measures how the diffuse interfaces
converge to the sharp ones as the layer-width parameter shrinks.
"""

from .nonlinearity import (
    BistableNonlinearity,
    Forcing,
    SystemCoupling,
    check_admissible,
    constant_forcing,
    fhn_coupling,
    linear_forcing,
    make_cubic,
    make_cubic_general,
    mobility_constant,
)
from .profile import LayerProfile, solve_profile
from .pde import (
    ACParams,
    RDState,
    ScalarField,
    energy,
    laplacian_neumann,
    radial_initial_data,
    simulate_ac,
    simulate_rd,
    stable_dt,
    step_allen_cahn,
    step_rd,
)
from .interface import (
    Curve,
    circle_curve,
    extract_level_set,
    graph_over,
    hausdorff,
    layer_error,
    signed_distance,
    transversality,
)
from .sharp import (
    LimitForcing,
    evolve_curve,
    evolve_radial,
    evolve_rd_limit,
    inside_outside,
    limit_forcing_from,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config_text
from .harness import (
    EpsRecord,
    OrderFit,
    SweepReport,
    fit_order,
    run_fhn_sweep,
    run_generation_study,
    run_validity_sweep,
    t_eps,
)

__version__ = "0.1.0"
