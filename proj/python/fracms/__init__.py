"""Multiscale simulation of flow in fractured porous media.

Fine embedded-fracture model, nonlocal multicontinuum (NLMC) upscaling and
GMsFEM coarsening, with the pipeline driver exposed as :func:`run`.
"""

from ._fracms import (  # noqa: F401
    GENERATOR_VERSION,
    RunConfig,
    SolverError,
    Study,
    ZeroReferenceError,
    default_paper_config,
    desk_config,
    generate_fractures,
    parse_config,
    relative_l2,
    run,
    saddle_solve,
    standard_geometry,
    sym_gen_eig,
)

__all__ = [
    "GENERATOR_VERSION",
    "RunConfig",
    "SolverError",
    "Study",
    "ZeroReferenceError",
    "default_paper_config",
    "desk_config",
    "generate_fractures",
    "parse_config",
    "relative_l2",
    "run",
    "saddle_solve",
    "standard_geometry",
    "sym_gen_eig",
]
