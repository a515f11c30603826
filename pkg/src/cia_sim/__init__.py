"""Real interference alignment for compound MIMO broadcast channels.

Modules:

* :mod:`cia_sim.channel` - compound channel configurations and seeded sampling
* :mod:`cia_sim.monomials` - pseudo-vector bases as exponent-vector sets
* :mod:`cia_sim.codec` - scheme parameters, encoding and received constellations
* :mod:`cia_sim.constellation` - enumeration, minimum distance and hard detection
* :mod:`cia_sim.hybrid` - zero-forcing plus alignment for ``K = M``
* :mod:`cia_sim.sim` - Monte Carlo sweeps, slope fits and outer bounds
* :mod:`cia_sim.cli` - the ``cia-sim`` command
"""
__version__ = "0.1.0"

from .channel import (ChannelRealization, CompoundChannelConfig, ScalarField, make_rng,
                      sample_channel, validate_genericity)
from .codec import CodecParams, dof_reference, make_params, nominal_dof
from .errors import (CiaError, CoefficientCollisionError, ConfigError, DiagnosticError,
                     InfeasibleError, InsufficientDataError, SizeCapError)

__all__ = [
    "__version__", "ChannelRealization", "CompoundChannelConfig", "ScalarField", "make_rng",
    "sample_channel", "validate_genericity", "CodecParams", "dof_reference", "make_params",
    "nominal_dof", "CiaError", "CoefficientCollisionError", "ConfigError", "DiagnosticError",
    "InfeasibleError", "InsufficientDataError", "SizeCapError",
]
