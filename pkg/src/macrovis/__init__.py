"""Macroscopic-superposition diagnostics for spin-1/2 pure states.

Modules:

* :mod:`macrovis.statevec` -- state vectors and bit-level local operations
* :mod:`macrovis.models` -- lattice ground states, Shor and Grover states, references
* :mod:`macrovis.vcm` -- variance-covariance matrix, index p, the set S
* :mod:`macrovis.additive` -- spectral decomposition of additive operators, densities
* :mod:`macrovis.xi` -- kernels, coarse-grained quasi joint densities, negativity
* :mod:`macrovis.cli` -- command-line front end
"""

from .additive import SpectralDecomposition, decompose, density, project_group
from .models import (
    cat_state, grover_state, ground_state, lattice_chain, lattice_rect, parse_lattice,
    product_state, shor_me_state,
)
from .statevec import StateVector, basis_state, from_amplitudes
from .vcm import (
    AdditiveOperator, compute_vcm, estimate_p, extract_S, magnetization, m_x_minus_z,
    operator_variance, spectrum,
)
from .xi import (
    DiscreteKernel, XiField, coarse_grain, kernel2, kernel2_maximally_mixed, kernel_m,
    negativity, w_scaling_scan,
)

__version__ = "0.1.0"

__all__ = [
    "AdditiveOperator", "DiscreteKernel", "SpectralDecomposition", "StateVector", "XiField",
    "basis_state", "cat_state", "coarse_grain", "compute_vcm", "decompose", "density",
    "estimate_p", "extract_S", "from_amplitudes", "ground_state", "grover_state",
    "kernel2", "kernel2_maximally_mixed", "kernel_m", "lattice_chain", "lattice_rect",
    "m_x_minus_z", "magnetization", "negativity", "operator_variance", "parse_lattice",
    "product_state", "project_group", "shor_me_state", "spectrum", "w_scaling_scan",
]
