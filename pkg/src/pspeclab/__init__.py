"""pspeclab: pseudospectra, quasimodes and random-perturbation experiments
for a small gallery of non-selfadjoint model operators."""

from .gallery import (
    DiscretizedOperator,
    SymbolModel,
    davies_ho,
    hager_model,
    jordan_block,
    make_operator,
    selfadjoint_ho,
)
from .engine import ComplexGrid, SigmaMinField, contours, region, scan
from .linalg import (
    eigenvalues,
    operator_norm,
    resolvent_norm_at,
    schur_form,
    smallest_singular_value,
)
from .symbols import (
    PhaseSpacePoint,
    half_imag_bracket,
    kappa_fit,
    volume_V_z,
    weyl_prediction,
)
from .quasimodes import GaussianBeam, beam_center, build_beam, jordan_quasimode, residual_decay
from .randlab import (
    PerturbationSpec,
    probabilistic_weyl_experiment,
    sample_gaussian_matrix,
    ssv_tail_experiment,
)

__version__ = "0.1.0"
