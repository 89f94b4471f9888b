"""Fisher information for the separation of two weak, partially coherent
sources imaged through a lossy 4f system."""

from .errors import *  # noqa: F401,F403
from .loss import GramBound, detection_probability_frequency, gaussian_psf, gram_bound
from .measurement import OutcomeDistribution, classical_fi, direct_imaging_fi, spade_distribution, spade_fi
from .numerics import ComplexProfile, QuadratureSpec, integrate
from .optics import Aperture, SourcePair, propagate_4f, transmission_probability
from .oracle import ReducedRepresentation, oracle_qfi, qfi_spectral, reduce
from .qfi import QfiReport, gaussian_closed_forms, qfi_point_sources, qfi_report
from .state import TwoSourceState, assemble_state

__version__ = "0.1.0"
