"""Finite-model verification engine for groupoid quantales, étale covers,
groupoid actions, Hilbert modules and bilocales."""
from .errors import (AdjointUndefinedError, CapacityError, CoverDefectError, NotCoverableError, ParseError,
                     QFError, StructuralError, UsageError)
from .suplat import SupLattice, SupMap, chain, powerset, right_adjoint, validate
from .tensor import TensorLattice, tensor, tensor_over_base
from .locale import CMap, FinSpace, classify_map
from .quantale import Quantale, classify, validate_quantale
from .groupoid import FinGroupoid, cyclic_group, oquantale, pair_groupoid, unit_groupoid, validate_groupoid
from .cover import CoverData, IEQFData, check_cover, check_etale_covered, check_inverse_embedded, germ_cover, \
    ieqf_from_cover, trivial_cover
from .actions import GAction, check_descent, check_O_locale, invariants_and_orbit, lift_action, validate_action
from .hilbert import HilbertModule, check_sheaf, self_module, sheaf_of, validate_hilbert
from .bilocale import Bilocale, associativity_smoke, check_tensor_agreement, self_bilocale, tensor_compose, \
    validate_bilocale
from .qfformat import Workspace, emit, parse, parse_text
from .runner import Report, run

__version__ = "0.1.0"
