"""Converters and fixture generators for the scene graph interchange format."""

from .adapters import GENERIC_LAYOUT, LAYOUTS, load_generic
from .fixtures import PROFILES, generate_fixture
from .scoring import ScoredRelation, scores_to_ordered_triplets

__version__ = "0.1.0"
