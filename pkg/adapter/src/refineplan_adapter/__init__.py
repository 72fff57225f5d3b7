"""Adapter around the refineplan engine: encoder exports, reference
evaluators for test fixtures, and plan execution.

The adapter never imports the engine; the two packages meet only at the
documented file formats (GRT tensors, plan JSON, CoNLL-U) and the engine
CLI.
"""

from .encoder import ClipEncoder, EncoderUnavailableError, HashedFeatureEncoder, make_encoder
from .executor import RecordingBackend, ReferenceBackend, execute_plan, load_plan
from .export import ExportManifest, derive_phrases, export_embeddings
from .grt import read_grt, read_matrix, write_grt

__version__ = "0.1.0"
