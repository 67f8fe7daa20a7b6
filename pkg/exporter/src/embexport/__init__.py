"""Export ViT backbone embeddings of an image folder to an EMBSET v1 file."""

from .backbone import DEFAULT_MODEL, FEATURE_DIM, OFFLINE_MODEL, load_backbone
from .export import ExportJob, ExportSummary, export

__version__ = "0.1.0"
