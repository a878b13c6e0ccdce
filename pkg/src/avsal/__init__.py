"""Audiovisual saliency maps for uncategorized videos.

The pipeline fuses an audio-correlation saliency map (sound energy matched
to tracked moving regions in rank correlation space), a graph-based visual
saliency map, and a binary motion map, and evaluates predictions against
eye-fixation ground truth with AUC, KL divergence, NSS and CC.
"""

from .config import FusionWeights, PipelineConfig, load_config
from .pipeline import PipelineResult, compute_saliency, run_batch, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "FusionWeights",
    "PipelineConfig",
    "PipelineResult",
    "compute_saliency",
    "load_config",
    "run_batch",
    "run_pipeline",
    "__version__",
]
