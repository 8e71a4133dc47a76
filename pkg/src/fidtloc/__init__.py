"""Crowd localization with focal inverse distance transform maps."""

from .types import PointSet, as_map
from .distance import distance_transform, distance_transform_bruteforce
from .fidt import FidtParams, idt_map, fidt_map, fidt_profile
from .lmds import LmdsParams, DetectionResult, detect, count
from .boxes import BoxParams, PseudoBox, generate_boxes
from .losses import SsimParams, LossReport, mse_loss, ssim, issim_loss, total_loss
from .evaluation import (
    SigmaPolicy,
    MatchReport,
    match_points,
    evaluate_localization_sweep,
    counting_errors,
    scene_bucket,
    scene_level_report,
)

__version__ = "0.1.0"
