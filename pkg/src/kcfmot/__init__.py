"""Multi-object tracking with per-object correlation filters and foreground blobs."""

from .foreground import BlobParams, CandidateRegion, extract_regions
from .geometry import BoundingBox, Point, area, centroid, distance, overlap
from .kcf import KcfModel, KcfParams, Response, detect, gaussian_correlation, train, update
from .metrics import MotScore, TrajectoryRecord, TrajectorySet, evaluate, per_class
from .tracking import ManagerParams, MultiTracker, TrackState, track_sequence

__version__ = "0.1.0"

__all__ = [
    "BlobParams",
    "BoundingBox",
    "CandidateRegion",
    "KcfModel",
    "KcfParams",
    "ManagerParams",
    "MotScore",
    "MultiTracker",
    "Point",
    "Response",
    "TrackState",
    "TrajectoryRecord",
    "TrajectorySet",
    "area",
    "centroid",
    "detect",
    "distance",
    "evaluate",
    "extract_regions",
    "gaussian_correlation",
    "overlap",
    "per_class",
    "track_sequence",
    "train",
    "update",
]
