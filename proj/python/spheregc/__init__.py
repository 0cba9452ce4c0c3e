"""Seeded spherical graph-cut segmentation.

Arrays are indexed [z, y, x]; world coordinates are (x, y, z) in mm.
"""

from ._core import (
    FormatError,
    GeometryMismatch,
    IcoMesh,
    InvalidArgument,
    IoError,
    Mask,
    SeedOutOfBounds,
    SegmentationResult,
    Volume,
    dice,
    load_mask,
    load_volume,
    make_phantom,
    mask_volume_cm3,
    max_flow,
    mesh_at_level,
    rle_decode,
    rle_encode,
    save_mask,
    save_volume,
    segment,
    vertex_adjacency,
)

__all__ = [
    "FormatError",
    "GeometryMismatch",
    "IcoMesh",
    "InvalidArgument",
    "IoError",
    "Mask",
    "SeedOutOfBounds",
    "SegmentationResult",
    "Volume",
    "dice",
    "load_mask",
    "load_volume",
    "make_phantom",
    "mask_volume_cm3",
    "max_flow",
    "mesh_at_level",
    "rle_decode",
    "rle_encode",
    "save_mask",
    "save_volume",
    "segment",
    "vertex_adjacency",
]
