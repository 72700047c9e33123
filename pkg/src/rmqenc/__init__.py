"""Succinct encodings for range minimum and range top-2 queries."""

from .errors import (DomainError, DuplicateValueError, FormatError, RangeError,
                     ResourceError, SolverError)
from .rmq import RmqEncoding
from .rt2q import Rt2qEncoding
from .succinct_tree import AlphaParams, SuccinctTree
from .tree_model import ArrayInput, BinaryTreeModel, build_cartesian

__version__ = "0.1.0"

__all__ = [
    "AlphaParams", "ArrayInput", "BinaryTreeModel", "DomainError", "DuplicateValueError",
    "FormatError", "RangeError", "ResourceError", "RmqEncoding", "Rt2qEncoding",
    "SolverError", "SuccinctTree", "build_cartesian",
]
