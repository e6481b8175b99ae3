"""Block-encodings of matrices with displacement structure."""
from .blockenc import AccessModel, BlockEncoding, encode, extract_block, verify_block_encoding
from .displacement import LcuDecomposition, lcu_decompose, lcu_decompose_structured, reconstruct
from .structmat import StructuredMatrix, build_structured

__all__ = [
    "AccessModel",
    "BlockEncoding",
    "LcuDecomposition",
    "StructuredMatrix",
    "build_structured",
    "encode",
    "extract_block",
    "lcu_decompose",
    "lcu_decompose_structured",
    "reconstruct",
    "verify_block_encoding",
]
