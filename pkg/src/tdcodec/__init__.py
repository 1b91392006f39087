"""tdcodec: lossy multichannel audio codec built on sparse approximation.

The pipeline: partition the signal into blocks, approximate all channels
of each block simultaneously over a redundant trigonometric dictionary
(greedy pursuit with global block ranking), uniformly quantize the
coefficients, delta-code the sorted atom indices, entropy-code all
streams with an adaptive arithmetic coder, and wrap everything in a
checksummed .tdc container.
"""

from .container import (
    BadMagicError,
    ChecksumError,
    ContainerError,
    FormatError,
    MultichannelSignal,
    PartitionedSignal,
    TdcHeader,
    UnsupportedVersionError,
    assemble,
    partition,
    read_tdc,
    read_wav,
    write_tdc,
    write_wav,
)
from .dictionary import TrigDictionary, synthesize_block
from .entropy import EntropyDecodeError, SymbolStream, arith_decode, arith_encode
from .metrics import SNR_CAP_DB, QualityReport, rate_report, snr
from .pursuit import (
    AtomicDecomposition,
    BlockState,
    PursuitResult,
    SelectionCriterion,
    accept_candidate,
    compute_coefficients,
    hbw_pursuit,
    init_block_state,
    pursuit_to_snr,
    rank_blocks,
    select_candidate,
)
from .quantize import (
    QuantizedBlockSet,
    StreamError,
    dequantize_magnitude,
    parse_streams,
    quantize_magnitude,
    serialize_decompositions,
)

__version__ = "0.1.0"

__all__ = [
    "AtomicDecomposition",
    "BadMagicError",
    "BlockState",
    "ChecksumError",
    "ContainerError",
    "EntropyDecodeError",
    "FormatError",
    "MultichannelSignal",
    "PartitionedSignal",
    "PursuitResult",
    "QualityReport",
    "QuantizedBlockSet",
    "SelectionCriterion",
    "SNR_CAP_DB",
    "StreamError",
    "SymbolStream",
    "TdcHeader",
    "TrigDictionary",
    "UnsupportedVersionError",
    "accept_candidate",
    "arith_decode",
    "arith_encode",
    "assemble",
    "compute_coefficients",
    "dequantize_magnitude",
    "hbw_pursuit",
    "init_block_state",
    "parse_streams",
    "partition",
    "pursuit_to_snr",
    "quantize_magnitude",
    "rank_blocks",
    "rate_report",
    "read_tdc",
    "read_wav",
    "select_candidate",
    "serialize_decompositions",
    "snr",
    "synthesize_block",
    "write_tdc",
    "write_wav",
]
