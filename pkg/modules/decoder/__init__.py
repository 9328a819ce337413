"""Traffic-element and centerline decoders with self-attention taps."""

from .attention import MultiHeadAttention
from .decoder import AttentionTaps, DecoderOutput, TransformerDecoder, run_cl_decoder, run_te_decoder
from .heads import CLHead, TEHead, cl_head, te_head

__all__ = [
    "AttentionTaps",
    "CLHead",
    "DecoderOutput",
    "MultiHeadAttention",
    "TEHead",
    "TransformerDecoder",
    "cl_head",
    "run_cl_decoder",
    "run_te_decoder",
    "te_head",
]
