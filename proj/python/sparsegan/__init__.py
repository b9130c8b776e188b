from ._sparsegan import (
    bleu,
    grammar_accepts,
    grammar_membership_rate,
    least_squares,
    self_bleu,
    sparse_encode,
    synth_sentences,
    topk_dynamic,
    topk_static,
)

__all__ = [
    "bleu",
    "grammar_accepts",
    "grammar_membership_rate",
    "least_squares",
    "self_bleu",
    "sparse_encode",
    "synth_sentences",
    "topk_dynamic",
    "topk_static",
]
