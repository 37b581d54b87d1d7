"""
Span NER Module

Span-based named entity recognition with supervised contrastive training and
retrieval-augmented inference over label centroids.

Exports:
- corpus: dataset model, BIO conversion, negative sampling, noisy-set construction
- encoder: window encoder and precomputed features
- span_model: span representation, projection and label distribution
- contrastive: span-level supervised contrastive loss
- rai: centroid table and retrieval-augmented inference
- training: batch forward/backward and the training loop
- evaluation: decoding and conlleval-semantics scoring
- experiments: robustness, batch-size and ablation harnesses
"""

# Import submodules so they can be accessed as:
# from lib.ner import corpus, training, evaluation
from . import corpus
from . import encoder
from . import span_model
from . import contrastive
from . import rai
from . import training
from . import evaluation
from . import experiments
from . import synthetic

# Also expose commonly used items directly
from .corpus import Dataset, GoldSpan, LabelSet, Sentence, parse_bio, format_bio
from .hyperparams import Hyperparams
from .training import train, TrainingResult
from .evaluation import decode, evaluate, score, ScoreReport
from .checkpoint import save_checkpoint, load_checkpoint
from .rai import save_centroid_table, load_centroid_table
from .gradcheck import gradcheck, gradcheck_suite

__all__ = [
    'corpus',
    'encoder',
    'span_model',
    'contrastive',
    'rai',
    'training',
    'evaluation',
    'experiments',
    'synthetic',
    'Dataset',
    'GoldSpan',
    'LabelSet',
    'Sentence',
    'parse_bio',
    'format_bio',
    'Hyperparams',
    'train',
    'TrainingResult',
    'decode',
    'evaluate',
    'score',
    'ScoreReport',
    'save_checkpoint',
    'load_checkpoint',
    'save_centroid_table',
    'load_centroid_table',
    'gradcheck',
    'gradcheck_suite',
]
