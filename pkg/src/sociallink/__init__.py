"""Structured entity linking for short texts with social-network user embeddings."""

from .corpus import Annotation, Lexicon, MentionCandidate, Tweet, generate_candidates, load_corpus, load_lexicon
from .embeddings import EmbeddingTable, load_embeddings, lookup, mention_vector
from .inference import brute_force_decode, decode, decode_loss_augmented, prev_index
from .netembed import NetEmbedConfig, SocialGraph, load_graph, train_line2
from .scorer import Model, backward, load_model, save_model, score_g, score_g1, score_g2, score_message
from .training import TrainConfig, sgd_step, train, tweet_loss

__version__ = "0.1.0"
