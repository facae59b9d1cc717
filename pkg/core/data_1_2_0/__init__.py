"""File formats and the synthetic dataset generator (1.2.0)."""

from core.data_1_2_0.checkpoint import load_checkpoint, save_checkpoint
from core.data_1_2_0.embeddings import EmbeddingTable, load_embeddings, save_embeddings
from core.data_1_2_0.features import PatchFeatureRecord, load_features, save_features
from core.data_1_2_0.reports import GzslScores, MetricReport, harmonic_mean, load_report, save_report
from core.data_1_2_0.synth import SynthBundle, SynthSpec, synth_gen, write_synth_bundle
from core.data_1_2_0.views import ClassViews, ViewCorpus, build_corpus, load_views, save_views

__all__ = [
    "ClassViews",
    "EmbeddingTable",
    "GzslScores",
    "MetricReport",
    "PatchFeatureRecord",
    "SynthBundle",
    "SynthSpec",
    "ViewCorpus",
    "build_corpus",
    "harmonic_mean",
    "load_checkpoint",
    "load_embeddings",
    "load_features",
    "load_report",
    "load_views",
    "save_checkpoint",
    "save_embeddings",
    "save_features",
    "save_report",
    "save_views",
    "synth_gen",
    "write_synth_bundle",
]
