"""Synthetic road scenes: generation, feature rendering and dataset IO."""

from .dataset import Dataset, SceneSample, make_sample, read_dataset, write_dataset
from .generator import generate_scene, generate_scenes
from .render import render_features
from .types import FeatureMap, Scene, SDMap, TrafficElement

__all__ = [
    "Dataset",
    "FeatureMap",
    "SDMap",
    "Scene",
    "SceneSample",
    "TrafficElement",
    "generate_scene",
    "generate_scenes",
    "make_sample",
    "read_dataset",
    "render_features",
    "write_dataset",
]
