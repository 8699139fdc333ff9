"""Incremental stream classification over a trie-structured feature tree."""

from .classifier import DriftPolicy, Engine, Model, build_tree, classify, rebuild_subtree, swap_model
from .dataprep import Dataset, Instance, Schema, impute_missing, parse_schema, read_csv
from .discretize import (DiscretizationScheme, QuantaMatrix, caim_discretize, caim_score,
                         cair_score, mcaim_discretize, merge_intervals)
from .fpreduce import FPTree, build_fptree, fp_growth, reduce_features
from .ftree import FTree, Item
from .stream import RunConfig, StreamSpec, generate_stream, prequential_run

__version__ = "0.1.0"
