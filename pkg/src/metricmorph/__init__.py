"""Morph graph drawings into target shapes while holding quality metrics fixed."""

from pathlib import Path

from .analysis import (ExperimentGrid, SignificanceMatrix, bonferroni, friedman, mann_whitney_u,
                       significance_matrix, wilcoxon_signed_rank)
from .annealer import AnnealConfig, MorphResult, jitter, morph, temperature
from .experiment import ExperimentPlan, FrameSequence, all_combos, run_experiment, run_sequence
from .graph import (Drawing, Graph, dual_barabasi_albert, force_layout, grid_graph, normalize,
                    random_layout, read_drawing, read_edgelist, shortest_paths)
from .metrics import (MetricId, angular_resolution, crossing_number, edge_length_deviation,
                      evaluate, incremental_update, make_state, stress)
from .render import render
from .shapes import TargetShape, generate, load_target
from .similarity import percent, sim_greedy, sim_mse, sim_procrustes

__version__ = "0.1.0"

SCHEMA_PATH = Path(__file__).with_name("data") / "morph_result.schema.json"
