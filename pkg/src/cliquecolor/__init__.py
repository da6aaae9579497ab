"""Deterministic constant-round Congested Clique (degree+1)-list coloring."""

from .clique import RoundLedger
from .core import (
    D1LCInstance,
    apply_colors,
    build_instance,
    greedy_color,
    neighbor_partition,
    trim_palettes,
    verify_coloring,
)
from .derand import CostOracle, DerandMode, derandomize_exact, derandomize_sample
from .driver import Config, RunReport, check_max_degree, color
from .generate import GenSpec, generate
from .kwise import HashFamily, Seed, independence_test, make_family

__all__ = [
    "Config",
    "CostOracle",
    "D1LCInstance",
    "DerandMode",
    "GenSpec",
    "HashFamily",
    "RoundLedger",
    "RunReport",
    "Seed",
    "apply_colors",
    "build_instance",
    "check_max_degree",
    "color",
    "derandomize_exact",
    "derandomize_sample",
    "generate",
    "greedy_color",
    "independence_test",
    "make_family",
    "neighbor_partition",
    "trim_palettes",
    "verify_coloring",
]
