"""Steady-state power-system analysis."""

from .admittance import branch_admittance, build_system_matrices, bus_injections
from .caseio import load_case, parse_case, save_case, serialize_case
from .model import Branch, Bus, BusType, Case, Generator, GenCost, StorageUnit, validate

__version__ = "0.1.0"
