"""Directed triad census, orbits, coloured triads and randomization nulls."""

from .census import ColoredTriadKey, DirectedGraph, TriadCensus, colored_census, triad_census
from .nullmodel import NullSample, randomize_degree_preserving
from .significance import (
    TriadReport,
    aggregate_colored,
    aggregate_reports,
    colored_zscores,
    motif_reports,
    motif_zscores,
)
from .triads import MILO_IDS, N_ORBITS, TRIAD_CLASSES, TriadClass, classify_triad
