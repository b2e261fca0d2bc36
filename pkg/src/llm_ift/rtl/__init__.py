"""Verilog front end: parsing, dependency extraction and hierarchy resolution."""
from .ast import ModuleDecl, Port, Net, Instance, Connection, expr_signals
from .deps import DepEdge, assignments, extract_dependencies
from .parser import Diagnostic, parse_source
from .printer import format_expr, format_module
from .unit import AmbiguousTop, SourceUnit, build_unit, load_unit, require_top, resolve_hierarchy

__all__ = [
    "AmbiguousTop", "Connection", "DepEdge", "Diagnostic", "Instance", "ModuleDecl", "Net",
    "Port", "SourceUnit", "assignments", "build_unit", "expr_signals", "extract_dependencies",
    "format_expr", "format_module", "load_unit", "parse_source", "require_top",
    "resolve_hierarchy",
]
