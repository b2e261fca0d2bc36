"""Information flow tracking for Verilog RTL with a pluggable language-model backend."""

__version__ = "0.1.0"
