"""Compiler toolchain for a unit-typed spiking neuron modeling language."""

__version__ = "0.1.0"
