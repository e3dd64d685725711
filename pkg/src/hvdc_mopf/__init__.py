"""Two-stage multi-objective OPF for hybrid AC/DC grids with VSC-HVDC."""

__version__ = "0.1.0"
