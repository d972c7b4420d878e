"""Maxwell-Bloch simulation of photon retention and two-photon readout in a three-level ionic medium."""

__version__ = "0.1.0"
