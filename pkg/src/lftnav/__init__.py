"""Robust bearing-only navigation in the planar Earth-Moon CR3BP.

The package builds an exact linear-fractional (LFT) model of the planar
circular restricted three-body dynamics and of a bearing sensor with
range-dependent noise, synthesizes a fixed observer gain against that model
with bounded-real-lemma LMIs, and simulates the closed loop.
"""

__version__ = "0.1.0"
