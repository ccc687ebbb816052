"""Numerical companion to the thermodynamic limit of Coulomb systems.

Geometry of regular domains, rigid motions and simplex tilings, classical
electrostatic inequalities, small quantum checks, toy energy functionals with
known limits, and the limit engine that runs them at desk scale.
"""
from .geometry import Ball, Box, Difference, EMPTY, Intersection, Polytope, Simplex, Union
from .models import AdversarialFunctional, ConstantDensity, ScreenedCrystalModel, ZeroFunctional, make_model
from .motion import RigidMotion, act_domain, reference_simplex, sample_haar

__version__ = "0.1.0"
