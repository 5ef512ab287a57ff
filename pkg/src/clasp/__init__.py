"""Belief over object shapes from depth views and robot contact.

The package keeps a particle set of latent shape vectors per object,
decodes them through a differentiable box decoder, and projects them
onto contact / free-space constraints by gradient descent whenever the
robot observes something new.
"""

__version__ = "0.1.0"
