"""splatar: a desk-scale pose-deformable Gaussian-splat avatar engine.

The package optimizes a personalized 3D avatar (isotropic Gaussians pinned to
a skinned template mesh) from one clean reference frame plus a corpus of
imperfect generated frames.  Everything runs on the CPU with exact analytic
gradients; a synthetic ground-truth generator doubles as the test oracle.
"""

__version__ = "0.1.0"
