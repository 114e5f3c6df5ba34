"""Query-point 3D object interaction toolkit: given one RGB image and 2D
query points, predict movability, rigidity, articulation (with rotation
axis), action, part mask, affordance heatmap and per-image depth, and render
the implied 3D motion."""

__version__ = "0.1.0"
