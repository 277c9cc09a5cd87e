"""discrete-tomo: reconstruction of finite lattice sets from discrete X-rays.

The package is organised by problem family:

* ``core`` – directions, weighted lattice sets, X-rays, grids, the X-ray difference
* ``optim`` – the exact integer flow engine every transportation-shaped problem uses
* ``recon2`` / ``reconm`` – reconstruction for two and for three or more directions
* ``switching`` / ``stability`` – switching components, uniqueness and stability checks
* ``superres`` – double resolution and noisy superresolution with block constraints
* ``tracking`` – tomographic particle tracking
* ``grains`` – generalized balanced power diagrams
* ``pte`` – Prouhet–Tarry–Escott solutions
* ``io`` / ``cli`` – file formats and the ``tomo`` command
"""

__version__ = "0.1.0"
