"""Growth processes and down-up Markov chains on multifurcating labelled trees.

The package is organised around the pair of parameters (alpha, gamma) with
0 <= gamma <= alpha <= 1:

- ``urns``        exchangeable-partition primitives (Polya urns, ordered and
                  unordered Chinese restaurants, decrement matrix)
- ``trees``       non-planar rooted multifurcating leaf-labelled trees and
                  their elementary operations
- ``semiplanar``  trees with per-branch-point subtree orders, the local
                  search, and internal-structure extraction
- ``growth``      the growth processes (plain, semi-planar, internal,
                  branch-point, decorated, weighted start)
- ``chains``      the down-up chains on every state space
- ``exact``       exhaustive small-n enumeration and exact rational kernels
- ``verify``      mechanical checks of stationarity, lumpability,
                  intertwining and kernel equalities
- ``mc`` / ``wf`` Monte Carlo harness and the Wright-Fisher scaling
                  experiment
"""

from downup.params import Params

__all__ = ["Params"]
__version__ = "0.1.0"
