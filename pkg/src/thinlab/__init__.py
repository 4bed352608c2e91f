"""thinlab: a numerical laboratory for mixed Dirichlet/oblique boundary
value problems on thin crescent-shaped plane domains.

The package builds crescent domains pinched to zero width at both ends,
solves second-order elliptic equations on them with Dirichlet data on the
upper arc and an oblique derivative condition on the flat bottom, and
measures how Holder norms, barrier margins and corrector constants behave
as the crescent collapses.
"""

from .errors import ThinlabError

__version__ = "0.1.0"

__all__ = ["ThinlabError", "__version__"]
