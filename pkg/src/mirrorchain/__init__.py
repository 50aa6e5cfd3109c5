"""Mirror-inversion transport on qudit and continuous-variable chains.

Submodules: ``qudit`` (gates and Pauli words), ``tracker`` (Heisenberg
conjugation), ``chain`` (dense state vectors), ``cv`` (Gaussian phase space),
``cqed`` (circuit-QED master equations), ``grape`` (pulse optimization) and
``cli``.
"""

__version__ = "0.1.0"
