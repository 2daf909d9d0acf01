"""Domain-level error types.

ValueError is reserved for malformed input (wrong shapes, unnormalized
states, bad JSON); DomainError covers inputs that are well-formed but
physically outside what distillation can handle.
"""


class DomainError(Exception):
    """A physically meaningful failure, distinct from malformed input."""


class SingleKrausChannelError(DomainError):
    """The channel is unitary (one effective Kraus operator); nothing to distill."""


class EntanglementDestroyedError(DomainError):
    """Noise severity p >= 1 leaves no shared entanglement to work with."""


class NonDistillableError(DomainError):
    """Fidelity weight at or below 1/2; recurrence protocols cannot improve it."""


class DegenerateProtocolError(DomainError):
    """A kept measurement branch has vanishing probability."""
