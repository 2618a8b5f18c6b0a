"""safeshield: provably safe policy optimisation from analytic gradients.

Trains stochastic control policies with first-order gradients through a
differentiable simulation while provably constraining every executed
action to a safe action set via differentiable boundary-projection and
ray-mask safeguard layers.
"""

__version__ = "0.1.0"
