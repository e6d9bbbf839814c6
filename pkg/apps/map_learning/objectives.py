"""
Maximum-likelihood objectives for monotone triangular maps with a standard normal reference.
"""

import numpy as np

from apps.core.exceptions import TrainingNumericsError

LOG_2PI = float(np.log(2.0 * np.pi))


def _first_nonfinite(values):
    bad = np.flatnonzero(~np.isfinite(values))
    return int(bad[0]) if bad.size else None


def negative_log_likelihood(transport_map, samples):
    """(1/N) sum_i [ 1/2 ||S(Z_i)||^2 - log det J_S(Z_i) ] + (d/2) log 2 pi."""
    samples = np.asarray(samples, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        reference = transport_map.forward(samples)
        per_sample = 0.5 * np.sum(reference**2, axis=-1) - transport_map.log_det_jacobian(samples)
    index = _first_nonfinite(per_sample)
    if index is not None:
        raise TrainingNumericsError(f"Nonfinite likelihood term at sample {index}", sample_index=index)
    return float(np.mean(per_sample) + 0.5 * transport_map.dim * LOG_2PI)


class ComponentObjective:
    """
    Component-wise term (1/N) sum_i [ 1/2 S_k(Z_i)^2 - log dS_k/dy_k(Z_i) ] and its gradient
    in the coefficients. Basis evaluations do not depend on the coefficients and are computed once.
    """

    def __init__(self, template, samples):
        samples = np.asarray(samples, dtype=float)
        k = template.index
        points = samples[:, : k + 1]
        self.template = template
        self.rectifier = template.rectifier
        self.anchor_design = template.design(template.anchor(points))
        nodes, self.half_weights = template.quadrature(points)
        self.node_design = template.design(nodes, k)
        self.slope_design = template.design(points, k)
        self.n_samples = samples.shape[0]

    def values(self, coefficients):
        """Per-sample (S_k, slope field d_k f) at the given coefficients."""
        node_field = self.node_design @ coefficients
        integral = np.sum(self.half_weights * self.rectifier.value(node_field), axis=-1)
        return self.anchor_design @ coefficients + integral, node_field, self.slope_design @ coefficients

    def __call__(self, coefficients):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            values, node_field, slope_field = self.values(coefficients)
            per_sample = 0.5 * values**2 - self.rectifier.log_value(slope_field)
        index = _first_nonfinite(per_sample)
        if index is not None:
            raise TrainingNumericsError(
                f"Nonfinite objective for component {self.template.index} at sample {index}",
                sample_index=index,
            )
        value_gradient = self.anchor_design + np.einsum(
            "nq,nqt->nt", self.half_weights * self.rectifier.derivative(node_field), self.node_design
        )
        gradient = np.mean(
            values[:, None] * value_gradient
            - self.rectifier.log_derivative(slope_field)[:, None] * self.slope_design,
            axis=0,
        )
        return float(np.mean(per_sample)), gradient
