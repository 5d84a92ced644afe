"""
Quantum geometric tensor of a Gaussian detector state
=====================================================

Compare the numeric tensor with the closed-form label metric and
look at the Berry curvature on the (q, p) chart.
"""

import numpy as np

from dgk import ParamChart, SpatialDetectorParams, berry_connection, qgt_numeric, spatial_metric_closed

# a two-dimensional state with a phase-curvature matrix B
state = SpatialDetectorParams(
    q=[0.3, -0.2],
    A=[[1.5, 0.2], [0.2, 0.8]],
    B=[[0.1, 0.0], [0.0, -0.3]],
    p=[0.4, 0.1],
)

# metric on the label chart: numeric vs A + 4 B A^-1 B
res = qgt_numeric(ParamChart.labels(state))
print("numeric label metric\n", res.metric)
print("closed form\n", spatial_metric_closed(state))
print("max difference", np.abs(res.metric - spatial_metric_closed(state)).max())

# the connection on labels is the mean momentum
print("Berry connection", berry_connection(ParamChart.labels(state)), "p =", state.p)

# labels and momenta are canonically conjugate: F_{q_i p_j} = delta_ij
F = qgt_numeric(ParamChart(["q0", "q1", "p0", "p1"], state)).berry
print("Berry curvature on (q, p)\n", np.round(F, 8))
