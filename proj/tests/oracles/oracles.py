"""Independent reference values for the unit tests (scipy quadrature and ODE solves).

Run: python3 tests/oracles/oracles.py
"""
import numpy as np
from scipy.integrate import quad, solve_ivp

TIGHT = dict(rtol=1e-13, atol=1e-14, method="DOP853")


def main():
    out = {}
    # Galerkin entry 2 * int sin^3(pi x) dx.
    out["galerkin_sin_11"] = 2 * quad(lambda x: np.sin(np.pi * x) ** 3, 0, 1, epsabs=1e-15)[0]
    # Wave block rotation a' = w b, b' = -w a, w = 2, t = pi/4.
    s = solve_ivp(lambda t, y: [2 * y[1], -2 * y[0]], (0, np.pi / 4), [1.0, 0.0], **TIGHT)
    out["wave_rotation_a"], out["wave_rotation_b"] = s.y[:, -1]
    # Heat mode decay at t = 0.1.
    out["heat_decay"] = np.exp(-np.pi**2 * 0.1)
    # Scalar toy psi' = (u - 1) psi, u = 0.5.
    s = solve_ivp(lambda t, y: [(0.5 - 1) * y[0]], (0, 1), [1.0], **TIGHT)
    out["toy_state_T"] = s.y[0, -1]
    # Linearized toy z' = -z + psi_hat, psi_hat = e^{-t}.
    s = solve_ivp(lambda t, y: [-y[0] + np.exp(-t)], (0, 1), [0.0], **TIGHT)
    out["toy_linearized_T"] = s.y[0, -1]
    # Costate -p' + p = e^{-t}, p(1) = 0, integrated backward.
    s = solve_ivp(lambda t, y: [y[0] - np.exp(-t)], (1, 0), [0.0], **TIGHT)
    out["toy_costate_0"] = s.y[0, -1]
    # Cost of psi' = -psi + 1, psi(0) = 0.
    psi = lambda t: 1 - np.exp(-t)
    out["toy_cost"] = 0.5 * quad(lambda t: psi(t) ** 2, 0, 1, epsabs=1e-15)[0] + 0.5 * psi(1) ** 2
    # Q(z, v) for the toy: z = t e^{-t}, p from the costate example, v = 1, B2 = 1,
    # Q = 1, Q_T = 0:  int z^2 + 2 v p z dt.
    p = lambda t: (np.exp(-t) - np.exp(t - 2)) / 2
    z = lambda t: t * np.exp(-t)
    out["toy_quad_form"] = quad(lambda t: z(t) ** 2 + 2 * p(t) * z(t), 0, 1, epsabs=1e-15)[0]
    for k, v in out.items():
        print(f"{k} = {v:.15g}")


if __name__ == "__main__":
    main()
