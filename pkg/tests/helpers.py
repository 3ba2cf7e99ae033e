"""Shared builders and independent oracles for the test suite."""

import math

import numpy as np

from interfmap.loadmodel import NetworkScenario, random_scenario


def eig_radius(X):
    """Spectral radius from a dense eigenvalue decomposition."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return float(np.max(np.abs(np.linalg.eigvals(X))))


def random_nonneg_matrix(rng, n, target_rho, density=0.7):
    """Nonnegative matrix with an irreducible-ish pattern scaled to ``target_rho``."""
    X = rng.uniform(0.0, 1.0, size=(n, n)) * (rng.random((n, n)) < density)
    # A cycle keeps the matrix irreducible so the radius is positive.
    X[np.arange(n), (np.arange(n) + 1) % n] += rng.uniform(0.1, 1.0, size=n)
    return X * (target_rho / eig_radius(X))


def coupling_oracle(s: NetworkScenario):
    """Coupling matrix by explicit loops over the defining sum."""
    M = np.zeros((s.num_bs, s.num_bs))
    for i in range(s.num_bs):
        for k in range(s.num_bs):
            if i == k:
                continue
            for j in range(s.num_users):
                if s.assignment[j] == i:
                    M[i, k] += math.log(2) * s.demands[j] * s.gains[k, j] / (
                        s.resource_blocks * s.bandwidth * s.gains[i, j])
    return M


def rate_oracle(s, i, j, x, p):
    interference = sum(x[k] * p[k] * s.gains[k, j] for k in range(s.num_bs) if k != i)
    return s.bandwidth * math.log2(1 + p[i] * s.gains[i, j] / (interference + s.noise))


def load_oracle(s, x, p=None):
    p = s.power if p is None else p
    out = np.zeros(s.num_bs)
    for j in range(s.num_users):
        i = s.assignment[j]
        out[i] += s.demands[j] / (s.resource_blocks * rate_oracle(s, i, j, x, p))
    return out


def scaled_scenario(seed, num_bs, target_rho, users_per_bs=3, **kw):
    """Random scenario with demands scaled so the coupling radius is ``target_rho``."""
    s = random_scenario(num_bs, users_per_bs=users_per_bs, seed=seed, **kw)
    rng = np.random.default_rng(seed + 10_000)
    s = s.replace(power=rng.uniform(0.2, 2.0, size=num_bs))
    rho = eig_radius(coupling_oracle(s))
    return s.replace(demands=s.demands * (target_rho / rho))
