"""Hybrid classical/quantum correlation toolkit.

Matrices are numpy arrays. Structured results (factorizations, reports,
protocols) are plain dicts in the same JSON layout the command-line tool
writes.
"""

import json

import numpy as np

from ._core import (
    SCHEMA_VERSION,
    Error,
    block_diagonal_mix,
    demo_names,
    edm,
    edm_correlation,
    hybrid_classical_cost,
    inner_product_squared_matrix,
    is_psd,
    kprank_lower_bound,
    l1_distance,
    is_majorized_by,
    nmf,
    normalize_to_correlation,
    numerical_rank,
    prank_lower_bound,
    qc_hybrid_cost_upper,
    sample_distribution,
    schmidt_vector,
    t_bounds,
    tensor_power,
    tradeoff_check,
)
from . import _core

__all__ = [
    "SCHEMA_VERSION",
    "Error",
    "block_diagonal_mix",
    "bounds_report",
    "build_hybrid",
    "certify",
    "chi_square_test",
    "demo",
    "demo_names",
    "edm",
    "edm_correlation",
    "hybrid_classical_cost",
    "hybrid_distribution",
    "inner_product_squared_matrix",
    "is_psd",
    "k_partition",
    "kblock_factorize",
    "kprank_lower_bound",
    "l1_distance",
    "is_majorized_by",
    "nmf",
    "normalize_to_correlation",
    "numerical_rank",
    "prank_lower_bound",
    "psd_factorize",
    "qc_hybrid_cost_upper",
    "run_cli",
    "sample_distribution",
    "schmidt_vector",
    "simulate_hybrid",
    "t_bounds",
    "tensor_power",
    "tradeoff_check",
]


def psd_factorize(p, r, seed=0, starts=20, max_iters=5000, residual_tol=1e-8, eps=0.0):
    return json.loads(_core.psd_factorize_json(np.asarray(p, float), r, seed, starts, max_iters, residual_tol, eps))


def kblock_factorize(p, k, r, seed=0, starts=20, max_iters=5000, residual_tol=1e-8, eps=0.0):
    return json.loads(_core.kblock_factorize_json(np.asarray(p, float), k, r, seed, starts, max_iters, residual_tol, eps))


def certify(p, factorization, residual_tol=1e-8, eps=0.0):
    return json.loads(_core.certify_json(np.asarray(p, float), json.dumps(factorization), residual_tol, eps))


def bounds_report(p, ks=(2,), seed=0, starts=20):
    return json.loads(_core.bounds_report_json(np.asarray(p, float), list(ks), seed, starts))


def k_partition(p, k, exact=True):
    return json.loads(_core.k_partition_json(np.asarray(p, float), k, exact))


def build_hybrid(factorization, mode="cq", s=1):
    return json.loads(_core.build_hybrid_json(json.dumps(factorization), mode, s))


def hybrid_distribution(protocol):
    return _core.hybrid_distribution(json.dumps(protocol))


def simulate_hybrid(protocol, seed, n):
    samples, ledger = _core.simulate_hybrid(json.dumps(protocol), seed, n)
    return samples.astype(np.int64), json.loads(ledger)


def chi_square_test(dist, samples, alpha=0.01):
    return _core.chi_square_test(np.asarray(dist, float), np.asarray(samples, np.int32), alpha)


def demo(name, seed=0):
    return json.loads(_core.demo_json(name, seed))


def run_cli(*args):
    """Runs the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _core.cli_run([str(a) for a in args])
