"""Distributed power allocation by dual ascent over average consensus.

Each sensor keeps its own copy of the budget multiplier lambda0,
updates its power by the same closed form the centralized solver uses
(it only needs its own xi, sigma^2, h, zeta), learns the network mean
power through average consensus with its neighbors, and takes an
identical diminishing gradient step on its multiplier copy. Since every
sensor sees the same consensus output and applies the same
deterministic step rule, the multiplier copies track each other to
within consensus accuracy and the iteration reproduces the centralized
water filling without any coordinator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .consensus import consensus_average, metropolis_matrix
from .model import Scenario
from .solver_central import PowerAllocation, power_closed_form

# shared implementation with the centralized solver: the locality claim
# is that this function needs nothing beyond sensor-local parameters
local_power_update = power_closed_form

LAMBDA_MIN = 1e-16   # dual variable floor; the closed form needs sqrt(lambda0) > 0


class ConvergenceError(RuntimeError):
    """Outer loop exhausted its budget; carries the partial trace."""

    def __init__(self, msg: str, trace: "DualAscentTrace | None" = None):
        super().__init__(msg)
        self.trace = trace


def dual_update(lambda0_k: float, mean_power: float, m: int, pt: float, eps_k: float) -> float:
    """One gradient step on the budget multiplier, floored at LAMBDA_MIN.

    lambda0 rises while the network overspends (M * mean_power > Pt)
    and falls while it underspends; the floor keeps the closed-form
    power update defined.
    """
    if eps_k <= 0:
        raise ValueError("eps_k must be positive")
    return max(lambda0_k + eps_k * (m * mean_power - pt), LAMBDA_MIN)


@dataclass(frozen=True)
class DualAscentTrace:
    """Per-outer-iteration record of the distributed solve.

    lambda0[j] is the multiplier (replica mean) that produced powers[j];
    rel_step[j] = ||p[j] - p[j-1]|| / ||p[j-1]|| is nan on the first row.
    lambda0_spread tracks max-min across the per-sensor replicas, a
    diagnostic for how well consensus kept the copies in lockstep.
    """

    k: np.ndarray                # 1-based outer iteration index
    lambda0: np.ndarray
    powers: np.ndarray           # shape (iters, M)
    consensus_iters: np.ndarray
    rel_step: np.ndarray
    lambda0_spread: np.ndarray
    converged: bool

    @property
    def iterations(self) -> int:
        return int(self.k.size)

    @property
    def total_consensus_rounds(self) -> int:
        return int(np.sum(self.consensus_iters))


def solve_distributed(scenario: Scenario) -> tuple[PowerAllocation, DualAscentTrace]:
    """Run the dual-ascent protocol to convergence on the scenario topology.

    Stops when the relative power step drops to the solver's kappa.
    The returned allocation approaches the budget from above as the
    multiplier climbs, so its residual is bounded by the coarser
    distributed tolerance (1e-3 relative), not the centralized one.
    """
    cfg = scenario.solver
    graph = scenario.topology
    m = scenario.M
    n, u, pt = scenario.N, scenario.U, scenario.Pt
    w = metropolis_matrix(graph)

    lam = np.full(m, cfg.lambda0_init)
    p_prev: np.ndarray | None = None

    ks, lams, prows, crows, rels, spreads = [], [], [], [], [], []
    converged = False
    for k in range(cfg.outer_max_iter):
        p = np.array([local_power_update(float(lam[i]), s, n, u)
                      for i, s in enumerate(scenario.sensors)])
        cres = consensus_average(
            graph, p, tol=cfg.consensus_tol, max_iter=cfg.consensus_max_iter,
            mode=cfg.consensus_mode, window=cfg.consensus_window, weights=w,
        )
        # every sensor applies the same rule to its own multiplier copy
        eps = lam.copy() if k == 0 else lam / k
        lam_used = float(np.mean(lam))
        lam = np.maximum(lam + eps * (m * cres.values - pt), LAMBDA_MIN)

        if p_prev is None:
            rel = float("nan")
        else:
            denom = float(np.linalg.norm(p_prev))
            # all-zero previous iterate: criterion undefined, keep going
            rel = float(np.linalg.norm(p - p_prev) / denom) if denom > 0 else float("nan")

        ks.append(k + 1)
        lams.append(lam_used)
        prows.append(p)
        crows.append(cres.iterations)
        rels.append(rel)
        spreads.append(float(np.max(lam) - np.min(lam)))

        if np.isfinite(rel) and rel <= cfg.kappa:
            converged = True
            break
        p_prev = p

    trace = DualAscentTrace(
        k=np.array(ks, dtype=int),
        lambda0=np.array(lams),
        powers=np.array(prows),
        consensus_iters=np.array(crows, dtype=int),
        rel_step=np.array(rels),
        lambda0_spread=np.array(spreads),
        converged=converged,
    )
    if not converged:
        raise ConvergenceError(
            f"no convergence to kappa={cfg.kappa} within {cfg.outer_max_iter} outer iterations",
            trace=trace,
        )
    p_final = trace.powers[-1]
    alloc = PowerAllocation(p=p_final, lambda0=float(trace.lambda0[-1]))
    total = alloc.total()
    if abs(total - pt) > 1e-3 * pt:
        raise ConvergenceError(
            f"converged iterates missed the budget: |sum(p)-Pt|={abs(total - pt)}",
            trace=trace,
        )
    return alloc, trace


def write_trace_csv(trace: DualAscentTrace, path) -> None:
    """Columns: k, lambda0, p_1..p_M, consensus_iters, rel_step."""
    m = trace.powers.shape[1]
    header = ["k", "lambda0"] + [f"p_{i + 1}" for i in range(m)] + ["consensus_iters", "rel_step"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for j in range(trace.iterations):
            row = [str(int(trace.k[j])), repr(float(trace.lambda0[j]))]
            row += [repr(float(v)) for v in trace.powers[j]]
            row += [str(int(trace.consensus_iters[j])), repr(float(trace.rel_step[j]))]
            fh.write(",".join(row) + "\n")
