"""Runners for the acceptance criteria.

Each ``run_cN(cfg, limit=None)`` evaluates one criterion with the settings in
configs/acceptance.json and returns a Run. ``limit`` truncates the item list
(used by the determinism check, which recomputes prefixes in a fresh
interpreter and compares bytes).
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from assistance.bounds import OptimizerConfig, build_a_blocks, eoa_lower_bound, eoa_upper_bound
from assistance.channel import (
    FilterOp,
    apply_filter,
    extract_channel,
    final_chain_check,
    frame_residual,
    i_measure,
    i_measure_direct,
    normal_form,
    normalize_filter,
    reconstruct,
)
from assistance.measures import concurrence_of_assistance_2q, i_concurrence, linear_entropy
from assistance.monogamy import campaign_state, monogamy_check, run_campaign
from assistance.oracle import OracleConfig, eoa_oracle, tangle_oracle
from assistance.qstate import ghz, haar_random_pure, partial_trace, random_mixed, sub_seed

CONFIG_PATH = Path(__file__).resolve().parent.parent / "configs" / "acceptance.json"

# filled by the acceptance tests, printed in the terminal summary
REPORT: dict[str, tuple[bool, str]] = {}


def load_config() -> dict:
    return json.loads(CONFIG_PATH.read_text())


@dataclass
class Run:
    values: np.ndarray
    elapsed: float
    extra: dict = field(default_factory=dict)

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.values, dtype=float).tobytes()).hexdigest()


def _n(count, limit):
    return count if limit is None else min(count, limit)


def _opt(cfg) -> OptimizerConfig:
    return OptimizerConfig.from_dict({**cfg.get("optimizer", {}), "seed": cfg["seed"]})


def _ora(cfg) -> OracleConfig:
    return OracleConfig.from_dict({**cfg.get("oracle", {}), "seed": cfg["seed"]})


def run_c1(cfg, limit=None) -> Run:
    t = time.perf_counter()
    opt, envs, rows = _opt(cfg), cfg["env_dims"], []
    for i in range(_n(cfg["count"], limit)):
        psi = haar_random_pure((2, 2, envs[i % len(envs)]), sub_seed(cfg["seed"], i))
        rho = partial_trace(psi, [0, 1])
        rows.append((eoa_lower_bound(build_a_blocks(rho), opt).lower, concurrence_of_assistance_2q(rho)))
    return Run(np.array(rows), time.perf_counter() - t)


def run_c2(cfg, limit=None) -> Run:
    t = time.perf_counter()
    opt, ora, rows = _opt(cfg), _ora(cfg), []
    for i in range(_n(cfg["count"], limit)):
        rho = partial_trace(haar_random_pure(cfg["dims"], sub_seed(cfg["seed"], i)), [0, 1])
        lower = eoa_lower_bound(build_a_blocks(rho), opt).lower
        ea = eoa_oracle(rho, ora).value
        rows.append((lower, ea, eoa_upper_bound(rho)[0]))
    return Run(np.array(rows), time.perf_counter() - t)


def run_c3(cfg, limit=None) -> Run:
    t = time.perf_counter()
    opt, rows = _opt(cfg), []
    for i in range(_n(cfg["count"], limit)):
        rng = np.random.default_rng(sub_seed(cfg["seed"], i))
        dims = tuple(int(d) for d in rng.integers(2, cfg["max_dim"] + 1, size=2))
        psi = haar_random_pure(dims, rng)
        rho = psi.to_mixed()
        rows.append((eoa_lower_bound(build_a_blocks(rho), opt).lower, eoa_upper_bound(rho)[1], i_concurrence(psi)))
    return Run(np.array(rows), time.perf_counter() - t)


def run_c4(cfg, limit=None) -> Run:
    t = time.perf_counter()
    ora, rows = _ora(cfg), []
    for i in range(_n(cfg["count"], limit)):
        rho = random_mixed((2, 2), 4, sub_seed(cfg["seed"], i))
        rows.append((i_measure(rho), tangle_oracle(rho, ora).value, i_measure_direct(rho, ora)))
    return Run(np.array(rows), time.perf_counter() - t)


def run_c5(cfg, limit=None) -> Run:
    t = time.perf_counter()
    errs = []
    for i in range(_n(cfg["count"], limit)):
        rho = random_mixed((2, 2), 4, sub_seed(cfg["seed"], i))
        errs.append(np.max(np.abs(reconstruct(extract_channel(rho)) - rho.data)))
    return Run(np.array(errs)[:, None], time.perf_counter() - t)


def random_filter(rng, min_abs_det) -> FilterOp:
    while True:
        B = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        if abs(np.linalg.det(B)) >= min_abs_det:
            return FilterOp(B)


def run_c6(cfg, limit=None) -> Run:
    t = time.perf_counter()
    rows = []
    for i in range(_n(cfg["count"], limit)):
        rng = np.random.default_rng(sub_seed(cfg["seed"], i))
        rho = random_mixed((2, 2), 4, rng)
        f = random_filter(rng, cfg["min_abs_det"])
        out = apply_filter(rho, f)
        L0, L1 = extract_channel(rho).L, extract_channel(out).L
        ratio = linear_entropy(partial_trace(out, [1])) / linear_entropy(partial_trace(rho, [1]))
        rows.append((frame_residual(L0, L1), ratio, f.scale(rho), np.linalg.norm(L1 - L0)))
    return Run(np.array(rows), time.perf_counter() - t)


def run_c7(cfg, limit=None) -> Run:
    t = time.perf_counter()
    ora, seed = _ora(cfg), cfg["seed"]
    reports = []
    reports += run_campaign("pure", 3, _n(cfg["pure3"], limit), seed, cfg=ora)
    reports += run_campaign("pure", 4, _n(cfg["pure4"], limit), seed, cfg=ora)
    reports += run_campaign("mixed", 3, _n(cfg["mixed3"], limit), seed, rank=cfg["mixed_rank"], cfg=ora)
    rows = [(r.n, r.rank, r.margin, r.bipartite, float(r.quality), float(r.violation), r.escalation) for r in reports]
    return Run(np.array(rows), time.perf_counter() - t, {"reports": reports})


def _thetas(count):
    return np.arange(1, count + 1) * (np.pi / 2) / (count + 1)


def run_c8(cfg, limit=None) -> Run:
    t = time.perf_counter()
    ora, rows = _ora(cfg), []
    for n in cfg["n_values"]:
        prod = campaign_state("product", n, 0, cfg["seed"])
        rows.append((n, -1.0, monogamy_check(prod, 0, ora).margin))
        for theta in list(_thetas(cfg["theta_count"])) + [np.pi / 4]:
            rows.append((n, theta, monogamy_check(ghz(n, theta), 0, ora).margin))
    return Run(np.array(rows), time.perf_counter() - t)


def run_c9(cfg, limit=None) -> Run:
    t = time.perf_counter()
    ora, rows = _ora(cfg), []
    for i in range(_n(cfg["count"], limit)):
        rho = random_mixed((2, 2), 1 + i % 4, sub_seed(cfg["seed"], i))
        _, filtered = normalize_filter(rho)
        nf = normal_form(filtered)
        chain = final_chain_check(filtered, ora)
        rows.append((nf.positivity_margin, *chain.margins, nf.residual))
    return Run(np.array(rows), time.perf_counter() - t)


RUNNERS = {
    "c1_two_qubit_exactness": run_c1,
    "c2_sandwich": run_c2,
    "c3_pure_degeneracy": run_c3,
    "c4_proof_core": run_c4,
    "c5_round_trip": run_c5,
    "c6_filter_covariance": run_c6,
    "c7_monogamy": run_c7,
    "c8_edge_cases": run_c8,
    "c9_normal_form": run_c9,
}


def prefix_digests(limit: int) -> dict[str, str]:
    cfg = load_config()
    return {name: fn(cfg[name], limit).digest() for name, fn in RUNNERS.items()}


if __name__ == "__main__":
    import sys

    print(json.dumps(prefix_digests(int(sys.argv[1]))))
