"""Acceptance criteria, one test each, at their stated tolerances and budgets.

Every test prints (and the session summary repeats) a single line
``AC<k> PASS|FAIL: <criterion> | <measured numbers>``.
"""
import filecmp
import json
import time
import traceback

import numpy as np

from _oracles import grid_search_2d
from combeo.baselines import DEConfig, PSOConfig, run_de, run_pso
from combeo.benchmarks import (
    ALL_IDS,
    BASIC_IDS,
    BenchmarkInstance,
    eval_basic,
    known_optimum,
    make_instance,
    rosenbrock,
    schwefel_1_2,
)
from combeo.gain import GainState, apply_corrections, compute_gain, gain_numerator, innovation_covariance
from combeo.harness.cli import main
from combeo.harness.config import parse_config_dict
from combeo.harness.io import read_trace
from combeo.harness.runner import run_experiment
from combeo.optimizers import DRIVERS, OptimizerConfig, SplitProblem, run_pseudocode2, run_split_greedy
from combeo.perturbation import SelectionPolicy, sample_derangement, sample_permutation, select


def _guarded(fn):
    try:
        return fn()
    except Exception:
        return False, "error: " + traceback.format_exc(limit=3).strip().splitlines()[-1]


# -- AC1 -----------------------------------------------------------------------


def _ac1():
    t0 = time.perf_counter()
    checks: dict[str, bool] = {}

    # collapsed ensemble with equal costs: zero numerator, zero gain, zero corrections
    X = np.full((4, 9), 1.5)
    F = np.full((5, 9), -2.0)
    state = GainState.bootstrap(X.mean(axis=1), F.mean(axis=1), 1.0)
    num = gain_numerator(X, X.mean(axis=1), F, F.mean(axis=1), state, 1.0 + 1e-7)
    G = compute_gain(num, innovation_covariance(F, F.mean(axis=1), 0.8, 1e-4 * np.eye(5)))
    checks["zero update at convergence"] = (not num.any()) and (not G.any()) and not apply_corrections(G, F.T, 1.0).any()

    # best-so-far never worsens on any seeded run, and selection is per-particle monotone
    mono = True
    for seed in range(3):
        for fid in ("B1", "B6", "F3"):
            obj_args = (fid, 4) if fid.startswith("B") else (fid, 4, 2)
            for name, drv in DRIVERS.items():
                rec = drv(make_instance(*obj_args, seed=seed).objective(), OptimizerConfig(N=16, M=40, seed=seed))
                mono &= bool(np.all(np.diff(rec.best_cost) <= 0))
            for rec in (run_de(make_instance(*obj_args, seed=seed).objective(), DEConfig(N=16, it_max=40, seed=seed)),
                        run_pso(make_instance(*obj_args, seed=seed).objective(), PSOConfig(N=16, it_max=40, seed=seed))):
                mono &= bool(np.all(np.diff(rec.best_cost) <= 0))
        rng = np.random.default_rng(seed)
        pc, cc = rng.normal(size=50), rng.normal(size=50)
        _, after, _ = select(rng.normal(size=(50, 3)), rng.normal(size=(50, 3)), pc, cc, SelectionPolicy())
        mono &= bool(np.all(after <= pc))
    checks["selection monotonicity"] = mono

    # permutations are bijections, derangements have no fixed points
    perm_ok = True
    for seed in range(300):
        rng = np.random.default_rng(seed)
        N = 2 + seed % 40
        p, d = sample_permutation(N, rng), sample_derangement(N, rng)
        perm_ok &= bool(np.array_equal(np.sort(p), np.arange(N)) and np.array_equal(np.sort(d), np.arange(N)))
        perm_ok &= not np.any(d == np.arange(N))
    checks["bijections / derangements"] = perm_ok

    # covariance blend endpoints
    rng = np.random.default_rng(0)
    F = rng.normal(size=(3, 8))
    gg = np.diag([0.2, 0.5, 0.9])
    low = innovation_covariance(F, F.mean(axis=1), 1e-12, gg)
    const = np.tile(rng.normal(size=(3, 1)), (1, 8))
    mid = innovation_covariance(const, const.mean(axis=1), 0.8, gg)
    checks["covariance endpoints"] = bool(np.abs(low - gg).max() <= 1e-10 and np.abs(mid - (1 - 0.8) * gg).max() <= 1e-10)

    # benchmark identities
    zero_ok = True
    for fid in ALL_IDS:
        if fid == "F7":
            continue
        inst = make_instance(fid, 20, 5, seed=1, shift=True)
        x_opt, _ = known_optimum(inst)
        zero_ok &= abs(float(inst(x_opt))) <= 1e-12
    Xp = rng.uniform(-5, 5, (30, 7))
    rot_ok = all(np.array_equal(eval_basic(r, Xp, np.eye(7)), eval_basic(p, Xp)) for r, p in
                 (("B3", "B2"), ("B7", "B6"), ("B9", "B8")))
    checks["F_k(o) = 0"] = zero_ok
    checks["rotation identity"] = rot_ok
    checks["Schwefel(1,2,3) = 46"] = float(schwefel_1_2([1.0, 2.0, 3.0])) == 46.0
    checks["Rosenbrock(1) = 0"] = float(rosenbrock(np.ones(10))) == 0.0

    elapsed = time.perf_counter() - t0
    failed = [k for k, v in checks.items() if not v]
    passed = not failed and elapsed < 10.0
    detail = f"{len(checks) - len(failed)}/{len(checks)} properties hold in {elapsed:.2f} s (limit 10 s)"
    if failed:
        detail += "; failing: " + ", ".join(failed)
    return passed, detail


def test_ac1_property_suite(verdict):
    verdict(1, "property suite", *_guarded(_ac1))


# -- AC2 -----------------------------------------------------------------------

AC2_FUNCS = {"B6": 0.01, "F3": 0.05}  # coarse grid step per function
# pc2 uses acceptance 0.5 in two dimensions: at 0.1 most candidates are exact clones
AC2_EXTRA = {"pc1": {}, "pc2": {"acceptance_probability": 0.5}, "pc3": {}}


def _ac2():
    rows, all_ok, slowest = [], True, 0.0
    oracles = {}
    for fid, coarse in AC2_FUNCS.items():
        for seed in range(5):
            inst = make_instance(fid, 2, seed=seed)
            x_star, _ = known_optimum(inst)
            x_g, f_g = grid_search_2d(inst, inst.lower, inst.upper, coarse_step=coarse, final_step=1e-3)
            # the oracle must land on the known optimum, within one final grid step
            all_ok &= bool(np.abs(x_g - x_star).max() <= 1e-3)
            oracles[fid, seed] = f_g
    for name, extra in AC2_EXTRA.items():
        for fid in AC2_FUNCS:
            hits = 0
            for seed in range(5):
                inst = make_instance(fid, 2, seed=seed)
                cfg = OptimizerConfig(N=50, M=1000, seed=seed, target_error=1e-4, error_metric="f", **extra)
                t = time.perf_counter()
                rec = DRIVERS[name](inst.objective(), cfg)
                dt = time.perf_counter() - t
                slowest = max(slowest, dt)
                ok = rec.final_best_cost <= oracles[fid, seed] + 1e-4 and rec.f_gap[-1] <= 1e-4 and dt < 10.0
                hits += ok
            rows.append(f"{name}/{fid} {hits}/5")
            all_ok &= hits >= 4
    return all_ok, ", ".join(rows) + f"; slowest run {slowest:.2f} s"


def test_ac2_oracle_equivalence_2d(verdict):
    verdict(2, "2-D Rastrigin and shifted Ackley vs grid oracle, >= 4/5 seeds", *_guarded(_ac2))


# -- AC3 -----------------------------------------------------------------------

AC3_BUDGET = 3000


def _ac3():
    doc = {
        "name": "table2-desk",
        "repetitions": 5,
        "defaults": {"N": 50, "M": AC3_BUDGET, "target_error": 1e-3},
        "benchmarks": [{"id": b, "n": 10} for b in BASIC_IDS],
        "optimizers": ["pc1", "pc3", "pso"],
    }
    cfg = parse_config_dict(doc)
    t = time.perf_counter()
    _, rows = run_experiment(cfg)
    elapsed = time.perf_counter() - t
    med = {(r.objective, r.optimizer): r.median_iterations for r in rows}
    good, parts = 0, []
    for b in BASIC_IDS:
        key = f"{b}-n10"
        a, c, p = med[key, "pc1"], med[key, "pc3"], med[key, "pso"]
        ordered = a < c < p
        good += ordered
        parts.append(f"{b}:{a:g}/{c:g}/{p:g}{'*' if ordered else ''}")
    passed = good >= 6 and elapsed < 300
    return passed, (f"ordering pc1<pc3<pso holds on {good}/9 (need 6) in {elapsed:.0f} s; "
                    f"median iterations pc1/pc3/pso: " + " ".join(parts))


def test_ac3_table_two_ordering(verdict):
    verdict(3, "desk-scaled ordering pc1 < pc3 < PSO on >= 6/9 basic functions", *_guarded(_ac3))


# -- AC4 -----------------------------------------------------------------------

AC4_BUDGET = 20_000


def _ac4():
    t0 = time.perf_counter()
    pc2_gaps, de_gaps, reached = [], [], 0
    for seed in range(5):
        obj = make_instance("F3", 20, seed=seed).objective()
        rec = run_pseudocode2(obj, OptimizerConfig(N=500, M=AC4_BUDGET, seed=seed, acceptance_probability=0.1,
                                                   target_error=1e-3, error_metric="f"))
        pc2_gaps.append(rec.f_gap[-1])
        reached += rec.f_gap[-1] <= 1e-3
        obj = make_instance("F3", 20, seed=seed).objective()
        rec = run_de(obj, DEConfig(N=500, CR=0.1, it_max=AC4_BUDGET, seed=seed, target_error=1e-3, error_metric="f"))
        de_gaps.append(rec.f_gap[-1])
    elapsed = time.perf_counter() - t0
    m_pc2, m_de = float(np.median(pc2_gaps)), float(np.median(de_gaps))
    passed = reached >= 4 and m_de >= 10 * m_pc2 and elapsed < 600
    return passed, (f"pc2 reached f-gap <= 1e-3 in {reached}/5 (median final {m_pc2:.3g}); "
                    f"DE median final f-gap {m_de:.3g} (need >= {10 * m_pc2:.3g}); {elapsed:.0f} s")


def test_ac4_table_one_contrast(verdict):
    verdict(4, "F3 n=20 pc2 converges while DE is >= 10x worse", *_guarded(_ac4))


# -- AC5 -----------------------------------------------------------------------


def _linear_problem(seed, n=100, coupling=0.2):
    rng = np.random.default_rng(100 + seed)
    A = np.eye(n) + coupling * rng.standard_normal((n, n)) / np.sqrt(n)
    y = A @ rng.uniform(-1.0, 1.0, n)
    x_ls = np.linalg.lstsq(A, y, rcond=None)[0]
    return SplitProblem(lambda X: X @ A.T, y, -2.0 * np.ones(n), 2.0 * np.ones(n), truth=x_ls), A, y, x_ls


def _ac5():
    t0 = time.perf_counter()
    hits, parts = 0, []
    for seed in range(5):
        prob, A, y, x_ls = _linear_problem(seed)
        cfg = OptimizerConfig(N=30, M=50, seed=seed, target_error=1e-3, error_metric="f",
                              split_squared=False, per_particle_zeta=True)
        rec = run_split_greedy(prob, cfg)
        resid = float(np.linalg.norm(y - A @ rec.final_best))
        rel = float(np.linalg.norm(rec.final_best - x_ls) / np.linalg.norm(x_ls))
        ok = resid <= 1e-3 and rec.iterations <= 50 and rel <= 1e-2
        hits += ok
        parts.append(f"seed {seed}: residual {resid:.2g} at it {rec.iterations}, rel {rel:.2g}")
    elapsed = time.perf_counter() - t0
    passed = hits >= 4 and elapsed < 60
    return passed, f"{hits}/5 seeds ({'; '.join(parts)}); {elapsed:.1f} s"


def test_ac5_split_inverse_problem(verdict):
    verdict(5, "split innovation solves a 100-unknown linear inverse problem", *_guarded(_ac5))


# -- AC6 -----------------------------------------------------------------------


def _ac6(tmp_path):
    doc = {
        "name": "determinism",
        "plot": True,
        "seeds": [0, 1],
        "defaults": {"N": 20, "M": 60, "target_error": 1e-4},
        "benchmarks": [{"id": "B5", "n": 4}, {"id": "F8", "n": 8, "m": 2}, {"id": "F7", "n": 6, "m": 3}],
        "optimizers": ["pc1", "pc2", "pc3", "de", "pso"],
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(doc))
    a, b = tmp_path / "a", tmp_path / "b"
    codes = (main(["run", str(cfg_path), "--outdir", str(a)]), main(["run", str(cfg_path), "--outdir", str(b)]))
    same_summary = (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()
    same_runs = (a / "runs.csv").read_bytes() == (b / "runs.csv").read_bytes()
    traces = sorted(p.name for p in (a / "traces").glob("*.csv"))
    same_traces = not filecmp.cmpfiles(a / "traces", b / "traces", traces, shallow=False)[1]

    # trace CSVs parse back to exactly the recorded values of an in-memory rerun
    results, _ = run_experiment(parse_config_dict(doc))
    round_trip = True
    for r in results:
        cols = read_trace(a / f"traces/{r.spec.case_id}__seed{r.spec.seed}.csv")
        rec = r.record
        round_trip &= (cols["iteration"] == rec.iteration and cols["tau"] == rec.tau
                       and cols["best_cost"] == rec.best_cost and cols["evals"] == rec.evals
                       and np.array_equal(cols["mean_error"], rec.mean_error, equal_nan=True))

    # every instance JSON (written ones plus all ids) replays to the same values at 20 probe points
    replay = True
    docs = [p.read_text() for p in sorted((a / "instances").glob("*.json"))]
    docs += [make_instance(fid, 20, 5, seed=3, shift=True).to_json() for fid in ALL_IDS]
    for text in docs:
        meta = json.loads(text)
        fresh = make_instance(meta["function_id"], meta["n"], meta["m"], seed=meta["seed"],
                              shift=bool(np.any(meta["shift"])), ackley_form=meta["ackley_form"])
        back = BenchmarkInstance.from_json(text)
        P = np.random.default_rng(meta["seed"]).uniform(back.lower, back.upper, (20, back.n))
        replay &= bool(np.all(np.abs(back(P) - fresh(P)) <= 1e-12 * np.maximum(1.0, np.abs(fresh(P)))))

    checks = {"exit codes 0": codes == (0, 0), "summary bytes": same_summary, "runs bytes": same_runs,
              "trace bytes": same_traces, "trace round-trip": round_trip, "instance replay": replay}
    failed = [k for k, v in checks.items() if not v]
    detail = (f"{len(checks) - len(failed)}/{len(checks)} checks over {len(results)} runs, "
              f"{len(traces)} traces, {len(docs)} instance documents")
    if failed:
        detail += "; failing: " + ", ".join(failed)
    return not failed, detail


def test_ac6_determinism_and_formats(verdict, tmp_path):
    verdict(6, "determinism and file formats", *_guarded(lambda: _ac6(tmp_path)))
