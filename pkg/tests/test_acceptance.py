"""Exit criteria. Each test prints one PASS/FAIL line (see the pytest summary)."""

import time
from pathlib import Path

import numpy as np
import pytest

from oracles import loop_bootstrap, loop_history, scripted_algorithm
from tsbpca import Dataset, ProjectionState, RunConfig, TemporalStreamingPCA, compress, streaming
from tsbpca.cli import main
from tsbpca.exceptions import MetadataMissing, ParseError, UnsupportedFeature
from tsbpca.harness import PRESETS, SyntheticSpec, bench_scaling, generate, knn_proxy, sweep
from tsbpca.io import read_csv, read_ts, write_csv
from tsbpca.oracle import subspace_distance, top_eigenspace

pytestmark = pytest.mark.acceptance

FIXTURES = Path(__file__).parent / "fixtures"
TOY = Path(__file__).resolve().parents[1] / "data" / "toy.csv"


def test_ac01_orthonormality(criterion, monkeypatch):
    errors = []
    real = streaming.qr_orthonormalize

    def spy(W):
        q, r = real(W)
        errors.append(np.linalg.norm(q.T @ q - np.eye(q.shape[1])))
        return q, r

    monkeypatch.setattr(streaming, "qr_orthonormalize", spy)
    spec = SyntheticSpec(B=16, N=128, d=8, eigenvalues=tuple(4.0 * 0.6 ** np.arange(8)))
    start = time.perf_counter()
    for k in (1, 2, 4):
        compress(generate(spec, k), RunConfig(time_batch=8, components=k, seed=k))
    elapsed = time.perf_counter() - start
    worst = max(errors)
    criterion(
        "AC1 orthonormality",
        worst <= 1e-8 and elapsed < 10,
        f"{len(errors)} QR iterates, max ||Q^T Q - I||_F = {worst:.2e} (<= 1e-8), {elapsed:.2f}s (< 10s)",
    )


def test_ac02_oracle_equivalence(criterion):
    spec = PRESETS["stationary"]
    assert (spec.B, spec.N, spec.eigenvalues) == (64, 200, (5.0, 3.0, 1.0, 0.5, 0.2, 0.1))
    dists, times = [], []
    for seed in range(5):
        ds = generate(spec, seed)
        start = time.perf_counter()
        rep = compress(ds, RunConfig(time_batch=10, components=2, seed=seed))
        times.append(time.perf_counter() - start)
        dists.append(subspace_distance(rep.final_q, top_eigenspace(ds, 2)))
    mean = float(np.mean(dists))
    criterion(
        "AC2 oracle equivalence",
        mean <= 0.1 and max(times) < 5,
        f"mean subspace distance {mean:.4f} (<= 0.1), slowest seed {max(times):.3f}s (< 5s)",
    )


def test_ac03_transcription_oracle(criterion):
    worst = 0.0
    for seed in range(10):
        v = np.random.default_rng(seed).standard_normal((2, 4, 2))
        cfg = RunConfig(time_batch=2, components=1, tol=1e-10, max_inner_iters=10_000, seed=seed)
        rep = compress(Dataset.from_array(v), cfg)
        assert rep.converged_fraction == 1.0
        Y_ref, _ = scripted_algorithm(v, 2, 1, seed, 1e-10, 10_000)
        worst = max(worst, float(np.abs(rep.values - Y_ref).max()))
    criterion("AC3 transcription oracle", worst <= 1e-10, f"max elementwise gap {worst:.2e} (<= 1e-10)")


def test_ac04_update_rule_oracles(criterion):
    worst_boot = worst_hist = 0.0
    for case in range(100):
        rng = np.random.default_rng(1000 + case)
        d = int(rng.integers(1, 6))
        k = int(rng.integers(1, d + 1))
        B = int(rng.integers(1, 7))
        j = int(rng.integers(2, 50))
        X = rng.standard_normal((B, d))
        q_prev = np.linalg.qr(rng.standard_normal((d, k)))[0]
        q_iter = np.linalg.qr(rng.standard_normal((d, k)))[0]
        lam = np.abs(rng.standard_normal(k)) * 3
        s = ProjectionState(q_prev, lam, j - 1)
        W = streaming.bootstrap_update(ProjectionState(q_iter, np.zeros(k), 0), X, B)
        worst_boot = max(worst_boot, float(np.abs(W - loop_bootstrap(q_iter, X)).max()))
        W = streaming.history_update(s, q_iter, X, B, j)
        worst_hist = max(worst_hist, float(np.abs(W - loop_history(q_prev, lam, q_iter, X, j)).max()))
    criterion(
        "AC4 update-rule oracles",
        worst_boot <= 1e-12 and worst_hist <= 1e-12,
        f"100 cases, max gap bootstrap {worst_boot:.1e}, history {worst_hist:.1e} (<= 1e-12)",
    )


def test_ac05_isometry(criterion):
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        B, N, d = (int(x) for x in rng.integers(2, 12, size=3))
        ds = Dataset.from_array(rng.standard_normal((B, N, d)) * rng.uniform(0.1, 10))
        T = int(rng.integers(1, N + 1))
        rep = compress(ds, RunConfig(time_batch=T, components=d, seed=seed))
        before = np.linalg.norm(ds.values, axis=(0, 2))
        after = np.linalg.norm(rep.values, axis=(0, 2))
        worst = max(worst, float(np.max(np.abs(after - before) / before)))
    criterion("AC5 isometry", worst <= 1e-8, f"10 datasets, max relative norm change {worst:.1e} (<= 1e-8)")


def test_ac06_compression_utility(criterion):
    spec = PRESETS["stationary-2class"]
    assert spec.d == 8
    gaps = []
    for seed in range(5):
        train, test = generate(spec, 2 * seed), generate(spec, 2 * seed + 1)
        raw = knn_proxy(train, test)
        est = TemporalStreamingPCA(n_components=2, time_batch=10, random_state=seed).fit(train.values)
        compact = knn_proxy((est.transform(train.values), train.labels),
                            (est.transform(test.values), test.labels))
        gaps.append(raw - compact)
    worst = max(gaps)
    criterion(
        "AC6 compression utility",
        worst <= 0.05,
        f"5 seeds, largest raw-minus-compressed 1-NN accuracy gap {100 * worst:.1f} pp (<= 5 pp)",
    )


def test_ac07_scaling_shape(criterion):
    spec = PRESETS["bench"]
    start = time.perf_counter()
    rows = bench_scaling([spec.with_n(n) for n in (250, 500, 1000)],
                         RunConfig(time_batch=10, components=4), repeats=5)
    total = time.perf_counter() - start
    ratios = [b.seconds / a.seconds for a, b in zip(rows, rows[1:])]
    ok = all(1.6 <= r <= 2.6 for r in ratios) and total < 120
    criterion(
        "AC7 scaling shape",
        ok,
        "median times " + ", ".join(f"N={r.N}: {r.seconds:.3f}s" for r in rows)
        + f"; ratios {', '.join(f'{r:.2f}' for r in ratios)} (in [1.6, 2.6]); total {total:.1f}s (< 120s)",
    )


def test_ac08_instability_echo(criterion):
    spec = PRESETS["small-sample"]
    assert (spec.B, spec.d) == (4, 8)
    flags = {1: 0, 6: 0}
    for seed in range(20):
        res = sweep(generate(spec, seed), [10], [1, 6], RunConfig(seed=seed))
        for k in flags:
            flags[k] += res.cell(10, k).unstable
    criterion(
        "AC8 instability echo",
        flags[6] > flags[1],
        f"instability rate K=6: {flags[6] / 20:.2f} vs K=1: {flags[1] / 20:.2f} over 20 seeds",
    )


def test_ac09_parser_round_trips(criterion, tmp_path):
    ds = read_ts(FIXTURES / "three_cases.ts")
    write_csv(ds, tmp_path / "rt.csv")
    back = read_csv(tmp_path / "rt.csv")
    identical = (
        back.values.tobytes() == ds.values.tobytes()
        and np.array_equal(back.labels, ds.labels)
        and ds.shape == (3, 4, 2)
    )
    expected = {
        "variable_length.ts": UnsupportedFeature,
        "no_classlabel.ts": MetadataMissing,
        "short_row.ts": ParseError,
        "bad_number.ts": ParseError,
        "missing_dimension.ts": ParseError,
    }
    outcomes = {}
    for name, exc in expected.items():
        try:
            read_ts(FIXTURES / name)
            outcomes[name] = "parsed"
        except exc:
            outcomes[name] = "ok"
    rejected = all(v == "ok" for v in outcomes.values())
    criterion(
        "AC9 parser round trips",
        identical and rejected,
        f"3-case round trip identical={identical}; malformed fixtures rejected={rejected} ({len(expected)} files)",
    )


def test_ac10_cli_determinism(criterion, tmp_path, capsys):
    args = ["compress", "--input", str(TOY), "--format", "csv", "-T", "4", "-K", "2", "--seed", "7"]
    codes = [main(args + ["--out", str(tmp_path / name)]) for name in ("a.csv", "b.csv")]
    capsys.readouterr()
    same = all(
        (tmp_path / f"a.csv{ext}").read_bytes() == (tmp_path / f"b.csv{ext}").read_bytes()
        for ext in ("", ".meta.json")
    )
    criterion("AC10 determinism", codes == [0, 0] and same,
              f"exit codes {codes}; outputs byte-identical={same}")
