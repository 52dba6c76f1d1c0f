import pytest

from cloudplus import bench, plain, scheme
from cloudplus.timecode import tag_for_epoch


def test_and_chain():
    assert bench.and_chain(3) == "S1 AND S2 AND S3"


@pytest.mark.parametrize("n", [1, 2, 7, 20])
def test_component_counts(system, cfg, rng, n):
    pp, msk, rl = system
    attrs = {f"S{i}" for i in range(1, n + 1)}
    m = scheme.random_gt(pp, rng)
    ct = scheme.encrypt(pp, m, bench.and_chain(n), rl, rng)
    pct = plain.encrypt(pp, m, bench.and_chain(n), rng)
    sk = scheme.keygen(pp, msk, "u", attrs, tag_for_epoch(5, cfg), rng)
    psk = plain.keygen(pp, msk, attrs, rng)
    assert bench.component_counts(ct) == (2 * n + 2, 1, False)
    assert bench.component_counts(pct) == (2 * n + 1, 1, False)
    assert bench.component_counts(sk) == (n + 2, 0, True)
    assert bench.component_counts(psk) == (n + 2, 0, False)
    for obj in (ct, pct, sk, psk):
        assert bench.count_elements(obj) == bench.component_counts(obj)[:2]


def test_run_bench_grid(rng):
    rows = bench.run_bench(4, 2, trials=10, rng=rng, warmup=1)
    assert [(r.scheme, r.n_attrs, r.phase) for r in rows[:6]] == [
        (s, 2, ph) for s in bench.SCHEMES for ph in bench.PHASES
    ]
    assert all(r.median_ns > 0 and r.trials == 10 for r in rows)


def test_run_bench_arguments(rng):
    with pytest.raises(ValueError):
        bench.run_bench(2, 4, rng=rng)
    with pytest.raises(ValueError):
        bench.run_bench(4, 2, trials=3, rng=rng)


def test_csv_roundtrip(tmp_path):
    rows = [bench.BenchRow("atr", 10, "encrypt", 1234, 25), bench.BenchRow("plain", 10, "encrypt", 999, 25)]
    text = bench.write_csv(rows, tmp_path / "o.csv")
    assert text.splitlines()[0] == "scheme,n_attrs,phase,median_ns,trials"
    assert bench.read_csv(tmp_path / "o.csv") == rows


def test_kernel_bench_covers_all_impls():
    res = bench.run_kernel_bench(sizes=(4,), trials=3)
    impls = {r["impl"] for r in res}
    assert "python" in impls
    assert {r["kernel"] for r in res} == {"solve_span", "matvec"}


def test_cost_grows_with_width(rng):
    # compare n to 4n so timing noise cannot flip the order
    rows = bench.run_bench(20, 5, trials=15, rng=rng, warmup=2)
    med = {(r.scheme, r.n_attrs, r.phase): r.median_ns for r in rows}
    for s in bench.SCHEMES:
        for ph in ("keygen", "encrypt"):
            assert med[s, 20, ph] > med[s, 5, ph]
