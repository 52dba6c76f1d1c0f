"""Timing harness: ATR-CP-ABE vs plain CP-ABE over AND-chain policies, plus a
compiled-vs-pure comparison of the modular kernels."""
from __future__ import annotations

import csv
import gc
import io
import statistics
import time
from dataclasses import astuple, dataclass, fields
from datetime import date

from . import _kernels, plain, scheme
from .group import GroupElem, GtElem, make_rng
from .timecode import EpochConfig, tag_for_epoch

PHASES = ("keygen", "encrypt", "decrypt")
SCHEMES = ("atr", "plain")
CSV_HEADER = ("scheme", "n_attrs", "phase", "median_ns", "trials")


@dataclass(frozen=True)
class BenchRow:
    scheme: str
    n_attrs: int
    phase: str
    median_ns: int
    trials: int


def and_chain(n: int) -> str:
    return " AND ".join(f"S{i}" for i in range(1, n + 1))


def component_counts(obj) -> tuple:
    """(source-group elements, target-group elements, has identity tag)."""
    if isinstance(obj, (scheme.SecretKey, plain.PlainKey)):
        g = 2 + len(obj.Kx)
        return g, 0, isinstance(obj, scheme.SecretKey) and obj.c is not None
    if isinstance(obj, scheme.AbeCiphertext):
        return 2 + len(obj.Ci) + len(obj.Di), 1, False
    if isinstance(obj, plain.PlainCiphertext):
        return 1 + len(obj.Ci) + len(obj.Di), 1, False
    raise TypeError(f"no component count for {type(obj).__name__}")


def _elements(obj) -> list:
    out = []
    for f in fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, GroupElem):
            out.append(v)
        elif isinstance(v, (tuple, list)):
            out.extend(x for x in v if isinstance(x, GroupElem))
        elif isinstance(v, dict):
            out.extend(x for x in v.values() if isinstance(x, GroupElem))
    return out


def count_elements(obj) -> tuple:
    """Independent count by walking the object's fields: (G, GT)."""
    elems = _elements(obj)
    gt = sum(1 for e in elems if isinstance(e, GtElem))
    return len(elems) - gt, gt


def _timed(fn):
    t0 = time.perf_counter_ns()
    out = fn()
    return time.perf_counter_ns() - t0, out


def run_bench(max_n: int, step: int, trials: int = 25, rng=None, warmup: int = 3, setups=None):
    """Median KeyGen/Encrypt/Decrypt times for n = step, 2*step, ..., max_n.

    The two schemes run back to back inside every trial, in alternating
    order, so slow periods of the machine hit both alike.
    """
    if not max_n >= step >= 1:
        raise ValueError("need max_n >= step >= 1")
    if trials < 10:
        raise ValueError("at least 10 trials per grid point")
    rng = rng if rng is not None else make_rng()
    if setups is None:
        cfg = EpochConfig(date(2024, 1, 1), 1024)
        pp, msk, rl = scheme.setup("toy", None, cfg, rng)
    else:
        pp, msk, rl = setups
    table = scheme.IdentityTable()
    ten = tag_for_epoch(pp.epoch_cfg.lifetime - 1, pp.epoch_cfg)
    when = pp.epoch_cfg.genesis
    rows = []
    gc_was = gc.isenabled()
    gc.disable()
    try:
        for n in range(step, max_n + 1, step):
            policy = and_chain(n)
            attrs = {f"S{i}" for i in range(1, n + 1)}
            ops = {
                "atr": {
                    "keygen": lambda: scheme.keygen(pp, msk, "bench", attrs, ten, rng, table),
                    "encrypt": lambda m: scheme.encrypt(pp, m, policy, rl, rng),
                    "decrypt": lambda sk, ct: scheme.decrypt(pp, sk, ct, when),
                },
                "plain": {
                    "keygen": lambda: plain.keygen(pp, msk, attrs, rng),
                    "encrypt": lambda m: plain.encrypt(pp, m, policy, rng),
                    "decrypt": lambda sk, ct: plain.decrypt(pp, sk, ct),
                },
            }
            samples = {(s, ph): [] for s in SCHEMES for ph in PHASES}
            for trial in range(warmup + trials):
                order = SCHEMES if trial % 2 == 0 else SCHEMES[::-1]
                m = scheme.random_gt(pp, rng)
                keys, cts, took = {}, {}, {}
                for s in order:
                    took[s, "keygen"], keys[s] = _timed(ops[s]["keygen"])
                for s in order:
                    took[s, "encrypt"], cts[s] = _timed(lambda: ops[s]["encrypt"](m))
                for s in order:
                    took[s, "decrypt"], out = _timed(lambda: ops[s]["decrypt"](keys[s], cts[s]))
                    if out != m:
                        raise AssertionError(f"{s} decryption mismatch during benchmark")
                if trial >= warmup:
                    for key, t in took.items():
                        samples[key].append(t)
            for s in SCHEMES:
                for ph in PHASES:
                    rows.append(BenchRow(s, n, ph, int(statistics.median(samples[(s, ph)])), trials))
    finally:
        if gc_was:
            gc.enable()
    return rows


def write_csv(rows, out=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(astuple(r))
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != CSV_HEADER:
            raise ValueError("unexpected CSV header")
        return [BenchRow(r["scheme"], int(r["n_attrs"]), r["phase"], int(r["median_ns"]), int(r["trials"]))
                for r in rd]


def run_kernel_bench(sizes=(10, 50, 100), trials: int = 11, seed: int = 0) -> list:
    """Median ns per call of ``solve_span`` and ``matvec`` for each kernel set.

    Returns dicts with keys impl, kernel, size, median_ns.
    """
    from .group import M61

    rng = make_rng(seed)
    results = []
    for size in sizes:
        rows = [[rng.randrange(M61) for _ in range(size)] for _ in range(size)]
        vec = [rng.randrange(M61) for _ in range(size)]
        for name, mod in _kernels.available().items():
            for kernel, call in (("solve_span", lambda: mod.solve_span(rows, M61)),
                                 ("matvec", lambda: mod.matvec(rows, vec, M61))):
                times = [_timed(call)[0] for _ in range(trials)]
                results.append({"impl": name, "kernel": kernel, "size": size,
                                "median_ns": int(statistics.median(times))})
    return results
