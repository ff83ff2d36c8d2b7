"""Ordering report over a finished run directory.

Reads the CSV outputs back (never the in-process state), checks the
qualitative relations the experiment is expected to show, and writes
summary.json with one pass/fail entry per check:

* at optimum launch power, bess > uniform > ess in effective SNR and
  kess > ess, each with margin >= 3x the seed-to-seed standard error;
* the EDI ordering at the reference windows (30 <-> shortest link,
  150 <-> longest link) is the reverse of that link's SNR ordering;
* bess has the smallest EDI on every grid window in [n/2, n] symbols;
* bess's windowed-angle ACF tail (mean |R| over lags w+1..3w) is below
  every other scheme's on the shortest link;
* kess beats bess on all three average statistics while losing in SNR
  (average statistics alone do not predict the nonlinear penalty).
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

DEFAULT_W_STARS = (30, 150)


class SummaryError(ValueError):
    pass


def _read_csv(path: Path) -> list[dict]:
    if not path.exists():
        raise SummaryError(f"missing results file {path}")
    with path.open() as fh:
        return list(csv.DictReader(fh))


def _snr_table(rows: list[dict]) -> dict:
    """(scheme, n_spans) -> power -> list of per-seed SNRs."""
    table: dict = defaultdict(lambda: defaultdict(list))
    for r in rows:
        table[(r["scheme"], int(r["n_spans"]))][float(r["power_dbm"])].append(float(r["snr_db"]))
    return table


def _check_complete(table: dict, manifest: dict) -> None:
    cfg = manifest["config"]
    want_powers = [float(p) for p in cfg["power_sweep_dbm"]]
    missing = []
    for s in [x["name"] for x in cfg["schemes"]]:
        for n_spans in cfg["span_counts"]:
            have = table.get((s, int(n_spans)), {})
            missing.extend((s, p) for p in want_powers if p not in have)
    if missing:
        raise SummaryError(f"missing sweep cells: {sorted(set(missing))}")


def _optimum(table: dict, scheme: str, n_spans: int) -> dict:
    powers = table[(scheme, n_spans)]
    means = {p: float(np.mean(v)) for p, v in powers.items()}
    opt = max(sorted(means), key=lambda p: means[p])
    vals = powers[opt]
    se = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return {"power_dbm": opt, "snr_db": means[opt], "se_db": se}


def _exceeds(a: dict, b: dict, sigmas: float = 3.0) -> bool:
    margin = sigmas * float(np.hypot(a["se_db"], b["se_db"]))
    return a["snr_db"] - b["snr_db"] >= margin


def summarize(results_dir: str | Path, w_stars: tuple[int, int] = DEFAULT_W_STARS) -> dict:
    """Build and write the ordering verdict for a completed run."""
    results_dir = Path(results_dir)
    manifest = json.loads((results_dir / "manifest.json").read_text())
    snr_rows = _read_csv(results_dir / "snr_sweep.csv")
    edi_rows = _read_csv(results_dir / "edi.csv")
    acf_rows = _read_csv(results_dir / "acf.csv")
    moment_rows = _read_csv(results_dir / "moments.csv")
    if not edi_rows:
        raise SummaryError("edi.csv has no rows")

    table = _snr_table(snr_rows)
    _check_complete(table, manifest)
    schemes = sorted({r["scheme"] for r in snr_rows})
    span_counts = sorted({int(r["n_spans"]) for r in snr_rows})
    checks: dict[str, bool] = {}
    detail: dict = {"optimum": {}, "snr_ordering": {}, "edi": {}, "acf_tail": {},
                    "average_stats": {}}

    # --- SNR orderings at optimum power, with seed-noise margins
    opt: dict = {}
    for n_spans in span_counts:
        opt[n_spans] = {s: _optimum(table, s, n_spans) for s in schemes}
        detail["optimum"][str(n_spans)] = opt[n_spans]
        o = opt[n_spans]
        ranked = sorted(schemes, key=lambda s: -o[s]["snr_db"])
        detail["snr_ordering"][str(n_spans)] = ranked
        if {"bess", "uniform", "ess"} <= set(schemes):
            checks[f"snr_bess_above_uniform_{n_spans}span"] = _exceeds(o["bess"], o["uniform"])
            checks[f"snr_uniform_above_ess_{n_spans}span"] = _exceeds(o["uniform"], o["ess"])
        if {"kess", "ess"} <= set(schemes):
            checks[f"snr_kess_above_ess_{n_spans}span"] = _exceeds(o["kess"], o["ess"])

    # --- EDI orderings: reverse of the SNR ordering at the paired link length
    psi = defaultdict(dict)
    for r in edi_rows:
        psi[int(r["window"])][r["scheme"]] = float(r["psi"])
    skipped = []
    for w_star, n_spans in zip(w_stars, (span_counts[0], span_counts[-1])):
        if w_star not in psi:
            skipped.append(w_star)
            continue
        by_edi = sorted(schemes, key=lambda s: psi[w_star][s])
        by_snr = detail["snr_ordering"][str(n_spans)]
        detail["edi"][f"w{w_star}"] = {s: psi[w_star][s] for s in by_edi}
        checks[f"edi_w{w_star}_reverse_of_snr_{n_spans}span"] = by_edi == by_snr
    if skipped:
        detail["edi"]["skipped_w_stars"] = skipped

    # --- bess smallest EDI around one block pair: windows in [n/2, n]
    shaped_n = [m["n"] for m in manifest["schemes"].values() if m.get("n")]
    if shaped_n and "bess" in schemes:
        n_amp = max(shaped_n)
        windows = [w for w in psi if n_amp // 2 <= w <= n_amp]
        ok = bool(windows) and all(
            min(psi[w], key=psi[w].get) == "bess" for w in windows)
        checks["edi_bess_smallest_near_blocklength"] = ok
        detail["edi"]["block_neighborhood_windows"] = windows

    # --- ACF tail on the shortest link
    w = int(manifest["config"]["acf"]["w"])
    lo, hi = w + 1, 3 * w
    tails: dict[str, float] = {}
    for s in schemes:
        vals = [float(r["r_theta"]) for r in acf_rows
                if r["scheme"] == s and int(r["n_spans"]) == span_counts[0]
                and lo <= int(r["tau"]) <= hi]
        if vals:
            tails[s] = float(np.mean(np.abs(vals)))
    detail["acf_tail"] = {"lags": [lo, hi], "mean_abs": tails}
    if "bess" in tails and len(tails) == len(schemes):
        checks["acf_bess_fastest_decay"] = all(
            tails["bess"] < v for s, v in tails.items() if s != "bess")

    # --- average statistics: kess better than bess everywhere yet lower SNR
    stats = {r["scheme"]: r for r in moment_rows}
    if {"kess", "bess"} <= set(stats):
        k, b = stats["kess"], stats["bess"]
        below = all(float(k[c]) < float(b[c]) for c in
                    ("mean_energy", "energy_variance", "kurtosis_ratio"))
        snr_below = all(opt[n]["kess"]["snr_db"] < opt[n]["bess"]["snr_db"]
                        for n in span_counts)
        checks["average_stats_insufficient"] = below and snr_below
        detail["average_stats"] = {
            "kess": {c: float(k[c]) for c in k if c != "scheme"},
            "bess": {c: float(b[c]) for c in b if c != "scheme"},
            "kess_all_below": below, "kess_snr_below": snr_below}

    verdict = {"checks": checks, "all_pass": all(checks.values()), "detail": detail}
    (results_dir / "summary.json").write_text(
        json.dumps(verdict, indent=2, sort_keys=True) + "\n")
    return verdict
