"""Experiment orchestration: config parsing, shaped/uniform stream
generation, launch-power sweeps over the fiber link, metric extraction,
and deterministic CSV/JSON output.

Randomness derivation (documented contract): every generator is a PCG64
seeded from a SeedSequence whose entropy is

    [TX_STREAM_TAG, seed, scheme_code]                       TX bits/signs
    [ASE_TAG, seed, scheme_code, power_mdbm, n_spans]        per-run ASE

with scheme_code from SCHEME_CODES and power_mdbm the launch power in
integer milli-dBm. Identical config + seeds therefore reproduce every
output byte, and any sweep cell can be recomputed in isolation.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .fiber import (
    LinkConfig,
    estimate_effective_snr,
    receiver_chain,
    rrc_shape,
    ssfm_propagate,
)
from .mapping import (
    GENERATOR_ID,
    ComplexSymbolFrame,
    generate_uniform_frame,
    map_to_qam,
    normalize_power,
)
from .metrics import acf, edi, moments, moving_window_angle
from .shaping import (
    AmplitudeAlphabet,
    ShapingConstraints,
    ShapingTrellis,
    build_trellis,
    calibrate_emax,
    constraints_from_rules,
    encode_index,
)

SCHEME_CODES = {"uniform": 0, "ess": 1, "kess": 2, "bess": 3}
TX_STREAM_TAG = 0x7853
ASE_TAG = 0xA5E

SNR_COLUMNS = ["scheme", "power_dbm", "n_spans", "seed", "snr_db"]
EDI_COLUMNS = ["scheme", "window", "psi"]
ACF_COLUMNS = ["scheme", "n_spans", "power_dbm", "tau", "r_theta"]
MOMENT_COLUMNS = ["scheme", "mean_energy", "energy_variance", "kurtosis_ratio", "mean_fourth_sum"]


@dataclass(frozen=True)
class SchemeSpec:
    """One signaling scheme of the sweep and its shaping parameters."""

    name: str
    n: Optional[int] = None
    alphabet: tuple[int, ...] = (1, 3, 5, 7)
    target_rate: Optional[float] = None
    e_max: Optional[int] = None
    k_max_ratio: Optional[float] = None
    band_slope: Optional[Fraction] = None
    band_halfwidth: Optional[float] = None

    def __post_init__(self):
        if self.name not in SCHEME_CODES:
            raise ValueError(f"unknown scheme {self.name!r}; expected one of {sorted(SCHEME_CODES)}")
        if self.name != "uniform":
            if self.n is None or self.n % 2:
                raise ValueError(f"scheme {self.name}: blocklength n must be a positive even integer")
            if (self.target_rate is None) == (self.e_max is None):
                raise ValueError(f"scheme {self.name}: give exactly one of target_rate or e_max")
            if self.name == "kess" and self.k_max_ratio is None:
                raise ValueError("kess requires k_max_ratio")
            if self.name == "bess" and self.band_halfwidth is None:
                raise ValueError("bess requires band_halfwidth")
            if self.name == "ess" and (self.k_max_ratio is not None or self.band_halfwidth is not None):
                raise ValueError("ess takes neither k_max_ratio nor band parameters")

    def resolve(self) -> Optional[ShapingConstraints]:
        if self.name == "uniform":
            return None
        alphabet = AmplitudeAlphabet(tuple(self.alphabet))
        if self.e_max is not None:
            return constraints_from_rules(
                alphabet, self.n, self.e_max, self.k_max_ratio,
                self.band_slope, self.band_halfwidth)
        return calibrate_emax(alphabet, self.n, self.target_rate,
                              self.k_max_ratio, self.band_slope, self.band_halfwidth)


@dataclass
class ExperimentConfig:
    """Sweep-level settings; launch power and span count are swept, so the
    embedded link config must not set them."""

    schemes: list[SchemeSpec]
    link: LinkConfig
    power_sweep_dbm: list[float]
    span_counts: list[int]
    n_symbols: int
    seeds: list[int]
    edi_windows: list[int]
    acf_w: int = 5
    acf_tau_max: int = 50
    guard_symbols: int = 64
    edi_mode: str = "concatenated"
    output_dir: Optional[str] = None

    def __post_init__(self):
        if not self.schemes or not self.power_sweep_dbm or not self.seeds or not self.span_counts:
            raise ValueError("schemes, power_sweep_dbm, span_counts and seeds must be nonempty")
        names = [s.name for s in self.schemes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate scheme names")
        if not self.edi_windows or any(w % 2 or w < 2 for w in self.edi_windows):
            raise ValueError("edi_windows must be positive even integers")
        if self.n_symbols < 10 * max(self.edi_windows):
            raise ValueError("n_symbols must be at least 10x the largest EDI window")
        if self.acf_w % 2 == 0 or self.acf_w < 1:
            raise ValueError("acf w must be odd")
        if self.edi_mode not in ("concatenated", "blocks"):
            raise ValueError("edi_mode must be 'concatenated' or 'blocks'")
        if self.n_symbols <= 2 * self.guard_symbols + self.acf_tau_max + self.acf_w:
            raise ValueError("n_symbols too small for the guard and ACF settings")


def load_config(path: str | Path) -> ExperimentConfig:
    raw = json.loads(Path(path).read_text())
    schemes = []
    for s in raw["schemes"]:
        s = dict(s)
        if "alphabet" in s:
            s["alphabet"] = tuple(s["alphabet"])
        if s.get("band_slope") is not None:
            s["band_slope"] = Fraction(str(s["band_slope"]))
        schemes.append(SchemeSpec(**s))
    link_kwargs = dict(raw.get("link", {}))
    for banned in ("n_spans", "launch_power_dbm"):
        if banned in link_kwargs:
            raise ValueError(f"link.{banned} is controlled by the sweep; remove it from the config")
    acf_section = raw.get("acf", {})
    return ExperimentConfig(
        schemes=schemes,
        link=LinkConfig(**link_kwargs),
        power_sweep_dbm=[float(p) for p in raw["power_sweep_dbm"]],
        span_counts=[int(s) for s in raw.get("span_counts", [1])],
        n_symbols=int(raw["n_symbols"]),
        seeds=[int(s) for s in raw["seeds"]],
        edi_windows=sorted(set(int(w) for w in raw["edi_windows"])),
        acf_w=int(acf_section.get("w", 5)),
        acf_tau_max=int(acf_section.get("tau_max", 50)),
        guard_symbols=int(raw.get("guard_symbols", 64)),
        edi_mode=raw.get("edi_mode", "concatenated"),
        output_dir=raw.get("output_dir"),
    )


def _mdbm(power_dbm: float) -> int:
    # biased so the entropy word stays non-negative for sub-0 dBm powers
    return int(round(power_dbm * 1000)) + (1 << 20)


def _tx_rng(seed: int, scheme: str) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([TX_STREAM_TAG, seed, SCHEME_CODES[scheme]]))


def _ase_rng(seed: int, scheme: str, power_dbm: float, n_spans: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(
        [ASE_TAG, seed, SCHEME_CODES[scheme], _mdbm(power_dbm), n_spans]))


def draw_index_bits(rng: np.random.Generator, n_bits: int) -> int:
    """A uniform n_bits-bit index: raw generator bytes, big-endian, masked."""
    raw = int.from_bytes(rng.bytes((n_bits + 7) // 8), "big")
    return raw & ((1 << n_bits) - 1)


def generate_tx_stream(spec: SchemeSpec, trellis: Optional[ShapingTrellis],
                       n_symbols: int, seed: int) -> np.ndarray:
    """Unnormalized TX symbols for one (scheme, seed): whole shaped blocks
    truncated to n_symbols, or i.i.d. uniform 64-QAM."""
    rng = _tx_rng(seed, spec.name)
    if spec.name == "uniform":
        return generate_uniform_frame(n_symbols, rng).symbols
    n = trellis.constraints.n
    bits = trellis.input_bits
    n_blocks = math.ceil(2 * n_symbols / n)
    amps = np.empty(n_blocks * n, dtype=np.int64)
    for b in range(n_blocks):
        idx = draw_index_bits(rng, bits)
        amps[b * n:(b + 1) * n] = encode_index(trellis, idx)
    signs = rng.integers(0, 2, size=amps.size, dtype=np.int64) * 2 - 1
    return map_to_qam(amps, signs, spec.name).symbols[:n_symbols]


@dataclass
class _SchemeData:
    spec: SchemeSpec
    constraints: Optional[ShapingConstraints]
    block_symbols: int
    norm_energy: float = 0.0
    raw: dict[int, np.ndarray] = field(default_factory=dict)       # seed -> stream
    normalized: dict[int, np.ndarray] = field(default_factory=dict)


def _prepare_schemes(config: ExperimentConfig) -> dict[str, _SchemeData]:
    shaped_blocks = [s.n // 2 for s in config.schemes if s.name != "uniform"]
    fallback_block = max(shaped_blocks) if shaped_blocks else 54
    out: dict[str, _SchemeData] = {}
    for spec in config.schemes:
        cons = spec.resolve()
        trellis = build_trellis(AmplitudeAlphabet(tuple(spec.alphabet)), cons) if cons else None
        block = cons.n // 2 if cons else fallback_block
        data = _SchemeData(spec, cons, block)
        for seed in config.seeds:
            data.raw[seed] = generate_tx_stream(spec, trellis, config.n_symbols, seed)
        # ensemble-level scale: one empirical mean energy per scheme over
        # every generated symbol (per-frame normalization would erase the
        # energy variations the windowed metrics measure)
        stacked = np.concatenate([data.raw[s] for s in config.seeds])
        data.norm_energy = float(np.mean(stacked.real ** 2 + stacked.imag ** 2))
        for seed in config.seeds:
            frame = ComplexSymbolFrame(data.raw[seed], scheme=spec.name)
            data.normalized[seed] = normalize_power([frame], data.norm_energy)[0].symbols
        out[spec.name] = data
    return out


def _run_cells(args: tuple) -> list[dict]:
    """Worker: all (power, span) cells for one (scheme, seed) TX stream.

    Returns per-cell dicts with the SNR and the windowed-angle ACF (the
    ACF is cheap, so it is computed for every cell and filtered to the
    optimum power later)."""
    (scheme, seed, tx_symbols, link_kwargs, powers, spans, guard, w, tau_max) = args
    out = []
    tx_frame = ComplexSymbolFrame(tx_symbols, scheme=scheme)
    tx_trim = ComplexSymbolFrame(tx_symbols[guard:-guard], scheme=scheme)
    for n_spans in spans:
        for power in powers:
            cell = {"scheme": scheme, "seed": seed, "power_dbm": power, "n_spans": n_spans}
            try:
                cfg = LinkConfig(**link_kwargs, n_spans=n_spans, launch_power_dbm=power)
                rng = _ase_rng(seed, scheme, power, n_spans)
                wave = rrc_shape(tx_frame, cfg)
                rx_wave = ssfm_propagate(wave, cfg, rng)
                rx = receiver_chain(rx_wave, tx_frame, cfg)
                rx_trim = ComplexSymbolFrame(rx.symbols[guard:-guard], scheme=scheme)
                cell["snr_db"] = estimate_effective_snr(tx_trim, rx_trim)
                try:
                    theta = moving_window_angle(tx_trim, rx_trim, w)
                    cell["acf"] = acf(theta, tau_max, w).values
                except ValueError as exc:
                    cell["acf"] = None
                    cell["acf_error"] = repr(exc)
            except Exception as exc:  # per-run isolation: record and move on
                cell["error"] = repr(exc)
            out.append(cell)
    return out


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] if isinstance(row[c], str) else _fmt(row[c])
                             for c in columns])


def run(config: ExperimentConfig, out_dir: str | Path, workers: int = 1,
        noiseless: bool = False) -> dict:
    """Execute the full experiment; returns a result dict with `failures`.

    Writes snr_sweep.csv, edi.csv, acf.csv, moments.csv and manifest.json
    into out_dir. CSV rows are sorted on their key columns, so identical
    config + seeds give byte-identical CSVs regardless of worker count.
    """
    t_start = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    link = replace(config.link, noiseless=config.link.noiseless or noiseless)
    link_kwargs = {k: v for k, v in asdict(link).items()
                   if k not in ("n_spans", "launch_power_dbm")}

    schemes = _prepare_schemes(config)

    tasks = [
        (name, seed, data.normalized[seed], link_kwargs, config.power_sweep_dbm,
         config.span_counts, config.guard_symbols, config.acf_w, config.acf_tau_max)
        for name, data in sorted(schemes.items())
        for seed in config.seeds
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cell_lists = list(pool.map(_run_cells, tasks))
    else:
        cell_lists = [_run_cells(t) for t in tasks]
    cells = [c for lst in cell_lists for c in lst]

    failures = [c for c in cells if "error" in c]
    ok_cells = [c for c in cells if "error" not in c]

    snr_rows = sorted(
        ({k: c[k] for k in SNR_COLUMNS} for c in ok_cells),
        key=lambda r: (r["scheme"], r["power_dbm"], r["n_spans"], r["seed"]))
    _write_csv(out_dir / "snr_sweep.csv", SNR_COLUMNS, snr_rows)

    # EDI per scheme on normalized TX symbols
    edi_rows = []
    for name, data in sorted(schemes.items()):
        frames = []
        for seed in config.seeds:
            sym = data.normalized[seed]
            if config.edi_mode == "concatenated":
                frames.append(ComplexSymbolFrame(sym, scheme=name))
            else:
                nb = sym.size // data.block_symbols
                frames.extend(
                    ComplexSymbolFrame(b, scheme=name)
                    for b in sym[:nb * data.block_symbols].reshape(nb, data.block_symbols))
        for window in config.edi_windows:
            edi_rows.append({"scheme": name, "window": window,
                             "psi": edi(frames, window).psi})
    _write_csv(out_dir / "edi.csv", EDI_COLUMNS, edi_rows)

    # ACF at each scheme's empirically optimum power, per span count
    acf_rows = []
    opt_powers: dict[tuple[str, int], float] = {}
    for name in sorted(schemes):
        for n_spans in config.span_counts:
            sub = [c for c in ok_cells if c["scheme"] == name and c["n_spans"] == n_spans]
            if not sub:
                continue
            by_power: dict[float, list[float]] = {}
            for c in sub:
                by_power.setdefault(c["power_dbm"], []).append(c["snr_db"])
            means = sorted(((p, float(np.mean(v))) for p, v in by_power.items()))
            opt = max(means, key=lambda pv: pv[1])[0]
            opt_powers[(name, n_spans)] = opt
            series = [c["acf"] for c in sub
                      if c["power_dbm"] == opt and c.get("acf") is not None]
            if not series:
                continue
            mean_acf = np.mean(np.stack(series), axis=0)
            acf_rows.extend(
                {"scheme": name, "n_spans": n_spans, "power_dbm": opt,
                 "tau": int(tau), "r_theta": float(val)}
                for tau, val in enumerate(mean_acf))
    acf_rows.sort(key=lambda r: (r["scheme"], r["n_spans"], r["tau"]))
    _write_csv(out_dir / "acf.csv", ACF_COLUMNS, acf_rows)

    # symbol-energy moments on the raw (integer-level) blocks, seeds pooled
    moment_rows = []
    for name, data in sorted(schemes.items()):
        blocks = []
        for seed in config.seeds:
            sym = data.raw[seed]
            nb = sym.size // data.block_symbols
            blocks.extend(sym[:nb * data.block_symbols].reshape(nb, data.block_symbols))
        rep = moments([ComplexSymbolFrame(b, scheme=name) for b in blocks])
        moment_rows.append({
            "scheme": name, "mean_energy": rep.mean_energy,
            "energy_variance": rep.energy_variance,
            "kurtosis_ratio": rep.kurtosis_ratio,
            "mean_fourth_sum": rep.mean_fourth_sum})
    _write_csv(out_dir / "moments.csv", MOMENT_COLUMNS, moment_rows)

    manifest = {
        "tool": "shapelab",
        "version": __version__,
        "config_fingerprint": config_fingerprint(config, noiseless),
        "generator": GENERATOR_ID,
        "seed_rule": {
            "tx_stream": [TX_STREAM_TAG, "seed", "scheme_code"],
            "ase": [ASE_TAG, "seed", "scheme_code", "power_mdbm_plus_2pow20", "n_spans"],
            "scheme_codes": SCHEME_CODES,
        },
        "config": _config_echo(config, noiseless),
        "schemes": {
            name: {
                "block_symbols": data.block_symbols,
                "norm_energy": data.norm_energy,
                **_constraints_echo(data.constraints),
            }
            for name, data in sorted(schemes.items())
        },
        "optimum_power_dbm": {f"{k[0]}/{k[1]}spans": v for k, v in sorted(opt_powers.items())},
        "failures": [{k: str(v) for k, v in c.items() if k != "acf"} for c in failures],
        "wall_clock_s": round(time.time() - t_start, 3),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    return {"out_dir": out_dir, "failures": failures, "n_cells": len(cells),
            "opt_powers": opt_powers}


def config_fingerprint(config: ExperimentConfig, noiseless: bool = False) -> str:
    """Stable digest of the effective configuration + code version; lets
    callers recognize an output directory produced by the same settings."""
    blob = json.dumps({"echo": _config_echo(config, noiseless), "version": __version__},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _config_echo(config: ExperimentConfig, noiseless: bool) -> dict:
    echo = {
        "schemes": [
            {k: (str(v) if isinstance(v, Fraction) else list(v) if isinstance(v, tuple) else v)
             for k, v in asdict(s).items() if v is not None}
            for s in config.schemes
        ],
        "link": asdict(config.link),
        "power_sweep_dbm": config.power_sweep_dbm,
        "span_counts": config.span_counts,
        "n_symbols": config.n_symbols,
        "seeds": config.seeds,
        "edi_windows": config.edi_windows,
        "acf": {"w": config.acf_w, "tau_max": config.acf_tau_max},
        "guard_symbols": config.guard_symbols,
        "edi_mode": config.edi_mode,
        "noiseless_override": noiseless,
    }
    return echo


def _constraints_echo(cons: Optional[ShapingConstraints]) -> dict:
    if cons is None:
        return {}
    return {
        "n": cons.n,
        "e_max": cons.e_max,
        "k_max": cons.k_max,
        "band_slope": str(cons.band_slope) if cons.band_slope is not None else None,
        "band_halfwidth": cons.band_halfwidth,
        "input_bits": cons.input_bits,
    }
