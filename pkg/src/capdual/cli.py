"""Experiment runner.

`capdual run config.json [--out DIR] [--seed N]` validates the config against
a strict schema, dispatches to the compute modules, and writes two files:
report.csv (one row per k or per case) and summary.json (headline numbers
plus a pass flag judged against the configured tolerances). `capdual list`
prints the experiment catalogue with schemas and the classical statement each
one exercises.

Exit codes: 0 pass, 2 tolerance failure, 1 error (malformed config, bad
instance). Reports are byte-identical across repeated runs of the same
config and seed: no timestamps, floats at 17 significant digits, exact
integers in decimal in columns suffixed "_exact".
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .capacity import capacity_kl_form, theta_capacity
from .core import LogValue, WeightVector, WeightedVector, as_fraction
from .haarmc import UnitaryOrbitVector, mc_invariant_norm, mc_isotypic_norm
from .projection import (LaurentPoly, critical_values, duality_report,
                         laurent_cst_power, prefactor_sequence,
                         projection_norm_table)
from .scaling import perm_dual_report
from .spectrum import (DuffieldFamily, SchurWeylFamily, ldp_report,
                       schur_weyl_measure)

EXPERIMENT_ORDER = ("duality", "prefactor", "perm-dual", "schur-weyl-ldp",
                    "duffield-ldp", "mc-check", "capacity", "laurent")


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# Schemas. Strict throughout: unknown fields are rejected.

_NUMBER_OR_RATIONAL = {"oneOf": [{"type": "number"},
                                 {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}]}
_COMPLEX = {"oneOf": [{"type": "number"},
                      {"type": "string", "pattern": r"^-?\d+(/\d+)?$"},
                      {"type": "array", "items": {"type": "number"},
                       "minItems": 2, "maxItems": 2}]}

_VECTOR_SCHEMA = {
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "terms": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "weight": {"type": "array", "items": {"type": "integer"},
                               "minItems": 1},
                    "amplitude": _COMPLEX,
                },
                "required": ["weight", "amplitude"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["n", "terms"],
    "additionalProperties": False,
}

_THETA_SCHEMA = {"type": "array", "items": _NUMBER_OR_RATIONAL, "minItems": 1}
_MATRIX_SCHEMA = {"type": "array", "minItems": 1,
                  "items": {"type": "array", "items": _NUMBER_OR_RATIONAL,
                            "minItems": 1}}
_WINDOW = {"type": "array", "items": {"type": "number"},
           "minItems": 2, "maxItems": 2}
_PINS = {"type": "array",
         "items": {"type": "array", "minItems": 2, "maxItems": 2,
                   "items": {"type": "number"}}}

_MC_CASE = {
    "type": "object",
    "properties": {
        "group": {"enum": ["torus", "su2", "u2"]},
        "k": {"type": "integer", "minimum": 1, "maximum": 8},
        "vector": _VECTOR_SCHEMA,
        "amplitudes": {"type": "array", "items": _COMPLEX,
                       "minItems": 2, "maxItems": 2},
        "matrix": {"type": "array", "minItems": 2, "maxItems": 2,
                   "items": {"type": "array", "minItems": 2, "maxItems": 2,
                             "items": _COMPLEX}},
        "lam": {"oneOf": [{"type": "integer"},
                          {"type": "array", "items": {"type": "integer"}},
                          {"type": "null"}]},
    },
    "required": ["group", "k"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "experiment": {"enum": list(EXPERIMENT_ORDER)},
        "instance": {"type": "object"},
        "k_max": {"type": "integer", "minimum": 1},
        "ks": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "samples": {"type": "integer", "minimum": 1, "maximum": 10**7},
        "seed": {"type": "integer", "minimum": 0},
        "tolerances": {"type": "object"},
        "output": {"type": "string"},
    },
    "required": ["experiment", "instance"],
    "additionalProperties": False,
}

INSTANCE_SCHEMAS = {
    "duality": {
        "type": "object",
        "properties": {"vector": _VECTOR_SCHEMA, "theta": _THETA_SCHEMA},
        "required": ["vector", "theta"],
        "additionalProperties": False,
    },
    "prefactor": {
        "type": "object",
        "properties": {"vector": _VECTOR_SCHEMA},
        "required": ["vector"],
        "additionalProperties": False,
    },
    "perm-dual": {
        "type": "object",
        "properties": {"matrix": _MATRIX_SCHEMA, "r": _THETA_SCHEMA,
                       "c": _THETA_SCHEMA},
        "required": ["matrix", "r", "c"],
        "additionalProperties": False,
    },
    "schur-weyl-ldp": {
        "type": "object",
        "properties": {"q": _THETA_SCHEMA, "theta": _THETA_SCHEMA},
        "required": ["q", "theta"],
        "additionalProperties": False,
    },
    "duffield-ldp": {
        "type": "object",
        "properties": {"weights": {"type": "array",
                                   "items": {"type": "integer"}, "minItems": 1},
                       "theta": _NUMBER_OR_RATIONAL},
        "required": ["weights", "theta"],
        "additionalProperties": False,
    },
    "mc-check": {
        "type": "object",
        "properties": {"cases": {"type": "array", "items": _MC_CASE,
                                 "minItems": 1}},
        "required": ["cases"],
        "additionalProperties": False,
    },
    "capacity": {
        "type": "object",
        "properties": {"vector": _VECTOR_SCHEMA, "theta": _THETA_SCHEMA},
        "required": ["vector", "theta"],
        "additionalProperties": False,
    },
    "laurent": {
        "type": "object",
        "properties": {"terms": {"type": "array", "minItems": 1,
                                 "items": {"type": "array", "minItems": 2,
                                           "maxItems": 2,
                                           "prefixItems": [{"type": "integer"},
                                                           _COMPLEX],
                                           "items": False}}},
        "required": ["terms"],
        "additionalProperties": False,
    },
}

TOLERANCE_SCHEMAS = {
    "duality": {"type": "object",
                "properties": {"min_final_ratio": {"type": "number"},
                               "weak_duality_slack": {"type": "number"}},
                "additionalProperties": False},
    "prefactor": {"type": "object",
                  "properties": {"target": {"type": "number"},
                                 "abs_tol": {"type": "number"},
                                 "cauchy_window": _WINDOW,
                                 "cauchy_rel_tol": {"type": "number"}},
                  "additionalProperties": False},
    "perm-dual": {"type": "object",
                  "properties": {"weak_duality_slack": {"type": "number"},
                                 "root_window": _WINDOW},
                  "additionalProperties": False},
    "schur-weyl-ldp": {"type": "object",
                       "properties": {"difference_pins": _PINS,
                                      "strict_decrease": {"type": "boolean"}},
                       "additionalProperties": False},
    "duffield-ldp": {"type": "object",
                     "properties": {"difference_pins": _PINS},
                     "additionalProperties": False},
    "mc-check": {"type": "object",
                 "properties": {"max_sigmas": {"type": "number"},
                                "min_fraction": {"type": "number"}},
                 "additionalProperties": False},
    "capacity": {"type": "object",
                 "properties": {"cross_check_tol": {"type": "number"}},
                 "additionalProperties": False},
    "laurent": {"type": "object",
                "properties": {"root_window": _WINDOW,
                               "cap_match_tol": {"type": "number"}},
                "additionalProperties": False},
}

ANCHORS = {
    "duality": ("Theorem (capacity duality): limsup_k |Pi_{k,k theta} "
                "v^{tensor k}|^{2/k} = cap_theta(v)^2."),
    "prefactor": ("Proposition (Laplace prefactor): for unit v with mu(v)=0, "
                  "k^{d/2} |Pi_k v^{tensor k}|^2 converges to a positive limit."),
    "perm-dual": ("Theorem (van der Waerden-type duality): limsup_k "
                  "(k! perm_{kr,kc}(M))^{1/k} = cap_{r,c}(M)^2, with the "
                  "n!/n^n permanent sandwich at uniform margins."),
    "schur-weyl-ldp": ("Theorem (Keyl-Werner): the Schur-Weyl spectrum "
                       "estimator satisfies an LDP with rate D(theta || q)."),
    "duffield-ldp": ("Theorem (Duffield): dimension-weighted tensor-power "
                     "multiplicities satisfy an LDP with the Legendre "
                     "transform of log(chi(e^h)/d) as rate."),
    "mc-check": ("Identity (Haar projection formula): |Pi_{k,lambda} "
                 "v^{tensor k}|^2 = d_lambda Int_K conj(chi_lambda(u)) "
                 "<v, u v>^k du."),
    "capacity": ("Theorem (Kempf-Ness, KL dual): cap_theta(v) = |v| iff "
                 "mu(v) = theta; -log cap_theta^2 = min D(p||q) over "
                 "representations of theta."),
    "laurent": ("Theorem (Duistermaat-van der Kallen, rank 1): the growth "
                "|cst(f^k)|^{1/k} is governed by a critical value of f; "
                "positive-definite f attains it on the positive reals."),
}

DESCRIPTIONS = {
    "duality": "projection-norm growth vs theta-capacity for a torus vector",
    "prefactor": "k^{d/2}-rescaled invariant norms over the period subsemigroup",
    "perm-dual": "exact k! perm_{kr,kc} roots vs the (r,c)-capacity",
    "schur-weyl-ldp": "spectrum-estimation decay rates vs sorted relative entropy",
    "duffield-ldp": "tensor-multiplicity decay rates vs the Legendre rate",
    "mc-check": "Monte Carlo Haar estimates vs exact projection norms",
    "capacity": "theta-capacity with the independent KL-form cross-check",
    "laurent": "constant-term growth of Laurent powers vs critical values",
}


# ---------------------------------------------------------------------------
# Parsing helpers.

def _coeff(value):
    """number | 'p/q' | [re, im] -> exact Fraction or complex."""
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    if isinstance(value, int):
        return Fraction(value)
    return float(value)


def _vector_from_config(obj) -> WeightedVector:
    terms: dict[WeightVector, complex] = {}
    for t in obj["terms"]:
        w = WeightVector(tuple(int(x) for x in t["weight"]))
        if w in terms:
            raise ConfigError(f"duplicate weight {w.coords} in vector terms")
        amp = _coeff(t["amplitude"])
        terms[w] = complex(amp) if isinstance(amp, complex) else float(amp)
    return WeightedVector.from_terms(int(obj["n"]), terms)


def _theta_from_config(values):
    return tuple(as_fraction(v) for v in values)


def _require(config: dict, key: str):
    if key not in config:
        raise ConfigError(f"experiment {config['experiment']!r} requires {key!r}")
    return config[key]


def _fmt_float(x: float) -> str:
    return "%.16e" % float(x)


def _lv_log(lv: LogValue) -> float:
    return lv.log_mag if lv.sign else -math.inf


# ---------------------------------------------------------------------------
# Experiment handlers. Each returns (columns, rows, headline, passed); rows
# contain python scalars/strings ready for the CSV writer.

def _run_duality(config: dict):
    inst = config["instance"]
    tol = config.get("tolerances", {})
    v = _vector_from_config(inst["vector"])
    theta = _theta_from_config(inst["theta"])
    report = duality_report(v, theta, _require(config, "k_max"))
    slack = tol.get("weak_duality_slack", 1e-10)
    min_ratio = tol.get("min_final_ratio", 0.985)
    rows = [(k, _lv_log(ns), rate, lcs, gap)
            for k, ns, rate, lcs, gap in report.rows]
    if not rows:
        raise ConfigError("no k <= k_max makes k*theta integral")
    last = rows[-1]
    final_ratio = math.exp((last[2] - last[3]) / 2) if math.isfinite(last[3]) else math.nan
    gaps = [r[4] for r in rows if not math.isnan(r[4])]
    min_gap = min(gaps) if gaps else math.inf
    passed = bool(final_ratio >= min_ratio and min_gap >= -slack)
    headline = {
        "cap_sq": math.exp(last[3]) if math.isfinite(last[3]) else 0.0,
        "final_ratio": final_ratio,
        "min_gap": min_gap,
        "rows": len(rows),
        "period": report.metadata["period"],
    }
    return (("k", "log_norm_sq_ln", "rate_ln", "log_cap_sq_ln", "gap_ln"),
            rows, headline, passed)


def _run_prefactor(config: dict):
    inst = config["instance"]
    tol = config.get("tolerances", {})
    v = _vector_from_config(inst["vector"])
    ks = config.get("ks")
    seq = prefactor_sequence(v, k_max=config.get("k_max"), ks=ks)
    if not seq:
        raise ConfigError("no admissible powers requested")
    final = seq[-1][1]
    passed = True
    headline: dict = {"final_value": final, "rows": len(seq)}
    if "target" in tol:
        err = abs(final - tol["target"])
        passed = passed and err <= tol.get("abs_tol", 1e-3)
        headline["target"] = tol["target"]
        headline["abs_error"] = err
    if "cauchy_window" in tol:
        lo, hi = tol["cauchy_window"]
        window = [val for k, val in seq if lo <= k <= hi]
        if len(window) < 2:
            raise ConfigError("cauchy_window contains fewer than 2 reported k")
        spread = (max(window) - min(window)) / (sum(window) / len(window))
        passed = passed and spread <= tol.get("cauchy_rel_tol", 0.01)
        headline["cauchy_spread"] = spread
        headline["window_positive"] = bool(min(window) > 0)
        passed = passed and min(window) > 0
    return ("k", "prefactor_value"), list(seq), headline, passed


def _run_perm_dual(config: dict):
    inst = config["instance"]
    tol = config.get("tolerances", {})
    M = [[as_fraction(x) for x in row] for row in inst["matrix"]]
    report = perm_dual_report(M, _theta_from_config(inst["r"]),
                              _theta_from_config(inst["c"]),
                              _require(config, "k_max"))
    slack = tol.get("weak_duality_slack", 1e-9)
    rows = list(report.rows)
    if not rows:
        raise ConfigError("no k <= k_max makes k*(r,c) integral")
    gaps = [r[4] for r in rows if not math.isnan(r[4])]
    min_gap = min(gaps) if gaps else math.inf
    passed = min_gap >= -slack
    headline = {
        "cap_sq": math.exp(rows[0][3]) if math.isfinite(rows[0][3]) else 0.0,
        "min_gap": min_gap,
        "final_root": rows[-1][2],
        "rows": len(rows),
    }
    if "sandwich" in report.metadata:
        s = report.metadata["sandwich"]
        headline["sandwich_lower"] = s["lower"]
        headline["sandwich_perm"] = float(s["perm"])
        headline["sandwich_upper"] = s["upper"]
        holds = bool(s["lower_holds"] and s["upper_holds"])
        headline["sandwich_holds"] = holds
        passed = passed and holds
    if "root_window" in tol:
        lo, hi = tol["root_window"]
        passed = passed and lo <= rows[-1][2] <= hi
    return (("k", "log_kfact_perm_ln", "root_value", "log_cap_sq_ln", "gap_ln"),
            rows, headline, bool(passed))


def _ldp_common(report, tol):
    rows = list(report.rows)
    by_k = {r[0]: r for r in rows}
    passed = True
    pins = {}
    for k, bound in tol.get("difference_pins", []):
        k = int(k)
        if k not in by_k:
            raise ConfigError(f"difference pin at k={k} outside the report")
        diff = by_k[k][4]
        pins[str(k)] = diff
        passed = passed and diff <= bound
    if tol.get("strict_decrease") and len(pins) >= 2:
        ks = sorted(int(k) for k in pins)
        passed = passed and all(pins[str(a)] > pins[str(b)]
                                for a, b in zip(ks, ks[1:]))
    headline = {"analytic_rate": report.metadata["analytic_rate"],
                "rows": len(rows)}
    if pins:
        headline["pinned_differences"] = pins
    return rows, headline, passed


def _run_schur_weyl_ldp(config: dict):
    inst = config["instance"]
    q = tuple(float(as_fraction(t)) for t in inst["q"])
    family = SchurWeylFamily(q)
    theta = [as_fraction(t) for t in inst["theta"]]
    report = ldp_report(family, theta, _require(config, "k_max"))
    rows, headline, passed = _ldp_common(report, config.get("tolerances", {}))
    return (("k", "log_prob_ln", "empirical_rate", "analytic_rate", "difference"),
            rows, headline, bool(passed))


def _run_duffield_ldp(config: dict):
    inst = config["instance"]
    family = DuffieldFamily(tuple(int(w) for w in inst["weights"]))
    report = ldp_report(family, as_fraction(inst["theta"]),
                        _require(config, "k_max"))
    rows, headline, passed = _ldp_common(report, config.get("tolerances", {}))
    return (("k", "log_prob_ln", "empirical_rate", "analytic_rate", "difference"),
            rows, headline, bool(passed))


def _mc_case_exact(case: dict, k: int):
    """Exact counterpart of one mc-check case, or None when not available."""
    group = case["group"]
    if group == "torus":
        v = _vector_from_config(case["vector"])
        lam = case.get("lam")
        coords = tuple(int(x) for x in lam) if lam is not None else (0,) * v.n
        table = projection_norm_table(v, k)
        return table.get(k, coords).to_float()
    if group == "su2":
        lam = case.get("lam")
        if lam is None:
            m = 0
        elif isinstance(lam, int):
            m = lam
        else:
            parts = tuple(lam)
            m = parts[0] - (parts[1] if len(parts) > 1 else 0)
        return 1.0 if m == k else 0.0
    # u2: the lambda-isotypic norm is the Schur-Weyl mass f^lambda s_lambda(q)
    A = np.array([[complex(*e) if isinstance(e, list) else complex(e)
                   for e in row] for row in case["matrix"]])
    sigma = A @ A.conj().T
    q = sorted(np.linalg.eigvalsh(sigma).real.tolist(), reverse=True)
    lam = case.get("lam")
    if lam is None:
        return 0.0 if k >= 1 else 1.0
    parts = tuple(int(x) for x in (lam if isinstance(lam, list) else [lam]))
    pair = (parts[0], parts[1] if len(parts) > 1 else 0)
    if pair[0] + pair[1] != k:
        return 0.0
    for row in schur_weyl_measure(q, k):
        if tuple(row.lam.padded(2)) == pair:
            return row.prob.to_float()
    return 0.0


def _run_mc_check(config: dict):
    inst = config["instance"]
    tol = config.get("tolerances", {})
    samples = config.get("samples", 10**6)
    seed = config.get("seed", 0)
    max_sigmas = tol.get("max_sigmas", 4.0)
    min_fraction = tol.get("min_fraction", 0.95)
    rows = []
    within = 0
    for idx, case in enumerate(inst["cases"]):
        k = int(case["k"])
        group = case["group"]
        lam = case.get("lam")
        if group == "torus":
            instance = _vector_from_config(case["vector"])
        elif group == "su2":
            amps = [complex(*a) if isinstance(a, list) else complex(_coeff(a))
                    for a in case["amplitudes"]]
            instance = UnitaryOrbitVector("su2", tuple(amps))
        else:
            mat = tuple(tuple(complex(*e) if isinstance(e, list) else complex(_coeff(e))
                              for e in row) for row in case["matrix"])
            instance = UnitaryOrbitVector("u2", mat)
        if lam is None:
            est = mc_invariant_norm(instance, k, samples, seed + idx)
        else:
            est = mc_isotypic_norm(instance, k, lam, samples, seed + idx)
        exact = _mc_case_exact(case, k)
        err = abs(est.mean - exact)
        sigmas = err / est.stderr if est.stderr > 0 else (0.0 if err == 0 else math.inf)
        ok = sigmas <= max_sigmas
        within += ok
        rows.append((idx, group, k, est.mean.real, est.mean.imag, est.stderr,
                     exact, err, sigmas, "true" if ok else "false"))
    fraction = within / len(rows)
    passed = fraction >= min_fraction
    headline = {"cases": len(rows), "within": within, "fraction_within": fraction}
    return (("case", "group", "k", "mean_re", "mean_im", "stderr",
             "exact", "abs_error", "sigmas", "within_tolerance"),
            rows, headline, bool(passed))


def _run_capacity(config: dict):
    inst = config["instance"]
    tol = config.get("tolerances", {})
    v = _vector_from_config(inst["vector"])
    theta = _theta_from_config(inst["theta"])
    cap = theta_capacity(v, theta)
    kl = capacity_kl_form(v.normalized(), theta)
    log_cap_unit = (cap.log_cap / LogValue.from_float(math.sqrt(v.norm_sq))
                    if cap.log_cap.sign else LogValue.zero())
    if cap.log_cap.sign:
        diff = abs(2 * log_cap_unit.log_mag - kl.log_mag)
    else:
        diff = 0.0 if kl.sign == 0 else math.inf
    check_tol = tol.get("cross_check_tol", 1e-8)
    passed = diff <= check_tol
    inside = bool(cap.certificate.inside) if cap.certificate else True
    rows = [(_lv_log(cap.log_cap), _lv_log(kl), diff,
             "true" if cap.diverging else "false",
             "true" if inside else "false")]
    headline = {
        "cap": cap.log_cap.to_float(),
        "log_cap": _lv_log(cap.log_cap),
        "kl_log_cap_sq": _lv_log(kl),
        "cross_check_diff": diff,
        "inside": inside,
        "diverging": bool(cap.diverging),
        "iterations": cap.iterations,
    }
    return (("log_cap_ln", "kl_log_cap_sq_ln", "cross_check_diff",
             "diverging", "inside"), rows, headline, bool(passed))


def _run_laurent(config: dict):
    inst = config["instance"]
    tol = config.get("tolerances", {})
    terms = {}
    for e, cval in inst["terms"]:
        if int(e) in terms:
            raise ConfigError(f"duplicate exponent {e} in Laurent terms")
        terms[int(e)] = _coeff(cval)
    f = LaurentPoly(terms)
    k_max = _require(config, "k_max")
    crit = critical_values(f)
    rows = []
    final_root = math.nan
    for k in range(1, k_max + 1):
        cst = laurent_cst_power(f, k)
        mag = abs(complex(cst))
        root = mag ** (1.0 / k) if mag > 0 else 0.0
        exact = str(cst) if isinstance(cst, Fraction) else ""
        rows.append((k, complex(cst).real, complex(cst).imag, root, exact))
        final_root = root
    passed = True
    headline = {
        "max_critical_modulus": crit.max_modulus,
        "critical_values": [[z.real, z.imag] for z in crit.values],
        "final_root": final_root,
    }
    if crit.positive_real_value is not None:
        headline["positive_real_value"] = crit.positive_real_value
        if "cap_match_tol" in tol:
            qs = {e: complex(c) for e, c in f.terms.items()}
            if any(abs(c.imag) > 0 or c.real < 0 for c in qs.values()):
                raise ConfigError("cap_match_tol needs nonnegative coefficients")
            v = WeightedVector.from_terms(
                1, {WeightVector((e,)): math.sqrt(c.real) for e, c in qs.items()})
            cap = theta_capacity(v, (Fraction(0),))
            cap_sq = math.exp(2 * cap.log_cap.log_mag) if cap.log_cap.sign else 0.0
            diff = abs(cap_sq - crit.positive_real_value)
            headline["cap_sq"] = cap_sq
            headline["cap_match_diff"] = diff
            passed = passed and diff <= tol["cap_match_tol"]
    if "root_window" in tol:
        lo, hi = tol["root_window"]
        passed = passed and lo <= final_root <= hi
    return (("k", "cst_re", "cst_im", "root_value", "cst_exact"),
            rows, headline, bool(passed))


HANDLERS = {
    "duality": _run_duality,
    "prefactor": _run_prefactor,
    "perm-dual": _run_perm_dual,
    "schur-weyl-ldp": _run_schur_weyl_ldp,
    "duffield-ldp": _run_duffield_ldp,
    "mc-check": _run_mc_check,
    "capacity": _run_capacity,
    "laurent": _run_laurent,
}


# ---------------------------------------------------------------------------
# Orchestration.

def _load_config(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
        name = config["experiment"]
        jsonschema.validate(config["instance"], INSTANCE_SCHEMAS[name])
        jsonschema.validate(config.get("tolerances", {}), TOLERANCE_SCHEMAS[name])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{path}: {exc.json_path}: {exc.message}") from exc
    return config


def _write_csv(path: Path, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for name, value in zip(columns, row):
            if name.endswith("_exact") or isinstance(value, str):
                cells.append(str(value))
            elif isinstance(value, (int, np.integer)):
                cells.append(str(int(value)))
            else:
                cells.append(_fmt_float(value))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def _json_default(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def run(config: dict, out_dir: Path) -> int:
    name = config["experiment"]
    columns, rows, headline, passed = HANDLERS[name](config)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "report.csv", columns, rows)
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    summary = {
        "experiment": name,
        "version": __version__,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "pass": bool(passed),
        **headline,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2, default=_json_default) + "\n")
    return 0 if passed else 2


def list_experiments() -> str:
    blocks = []
    for name in EXPERIMENT_ORDER:
        schema = json.dumps(INSTANCE_SCHEMAS[name], sort_keys=True,
                            separators=(",", ":"))
        blocks.append(f"{name}\n  {DESCRIPTIONS[name]}\n  anchor: {ANCHORS[name]}"
                      f"\n  instance schema: {schema}")
    return "\n\n".join(blocks)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="capdual",
        description="capacity-duality experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one experiment config")
    runp.add_argument("config", type=Path)
    runp.add_argument("--out", type=Path, default=None,
                      help="output directory (default: config 'output' or ./capdual-out)")
    runp.add_argument("--seed", type=int, default=None,
                      help="override the config seed")
    sub.add_parser("list", help="list experiments, schemas, and anchors")
    args = parser.parse_args(argv)

    if args.command == "list":
        print(list_experiments())
        return 0
    try:
        config = _load_config(args.config)
        if args.seed is not None:
            config["seed"] = args.seed
        out_dir = args.out or Path(config.get("output", "capdual-out"))
        return run(config, out_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, TypeError, RuntimeError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
