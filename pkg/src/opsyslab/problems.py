"""Problem documents and reports: the JSON surface of the lab.

Documents are JSON objects {"kind", "payload", "seed"?, "tolerances"?};
matrices are row-major nested arrays whose entries are numbers or two-
element [re, im] arrays, subspaces are arrays of matrices, states are
density matrices, and algebras are either arrays of spanning matrices or an
integer n meaning the full n x n matrix algebra.  Reports are versioned
("schema": "opsyslab/1") and echo their problem in canonical form, so
serializing a report and re-reading the echo reproduces the document
exactly.  All floats render with 17 significant digits, which round-trips
IEEE doubles bit for bit.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .algebra import MatrixStarAlgebra, OperatorSubspace
from .errors import InputError
from .hermitian import hermitian, op_norm
from .korovkin import korovkin_demo
from .rigidity import (
    ChoiMap,
    InterpolationRequest,
    nosp_check,
    riesz_sequence,
    search_counterexample,
    solve_unperforated_instance,
    ucp_fixed_extent,
)
from .states import (
    StateFunctional,
    extension_interval,
    has_uep,
    is_pure,
    pure_decomposition,
)

SCHEMA = "opsyslab/1"

KINDS = (
    "unperforated",
    "extension-interval",
    "uep",
    "purity",
    "decompose",
    "riesz",
    "boundary",
    "nosp",
    "korovkin",
    "repro",
)


# ----------------------------------------------------------- rendering


def render_value(obj) -> str:
    """Canonical JSON with deterministic float rendering (17 significant
    digits); dict key order is preserved as constructed."""
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if value != value or value in (float("inf"), float("-inf")):
            raise InputError("cannot serialize a non-finite number")
        return format(value, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        inner = ",".join(f"{json.dumps(str(k))}:{render_value(v)}" for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(render_value(v) for v in obj) + "]"
    raise InputError(f"cannot serialize object of type {type(obj).__name__}")


def matrix_to_json(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def matrices_to_json(mats) -> list:
    return [matrix_to_json(M) for M in mats]


# ------------------------------------------------------------- parsing


class _Path:
    def __init__(self, *parts):
        self.parts = list(parts)

    def __truediv__(self, part):
        return _Path(*self.parts, part)

    def __str__(self):
        out = ""
        for p in self.parts:
            out += f"[{p}]" if isinstance(p, int) else ("." + p if out else p)
        return out


def _fail(path, message):
    raise InputError(f"{path}: {message}")


def _parse_entry(value, path) -> complex:
    if isinstance(value, bool):
        _fail(path, "expected a number or [re, im], got a boolean")
    if isinstance(value, (int, float)):
        z = complex(float(value), 0.0)
    elif isinstance(value, list) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        z = complex(float(value[0]), float(value[1]))
    else:
        _fail(path, "expected a number or [re, im]")
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        _fail(path, "entries must be finite")
    return z


def parse_matrix(value, path) -> np.ndarray:
    if not isinstance(value, list) or not value:
        _fail(path, "expected a nonempty matrix (array of rows)")
    n = len(value)
    out = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != n:
            _fail(path / i, f"expected a row of length {n}")
        for j, cell in enumerate(row):
            out[i, j] = _parse_entry(cell, path / i / j)
    try:
        return hermitian(out)
    except InputError as exc:
        _fail(path, str(exc))


def parse_matrix_list(value, path) -> list:
    if not isinstance(value, list) or not value:
        _fail(path, "expected a nonempty array of matrices")
    mats = [parse_matrix(m, path / i) for i, m in enumerate(value)]
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        _fail(path, f"matrices disagree on dimension: {sorted(dims)}")
    return mats


def parse_algebra(value, path, default_dim=None) -> MatrixStarAlgebra:
    if value is None:
        if default_dim is None:
            _fail(path, "an algebra (matrix list or integer dimension) is required")
        return MatrixStarAlgebra.full(default_dim)
    if isinstance(value, bool):
        _fail(path, "expected a matrix list or an integer dimension")
    if isinstance(value, int):
        if not 1 <= value <= 16:
            _fail(path, "full algebra dimension must be between 1 and 16")
        return MatrixStarAlgebra.full(value)
    mats = parse_matrix_list(value, path)
    try:
        return MatrixStarAlgebra.from_basis(mats)
    except InputError as exc:
        _fail(path, f"not a *-closed span: {exc}")


@dataclass
class ProblemDocument:
    kind: str
    payload: dict
    seed: int | None
    settings: sdp.SdpSettings
    canonical: dict = field(repr=False, default_factory=dict)


def _canonical_payload(payload: dict) -> dict:
    """Payload with every matrix rendered in canonical [re, im] form."""

    def convert(v):
        if isinstance(v, np.ndarray):
            return matrix_to_json(v)
        if isinstance(v, list):
            return [convert(x) for x in v]
        if isinstance(v, dict):
            return {k: convert(x) for k, x in v.items() if not str(k).startswith("_")}
        return v

    return convert(payload)


def parse_problem(text: str) -> ProblemDocument:
    """Validate a JSON document; rejections name the offending field."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"document is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InputError("document must be a JSON object")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise InputError(f"kind: expected one of {', '.join(KINDS)}; got {kind!r}")
    payload = raw.get("payload")
    if not isinstance(payload, dict):
        raise InputError("payload: expected an object")
    seed = raw.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise InputError("seed: expected an integer")
    tol = raw.get("tolerances", {})
    if not isinstance(tol, dict):
        raise InputError("tolerances: expected an object")
    settings = sdp.SdpSettings(
        gap_tol=float(tol.get("gap", sdp.DEFAULT_SETTINGS.gap_tol)),
        psd_slack=float(tol.get("psd", sdp.DEFAULT_SETTINGS.psd_slack)),
    )
    parsed = _PARSERS[kind](payload, _Path("payload"))
    canonical = {"kind": kind, "payload": _canonical_payload(parsed)}
    if seed is not None:
        canonical["seed"] = seed
    if tol:
        canonical["tolerances"] = {k: float(v) for k, v in sorted(tol.items())}
    return ProblemDocument(
        kind=kind, payload=parsed, seed=seed, settings=settings, canonical=canonical
    )


def _opt_bool(payload, key, path, default=False):
    v = payload.get(key, default)
    if not isinstance(v, bool):
        _fail(path / key, "expected a boolean")
    return v


def _opt_int(payload, key, path, default=None, minimum=None):
    v = payload.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(path / key, "expected an integer")
    if minimum is not None and v < minimum:
        _fail(path / key, f"expected at least {minimum}")
    return v


def _req_number(payload, key, path):
    v = payload.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(path / key, "expected a number")
    return float(v)


def _parse_unperforated(payload, path):
    out = {
        "S": parse_matrix_list(payload.get("S"), path / "S"),
        "T": parse_matrix_list(payload.get("T"), path / "T"),
        "S_unital": _opt_bool(payload, "S_unital", path),
        "T_unital": _opt_bool(payload, "T_unital", path),
    }
    if ("a" in payload) != ("b" in payload):
        _fail(path, "instance mode needs both a and b; search mode needs neither")
    if "a" in payload:
        out["a"] = parse_matrix(payload["a"], path / "a")
        out["b"] = parse_matrix(payload["b"], path / "b")
    else:
        out["trials"] = _opt_int(payload, "trials", path, default=50, minimum=1)
    return out


def _algebra_field(payload, key, path):
    """Validate an optional algebra field; returns the canonical value
    (absent key when omitted, an int, or a parsed matrix list)."""
    if key not in payload or payload[key] is None:
        return {}
    value = payload[key]
    if isinstance(value, bool):
        _fail(path / key, "expected a matrix list or an integer dimension")
    if isinstance(value, int):
        parse_algebra(value, path / key)
        return {key: value}
    mats = parse_matrix_list(value, path / key)
    parse_algebra(value, path / key)
    return {key: mats}


def _parse_extension(payload, path):
    S = parse_matrix_list(payload.get("S"), path / "S")
    n = S[0].shape[0]
    out = {
        "S": S,
        "S_unital": _opt_bool(payload, "S_unital", path, default=True),
        "phi": parse_matrix(payload.get("phi"), path / "phi"),
        "t": parse_matrix(payload.get("t"), path / "t"),
        "_dim": n,
    }
    out.update(_algebra_field(payload, "ambient", path))
    return out


def _parse_uep(payload, path):
    S = parse_matrix_list(payload.get("S"), path / "S")
    out = {
        "S": S,
        "S_unital": _opt_bool(payload, "S_unital", path, default=True),
        "state": parse_matrix(payload.get("state"), path / "state"),
        "_dim": S[0].shape[0],
    }
    out.update(_algebra_field(payload, "A", path))
    return out


def _parse_state_algebra(payload, path):
    state = parse_matrix(payload.get("state"), path / "state")
    out = {"state": state, "_dim": state.shape[0]}
    out.update(_algebra_field(payload, "A", path))
    return out


def _parse_riesz(payload, path):
    B = parse_matrix_list(payload.get("B"), path / "B")
    out = {
        "B": B,
        "a": parse_matrix(payload.get("a"), path / "a"),
        "lowers": parse_matrix_list(payload.get("lowers"), path / "lowers")
        if payload.get("lowers")
        else [],
        "uppers": parse_matrix_list(payload.get("uppers"), path / "uppers")
        if payload.get("uppers")
        else [],
        "epsilon": _req_number(payload, "epsilon", path),
        "N": _opt_int(payload, "N", path, default=5, minimum=1),
        "auto_bounds": _opt_int(payload, "auto_bounds", path, default=0, minimum=0),
    }
    return out


def _parse_boundary(payload, path):
    S = parse_matrix_list(payload.get("S"), path / "S")
    out = {
        "S": S,
        "S_unital": _opt_bool(payload, "S_unital", path, default=True),
        "_dim": S[0].shape[0],
    }
    out.update(_algebra_field(payload, "algebra", path))
    return out


def _parse_nosp(payload, path):
    pi_images = parse_matrix_list(payload.get("pi_images"), path / "pi_images")
    choi = payload.get("Pi_choi")
    if not isinstance(choi, dict):
        _fail(path / "Pi_choi", "expected an object with dim_in, dim_out, choi")
    dim_in = _opt_int(choi, "dim_in", path / "Pi_choi", minimum=1)
    dim_out = _opt_int(choi, "dim_out", path / "Pi_choi", minimum=1)
    if dim_in is None or dim_out is None:
        _fail(path / "Pi_choi", "dim_in and dim_out are required")
    out = {
        "pi_images": pi_images,
        "Pi_choi": {
            "dim_in": dim_in,
            "dim_out": dim_out,
            "choi": parse_matrix(choi.get("choi"), path / "Pi_choi" / "choi"),
        },
        "_dim": dim_in,
    }
    out.update(_algebra_field(payload, "A", path))
    return out


def _parse_korovkin(payload, path):
    fns = payload.get("functions", [])
    if not isinstance(fns, list) or not all(isinstance(f, str) for f in fns):
        _fail(path / "functions", "expected an array of function names")
    return {
        "n": _opt_int(payload, "n", path, default=100, minimum=1),
        "grid_size": _opt_int(payload, "grid_size", path, default=1001, minimum=2),
        "functions": fns,
    }


def _parse_repro(payload, path):
    ident = payload.get("id")
    if not isinstance(ident, str):
        _fail(path / "id", "expected a case id string")
    return {"id": ident}


_PARSERS = {
    "unperforated": _parse_unperforated,
    "extension-interval": _parse_extension,
    "uep": _parse_uep,
    "purity": _parse_state_algebra,
    "decompose": _parse_state_algebra,
    "riesz": _parse_riesz,
    "boundary": _parse_boundary,
    "nosp": _parse_nosp,
    "korovkin": _parse_korovkin,
    "repro": _parse_repro,
}


# ------------------------------------------------------------- running


def _subspace(mats, unital):
    return OperatorSubspace(ambient_dim=mats[0].shape[0], basis=mats, unital=unital)


def _algebra_from_value(value, default_dim):
    if value is None:
        return MatrixStarAlgebra.full(default_dim)
    if isinstance(value, int):
        return MatrixStarAlgebra.full(value)
    return MatrixStarAlgebra.from_basis(value)


def _instance_results(inst):
    out = {
        "verdict": inst.verdict,
        "max_slack": inst.max_slack,
        "norm_a": op_norm(inst.a),
    }
    if inst.b_prime is not None:
        out["b_prime"] = matrix_to_json(inst.b_prime)
        out["norm_b_prime"] = op_norm(inst.b_prime)
    if inst.certificate is not None:
        out["certificate"] = matrices_to_json(inst.certificate)
    return out


def _run_unperforated(doc: ProblemDocument):
    p = doc.payload
    S = _subspace(p["S"], p["S_unital"])
    T = _subspace(p["T"], p["T_unital"])
    if "a" in p:
        inst = solve_unperforated_instance(S, T, p["a"], p["b"], settings=doc.settings)
        return _instance_results(inst)
    seed = doc.seed if doc.seed is not None else 0
    inst = search_counterexample(S, T, trials=p["trials"], seed=seed, settings=doc.settings)
    if inst is None:
        return {
            "verdict": "NO_COUNTEREXAMPLE",
            "trials": p["trials"],
            "note": "absence of a counterexample is not a proof",
        }
    out = _instance_results(inst)
    out["a"] = matrix_to_json(inst.a)
    out["b"] = matrix_to_json(inst.b)
    return out


def _run_extension(doc: ProblemDocument):
    p = doc.payload
    S = _subspace(p["S"], p["S_unital"])
    ambient = _algebra_from_value(p.get("ambient"), p["_dim"])
    phi = StateFunctional(density=p["phi"], domain=S)
    interval = extension_interval(phi, p["t"], ambient, settings=doc.settings)
    return {
        "min": interval.min,
        "max": interval.max,
        "length": interval.length,
        "witness_min": matrix_to_json(interval.witnesses[0].density),
        "witness_max": matrix_to_json(interval.witnesses[1].density),
    }


def _run_uep(doc: ProblemDocument):
    p = doc.payload
    A = _algebra_from_value(p.get("A"), p["_dim"])
    S = _subspace(p["S"], p["S_unital"])
    psi = StateFunctional(density=p["state"], domain=A)
    result = has_uep(psi, S, settings=doc.settings)
    out = {"holds": result.holds}
    if result.witness is not None:
        out["witness"] = matrix_to_json(result.witness)
        out["interval"] = {"min": result.interval.min, "max": result.interval.max}
    return out


def _run_purity(doc: ProblemDocument):
    p = doc.payload
    A = _algebra_from_value(p.get("A"), p["_dim"])
    phi = StateFunctional(density=p["state"], domain=A)
    return {"pure": is_pure(phi, A)}


def _run_decompose(doc: ProblemDocument):
    p = doc.payload
    A = _algebra_from_value(p.get("A"), p["_dim"])
    phi = StateFunctional(density=p["state"], domain=A)
    dec = pure_decomposition(phi, A)
    return {
        "atoms": [
            {"weight": w, "density": matrix_to_json(atom.density)} for w, atom in dec.atoms
        ]
    }


def _run_riesz(doc: ProblemDocument):
    p = doc.payload
    B = MatrixStarAlgebra.from_basis(p["B"])
    req = InterpolationRequest(
        B=B,
        a=p["a"],
        lowers=p["lowers"],
        uppers=p["uppers"],
        epsilon=p["epsilon"],
        N=p["N"],
        auto_bounds=p["auto_bounds"],
        seed=doc.seed if p["auto_bounds"] else None,
    )
    betas = riesz_sequence(req, settings=doc.settings)
    return {
        "betas": matrices_to_json(betas),
        "norms": [op_norm(b) for b in betas],
        "norm_a": op_norm(p["a"]),
    }


def _run_boundary(doc: ProblemDocument):
    p = doc.payload
    S = _subspace(p["S"], p["S_unital"])
    algebra = None
    if p.get("algebra") is not None:
        algebra = _algebra_from_value(p["algebra"], p["_dim"])
    extent, witness = ucp_fixed_extent(S, algebra=algebra, settings=doc.settings)
    out = {"max_deviation": extent, "boundary": bool(extent <= 1e-6)}
    if witness is not None:
        out["witness_choi"] = matrix_to_json(witness.choi)
    return out


def _run_nosp(doc: ProblemDocument):
    p = doc.payload
    A = _algebra_from_value(p.get("A"), p["_dim"])
    choi = ChoiMap(
        dim_in=p["Pi_choi"]["dim_in"],
        dim_out=p["Pi_choi"]["dim_out"],
        choi=p["Pi_choi"]["choi"],
        unital=True,
    )
    lam = nosp_check(p["pi_images"], choi, A, settings=doc.settings)
    return {"lambda_star": lam, "no_strictly_positive": bool(lam <= 1e-6)}


def _run_korovkin(doc: ProblemDocument):
    p = doc.payload
    table = korovkin_demo(p["n"], p["grid_size"], p["functions"])
    return {"deviations": table, "n": p["n"], "grid_size": p["grid_size"]}


def _run_repro(doc: ProblemDocument):
    from . import repro

    return repro.run_case(doc.payload["id"], settings=doc.settings)


_RUNNERS = {
    "unperforated": _run_unperforated,
    "extension-interval": _run_extension,
    "uep": _run_uep,
    "purity": _run_purity,
    "decompose": _run_decompose,
    "riesz": _run_riesz,
    "boundary": _run_boundary,
    "nosp": _run_nosp,
    "korovkin": _run_korovkin,
    "repro": _run_repro,
}


def run(doc: ProblemDocument) -> dict:
    """Dispatch a parsed document and wrap the outcome in a report."""
    start = time.perf_counter()
    results = _RUNNERS[doc.kind](doc)
    elapsed = time.perf_counter() - start
    provenance = doc.payload.get("id") if doc.kind == "repro" else None
    return {
        "schema": SCHEMA,
        "kind": doc.kind,
        "results": results,
        "provenance": provenance,
        "wall_time_s": elapsed,
        "problem": doc.canonical,
    }
