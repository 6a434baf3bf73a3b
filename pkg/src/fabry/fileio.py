"""File formats, report schemas, and run manifests.

Numbers in files are exact: decimal strings or "p/q" rational strings,
both of which round-trip losslessly through Fraction.  Coefficient files
are line-delimited JSON records ``{"m":..., "re":..., "im":...}``; exact
components may also be spelled ``{"num": "...", "den": "..."}``.

Reports are single JSON documents carrying a schema version and the run
manifest (command, config snapshot, seeds, input digests) that produced
them; rerunning the recorded command on the same inputs reproduces the
bytes.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from numbers import Rational
from pathlib import Path

import jsonschema

from . import __version__
from .envelope import PwlFunction, SelfSimilarSpec
from .seqcore import CoefficientSequence, GroundTruth

SCHEMA_VERSION = 1


class InputError(ValueError):
    """Malformed input file; carries a line number where applicable."""


# ---------------------------------------------------------------------------
# numbers
# ---------------------------------------------------------------------------


def parse_number(v):
    """Decimal string, rational string, {"num","den"} object, or int."""
    if isinstance(v, dict):
        return Fraction(int(v["num"]), int(v["den"]))
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, bool):
        raise InputError("booleans are not numbers")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        raise InputError("floats are not accepted in files; use decimal strings")
    raise InputError(f"cannot parse number from {v!r}")


def format_number(v) -> str:
    """Exact string form: decimal when the denominator allows, else p/q."""
    if isinstance(v, float):
        return repr(v)
    f = Fraction(v)
    den = f.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1:
        shift = max(twos, fives)
        scaled = f * 10**shift
        digits = str(abs(scaled.numerator)).rjust(shift + 1, "0")
        sign = "-" if f < 0 else ""
        if shift == 0:
            return sign + digits
        return f"{sign}{digits[:-shift]}.{digits[-shift:]}"
    return f"{f.numerator}/{f.denominator}"


# ---------------------------------------------------------------------------
# coefficient files
# ---------------------------------------------------------------------------


def write_coefficients(seq: CoefficientSequence, path):
    lines = []
    for m, (re, im) in enumerate(seq.coeffs):
        rec = {"m": m, "re": format_number(re), "im": format_number(im)}
        lines.append(json.dumps(rec, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n")


def read_coefficients(path) -> CoefficientSequence:
    rows = {}
    text = Path(path).read_text()
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            m = int(rec["m"])
            re = parse_number(rec["re"])
            im = parse_number(rec["im"])
        except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
            raise InputError(f"{path}:{ln}: bad coefficient record: {exc}")
        if m < 0 or m in rows:
            raise InputError(f"{path}:{ln}: duplicate or negative index {m}")
        rows[m] = (re, im)
    if not rows:
        raise InputError(f"{path}: no coefficient records")
    n = max(rows)
    if set(rows) != set(range(n + 1)):
        missing = sorted(set(range(n + 1)) - set(rows))[:4]
        raise InputError(f"{path}: indices not contiguous from 0; missing {missing}")
    return CoefficientSequence(tuple(rows[m] for m in range(n + 1)))


# ---------------------------------------------------------------------------
# ground truth sidecars, PWL and profile documents
# ---------------------------------------------------------------------------


def truth_to_doc(truth: GroundTruth) -> dict:
    doc = {
        "family": truth.family,
        "params": truth.params,
        "seed": truth.seed,
        "expected": truth.expected,
    }
    for key, prof in (
        ("limit_profile_plus", truth.limit_profile_plus),
        ("limit_profile_minus", truth.limit_profile_minus),
    ):
        doc[key] = profile_to_doc(prof) if prof is not None else None
    return doc


def truth_from_doc(doc: dict) -> GroundTruth:
    return GroundTruth(
        family=doc["family"],
        params=doc.get("params", {}),
        seed=doc.get("seed"),
        expected=doc.get("expected"),
        limit_profile_plus=_opt_profile(doc.get("limit_profile_plus")),
        limit_profile_minus=_opt_profile(doc.get("limit_profile_minus")),
    )


def _opt_profile(doc):
    return profile_from_doc(doc) if doc else None


def profile_to_doc(spec: SelfSimilarSpec) -> dict:
    return {
        "pattern": [[format_number(x), format_number(y)] for x, y in spec.pattern],
        "rho": format_number(spec.rho),
        "bands": spec.bands,
    }


def profile_from_doc(doc: dict) -> SelfSimilarSpec:
    return SelfSimilarSpec(
        pattern=tuple(
            (parse_number(x), parse_number(y)) for x, y in doc["pattern"]
        ),
        rho=parse_number(doc["rho"]),
        bands=int(doc.get("bands", 12)),
    )


def pwl_to_doc(f: PwlFunction) -> dict:
    x0, x1 = f.domain
    return {
        "domain": [format_number(x0), format_number(x1)],
        "breakpoints": [[format_number(x), format_number(y)] for x, y in f.knots],
    }


def pwl_from_doc(doc: dict) -> PwlFunction:
    return PwlFunction(
        tuple((parse_number(x), parse_number(y)) for x, y in doc["breakpoints"])
    )


def intervals_from_doc(doc: dict):
    return [(parse_number(a), parse_number(b)) for a, b in doc["intervals"]]


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}")


# ---------------------------------------------------------------------------
# manifests and canonical output
# ---------------------------------------------------------------------------


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_manifest(command, argv, inputs, config: dict, seeds=None) -> dict:
    return {
        "tool": {"name": "fabry", "version": __version__},
        "command": command,
        "argv": list(argv),
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "config": config,
        "seeds": seeds if seeds is not None else {},
    }


def dump_report(doc: dict, path=None) -> str:
    text = json.dumps(doc, indent=1, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------------------
# schemas
# ---------------------------------------------------------------------------

_number_string = {"type": "string"}
_estimate = {
    "type": "object",
    "required": ["value"],
    "properties": {"value": {"type": "number"}},
}
_manifest = {
    "type": "object",
    "required": ["tool", "command", "argv", "inputs", "config"],
    "properties": {
        "tool": {
            "type": "object",
            "required": ["name", "version"],
        },
        "command": {"type": "string"},
        "argv": {"type": "array", "items": {"type": "string"}},
        "inputs": {"type": "object"},
        "config": {"type": "object"},
    },
}

DENSITY_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "schema_version",
        "kind",
        "mode",
        "window_density",
        "max_density",
        "envelope_density",
        "log_average_density",
        "chain_ok",
        "predicted",
        "manifest",
    ],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "density_report"},
        "mode": {"enum": ["sign", "support"]},
        "window_density": {
            "type": "object",
            "properties": {"plus": _estimate, "minus": _estimate},
        },
        "max_density": _estimate,
        "envelope_density": {
            "type": "object",
            "properties": {"plus": _estimate, "minus": _estimate},
        },
        "log_average_density": _estimate,
        "chain_ok": {"type": "boolean"},
        "predicted": {
            "type": "object",
            "required": ["delta", "half_angle"],
            "properties": {
                "delta": {"type": "number"},
                "half_angle": {"type": "number"},
            },
        },
        "manifest": _manifest,
    },
}

PROBE_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "kind", "methods", "detections", "manifest"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "probe_report"},
        "methods": {"type": "array", "items": {"type": "string"}},
        "detections": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["angle", "radius", "confidence", "method"],
                "properties": {
                    "angle": {"type": "number", "exclusiveMinimum": -3.1415926536, "maximum": 3.1415926536},
                    "radius": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "consistent": {"type": ["boolean", "null"]},
        "manifest": _manifest,
    },
}

COVER_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "kind", "selected", "max_multiplicity", "manifest"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "cover_report"},
        "selected": {
            "type": "array",
            "items": {"type": "array", "items": _number_string},
        },
        "max_multiplicity": {"type": "integer", "maximum": 2},
        "manifest": _manifest,
    },
}

_SCHEMAS = {
    "density_report": DENSITY_REPORT_SCHEMA,
    "probe_report": PROBE_REPORT_SCHEMA,
    "cover_report": COVER_REPORT_SCHEMA,
}


def validate_report(doc: dict):
    kind = doc.get("kind")
    if kind not in _SCHEMAS:
        raise InputError(f"unknown report kind {kind!r}")
    jsonschema.validate(doc, _SCHEMAS[kind])
