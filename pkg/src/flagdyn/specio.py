"""System spec and run configuration files.

Specs are YAML with a small, strictly validated schema (see docs/formats.md
for the grammar).  A spec names the dimension and the jump operators, and
optionally a drift Hamiltonian, a seeded block of random dense operators,
run parameters, and a transport plan:

    system:
      n: 3
      operators:
        - jump: {from: 2, to: 1, rate: 25.0}
        - dephasing: {diag: [0.0, 1.5, [0.5, -0.5]]}
        - dense: {real: [[...]], imag: [[...]]}
      rng: {seed: 7, count: 8, magnitude: 100.0}
    run:
      crossing_tol: 1.0e-9
      resolution: 96

A jump entry builds sqrt(rate) |to><from|; complex scalars are written as
[re, im].  Unknown keys anywhere are rejected: a spec that silently ignores
a typo is worse than one that refuses to run.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
import yaml

from .core import LindbladSystem
from .errors import ParseError, ValidationError
from .randsys import SeededStream, random_dense_operators


def _require_keys(mapping: dict, allowed, context: str, required=()):
    if not isinstance(mapping, dict):
        raise ValidationError(f"{context} must be a mapping, got {type(mapping).__name__}")
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ValidationError(f"unknown key(s) {sorted(unknown)} in {context}")
    missing = set(required) - set(mapping)
    if missing:
        raise ValidationError(f"missing key(s) {sorted(missing)} in {context}")


def _as_scalar(value, context: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) for v in value
    ):
        return complex(value[0], value[1])
    raise ValidationError(f"{context}: expected number or [re, im], got {value!r}")


def _as_matrix(entry, n: int, context: str) -> np.ndarray:
    _require_keys(entry, {"real", "imag"}, context, required={"real"})
    real = np.asarray(entry["real"], dtype=float)
    if real.shape != (n, n):
        raise ValidationError(f"{context}: real part must be {n}x{n}, got {real.shape}")
    imag = np.zeros((n, n))
    if "imag" in entry:
        imag = np.asarray(entry["imag"], dtype=float)
        if imag.shape != (n, n):
            raise ValidationError(f"{context}: imag part must be {n}x{n}, got {imag.shape}")
    return real + 1j * imag


@dataclass(frozen=True)
class RngSpec:
    seed: int
    count: int
    magnitude: float


@dataclass(frozen=True)
class SystemSpec:
    """Parsed, validated description of a Lindblad system."""

    dim: int
    operators: tuple
    labels: tuple
    drift: np.ndarray | None
    rng: RngSpec | None

    def build(self, seed_override: int | None = None) -> LindbladSystem:
        ops = list(self.operators)
        if self.rng is not None:
            seed = self.rng.seed if seed_override is None else int(seed_override)
            ops.extend(
                random_dense_operators(seed, self.dim, self.rng.count, self.rng.magnitude)
            )
        return LindbladSystem(dim=self.dim, lindblad_ops=tuple(ops), drift=self.drift)


@dataclass
class RunConfig:
    """Tolerances and resolutions shared by the command-line verbs."""

    crossing_tol: float = 1e-9
    membership_tol: float = 1e-7
    hermiticity_tol: float = 1e-10
    step: float | None = None
    resolution: int = 64
    samples_per_facet: int | None = None
    dedup: bool = True
    checkpoint_stride: int = 0  # 0: choose automatically

    def validate(self):
        for name in ("crossing_tol", "membership_tol", "hermiticity_tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0):
                raise ValidationError(f"run.{name} must be a positive number, got {v!r}")
        if self.step is not None and self.step <= 0:
            raise ValidationError(f"run.step must be positive, got {self.step!r}")
        if not isinstance(self.resolution, int) or self.resolution < 16:
            raise ValidationError(f"run.resolution must be an integer >= 16, got {self.resolution!r}")
        if self.samples_per_facet is not None and (
            not isinstance(self.samples_per_facet, int) or self.samples_per_facet < 2
        ):
            raise ValidationError(
                f"run.samples_per_facet must be an integer >= 2, got {self.samples_per_facet!r}"
            )
        if not isinstance(self.checkpoint_stride, int) or self.checkpoint_stride < 0:
            raise ValidationError(
                f"run.checkpoint_stride must be a non-negative integer, got {self.checkpoint_stride!r}"
            )
        return self


@dataclass(frozen=True)
class PlanSpec:
    """Transport plan block: spectral start, duration, flag path, mode."""

    lambda0: np.ndarray
    duration: float
    mode: str
    path_kind: str
    frames: tuple
    durations: tuple
    times: tuple
    splices: tuple
    deltas: tuple
    seed_i: int | None
    seed_t: int | None


def parse_document(text: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ParseError(f"config is not valid YAML{where}: {exc}") from exc
    if doc is None:
        raise ParseError("config file is empty")
    if not isinstance(doc, dict):
        raise ParseError(f"config root must be a mapping, got {type(doc).__name__}")
    return doc


def load_document(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    return parse_document(text)


def parse_system(doc: dict) -> SystemSpec:
    _require_keys(doc, {"system", "run", "plan"}, "config", required={"system"})
    block = doc["system"]
    _require_keys(block, {"n", "operators", "drift", "rng"}, "system", required={"n"})
    n = block["n"]
    if not isinstance(n, int) or n < 2:
        raise ValidationError(f"system.n must be an integer >= 2, got {n!r}")
    ops = []
    labels = []
    for i, entry in enumerate(block.get("operators", []) or []):
        context = f"system.operators[{i}]"
        if not isinstance(entry, dict) or len(entry) != 1:
            raise ValidationError(f"{context} must be a single-key mapping")
        kind, body = next(iter(entry.items()))
        if kind == "jump":
            _require_keys(body, {"from", "to", "rate"}, context, required={"from", "to", "rate"})
            src, dst, rate = body["from"], body["to"], body["rate"]
            for name, idx in (("from", src), ("to", dst)):
                if not isinstance(idx, int) or not 1 <= idx <= n:
                    raise ValidationError(f"{context}.{name} must be in 1..{n}, got {idx!r}")
            if not isinstance(rate, (int, float)) or rate < 0:
                raise ValidationError(f"{context}.rate must be a non-negative number, got {rate!r}")
            op = np.zeros((n, n), dtype=complex)
            op[dst - 1, src - 1] = np.sqrt(float(rate))
            ops.append(op)
            labels.append(f"jump {src}->{dst} rate {rate}")
        elif kind == "dephasing":
            _require_keys(body, {"diag"}, context, required={"diag"})
            diag = body["diag"]
            if not isinstance(diag, list) or len(diag) != n:
                raise ValidationError(f"{context}.diag must be a list of {n} scalars")
            vals = [_as_scalar(v, f"{context}.diag[{j}]") for j, v in enumerate(diag)]
            ops.append(np.diag(vals))
            labels.append("dephasing")
        elif kind == "dense":
            ops.append(_as_matrix(body, n, context))
            labels.append("dense")
        else:
            raise ValidationError(f"{context}: unknown operator kind {kind!r}")
    drift = None
    if "drift" in block and block["drift"] is not None:
        drift = _as_matrix(block["drift"], n, "system.drift")
    rng = None
    if "rng" in block and block["rng"] is not None:
        _require_keys(block["rng"], {"seed", "count", "magnitude"}, "system.rng",
                      required={"seed", "count", "magnitude"})
        seed, count, mag = block["rng"]["seed"], block["rng"]["count"], block["rng"]["magnitude"]
        if not isinstance(seed, int) or seed < 0:
            raise ValidationError(f"system.rng.seed must be a non-negative integer, got {seed!r}")
        if not isinstance(count, int) or count < 1:
            raise ValidationError(f"system.rng.count must be a positive integer, got {count!r}")
        if not isinstance(mag, (int, float)) or mag <= 0:
            raise ValidationError(f"system.rng.magnitude must be positive, got {mag!r}")
        rng = RngSpec(seed=seed, count=count, magnitude=float(mag))
    return SystemSpec(dim=n, operators=tuple(ops), labels=tuple(labels), drift=drift, rng=rng)


def parse_run(doc: dict) -> RunConfig:
    block = doc.get("run", {}) or {}
    allowed = {f.name for f in fields(RunConfig)}
    _require_keys(block, allowed, "run")
    cfg = RunConfig(**block)
    return cfg.validate()


def parse_plan(doc: dict, n: int) -> PlanSpec:
    if "plan" not in doc or doc["plan"] is None:
        raise ValidationError("this command needs a plan block in the config")
    block = doc["plan"]
    _require_keys(
        block,
        {"lambda0", "duration", "mode", "flag_path", "deltas", "rho_i_seed", "rho_t_seed"},
        "plan",
        required={"lambda0", "duration", "flag_path"},
    )
    lam0 = np.asarray(block["lambda0"], dtype=float)
    if lam0.shape != (n,):
        raise ValidationError(f"plan.lambda0 must have {n} entries, got {lam0.shape}")
    if lam0.min() < 0 or abs(lam0.sum() - 1.0) > 1e-9:
        raise ValidationError("plan.lambda0 must be a probability vector")
    duration = block["duration"]
    if not isinstance(duration, (int, float)) or duration <= 0:
        raise ValidationError(f"plan.duration must be positive, got {duration!r}")
    mode = block.get("mode", "roundtrip")
    if mode not in ("rollout", "roundtrip", "bookend"):
        raise ValidationError(f"plan.mode must be rollout, roundtrip, or bookend, got {mode!r}")
    path = block["flag_path"]
    _require_keys(
        path, {"kind", "frames", "durations", "times", "splices"}, "plan.flag_path",
        required={"kind", "frames"},
    )
    kind = path["kind"]
    if kind not in ("constant", "geodesic", "sampled"):
        raise ValidationError(
            f"plan.flag_path.kind must be constant, geodesic, or sampled, got {kind!r}"
        )
    frames = tuple(path["frames"])
    if kind == "constant" and len(frames) != 1:
        raise ValidationError("constant flag path takes exactly one frame")
    if kind in ("geodesic", "sampled") and len(frames) < 2:
        raise ValidationError(f"{kind} flag path needs at least two frames")
    durations = tuple(path.get("durations", ()) or ())
    times = tuple(path.get("times", ()) or ())
    splices = tuple(path.get("splices", ()) or ())
    deltas = tuple(block.get("deltas", (0.1, 0.05, 0.025)) or ())
    if mode == "bookend" and not deltas:
        raise ValidationError("bookend mode needs a non-empty plan.deltas list")
    seed_i = block.get("rho_i_seed")
    seed_t = block.get("rho_t_seed")
    return PlanSpec(
        lambda0=lam0,
        duration=float(duration),
        mode=mode,
        path_kind=kind,
        frames=frames,
        durations=durations,
        times=times,
        splices=splices,
        deltas=deltas,
        seed_i=seed_i,
        seed_t=seed_t,
    )


def resolve_frame(entry, n: int, base_frame: np.ndarray, context: str) -> np.ndarray:
    """Frame spec: "identity", "iota", {haar_seed: k}, {permute_iota: [..]},
    or an explicit {real, imag} matrix."""
    if entry == "identity":
        return np.eye(n, dtype=complex)
    if entry == "iota":
        return base_frame.copy()
    if isinstance(entry, dict) and set(entry) == {"haar_seed"}:
        return SeededStream(int(entry["haar_seed"])).haar_unitary(n)
    if isinstance(entry, dict) and set(entry) == {"permute_iota"}:
        perm = entry["permute_iota"]
        if sorted(perm) != list(range(1, n + 1)):
            raise ValidationError(f"{context}: permute_iota must permute 1..{n}")
        return base_frame[:, [p - 1 for p in perm]]
    if isinstance(entry, dict):
        return _as_matrix(entry, n, context)
    raise ValidationError(f"{context}: cannot interpret frame spec {entry!r}")
