"""Deterministic construction of dictionaries and sparse ground-truth
instances, plus the text/JSON file formats.

Generation is pure given (parameters, seed): the same seed reproduces the
same bytes. Seeds feed ``numpy.random.default_rng``, so reproducibility
across implementations rests on serialised files, not on seed portability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import Dictionary, SupportSet, as_vector, mat_vec

GENERATOR_KINDS = ("identity_hadamard", "random_unit", "from_file")

# Loader bands for column norms: within LOAD_PASS_TOL entries are taken
# verbatim (round-trip identity), between the two the column is
# renormalised (fixing serialisation drift is the loader's job), beyond
# LOAD_REJECT_TOL the file is rejected as bad data.
LOAD_PASS_TOL = 1e-10
LOAD_REJECT_TOL = 1e-8


class DictionaryFileError(ValueError):
    """A dictionary file is malformed or fails validation."""


@dataclass(frozen=True)
class SparseInstance:
    """Ground-truth coefficients, their support, and the signal they generate.

    Invariants: the support is exactly the set of nonzero coefficients, has
    size m, and ``y`` equals the dictionary image of ``x_star`` (the
    factories compute it that way; ``verify_against`` re-checks to 1e-12
    relative).
    """

    dictionary_ref: str
    x_star: np.ndarray
    support: SupportSet
    y: np.ndarray
    x_star_l1: float
    m: int
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "x_star", as_vector(self.x_star, name="x_star"))
        object.__setattr__(self, "y", as_vector(self.y, name="y"))
        if SupportSet.from_nonzeros(self.x_star) != self.support:
            raise ValueError("support does not match the nonzero entries of x_star")
        if len(self.support) != self.m:
            raise ValueError(f"support size {len(self.support)} != m = {self.m}")
        if abs(self.x_star_l1 - float(np.abs(self.x_star).sum())) > 1e-12 * max(self.x_star_l1, 1.0):
            raise ValueError("x_star_l1 does not match x_star")

    def verify_against(self, D: Dictionary) -> None:
        """Assert y = Phi x_star to 1e-12 relative."""
        y = mat_vec(D, self.x_star)
        err = float(np.linalg.norm(self.y - y))
        if err > 1e-12 * max(float(np.linalg.norm(y)), 1.0):
            raise ValueError(f"y deviates from the dictionary image of x_star by {err:.3e}")


def hadamard_matrix(d: int) -> np.ndarray:
    """The +/-1 Hadamard matrix of order d (a power of two), by doubling."""
    if d < 1 or d & (d - 1):
        raise ValueError(f"Hadamard order must be a power of two, got {d}")
    h = np.ones((1, 1))
    while h.shape[0] < d:
        h = np.block([[h, h], [h, -h]])
    return h


def build_identity_hadamard(d: int) -> Dictionary:
    """The d x 2d dictionary [I_d | H_d / sqrt(d)].

    A standard incoherent test family: its coherence is exactly 1/sqrt(d),
    so the guaranteed-recovery sparsity grows with d in a controlled way.
    """
    if d < 1 or d & (d - 1):
        raise ValueError(f"identity+Hadamard needs d a power of two, got {d}")
    atoms = np.hstack([np.eye(d), hadamard_matrix(d) / np.sqrt(d)])
    return Dictionary(atoms)


def build_random_unit(d: int, n: int, seed: int) -> Dictionary:
    """n atoms drawn standard-normal in R^d and normalised to unit length."""
    if d < 1 or n < 1:
        raise ValueError(f"dimensions must be positive, got d={d}, n={n}")
    rng = np.random.default_rng(seed)
    atoms = rng.standard_normal((d, n))
    norms = np.linalg.norm(atoms, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("degenerate zero-norm draw")
    return Dictionary(atoms / norms)


def sample_instance(
    D: Dictionary,
    m: int,
    coeff_min_abs: float = 0.1,
    coeff_max_abs: float = 1.0,
    seed: int = 0,
    dictionary_ref: str = "",
) -> SparseInstance:
    """Draw an m-sparse ground truth over D and the signal it generates.

    The support is uniform without replacement; each nonzero coefficient is
    uniform over +/-[coeff_min_abs, coeff_max_abs] (magnitudes bounded away
    from zero keep the sparsity level numerically meaningful).
    """
    if m > D.n:
        raise ValueError(f"sparsity m={m} exceeds the number of atoms n={D.n}")
    if m < 0:
        raise ValueError(f"sparsity must be nonnegative, got {m}")
    if not 0 < coeff_min_abs <= coeff_max_abs:
        raise ValueError(
            f"need 0 < coeff_min_abs <= coeff_max_abs, got [{coeff_min_abs}, {coeff_max_abs}]"
        )
    rng = np.random.default_rng(seed)
    x_star = np.zeros(D.n)
    if m > 0:
        idx = np.sort(rng.choice(D.n, size=m, replace=False))
        magnitudes = rng.uniform(coeff_min_abs, coeff_max_abs, size=m)
        signs = rng.choice([-1.0, 1.0], size=m)
        x_star[idx] = signs * magnitudes
    return SparseInstance(
        dictionary_ref=dictionary_ref,
        x_star=x_star,
        support=SupportSet.from_nonzeros(x_star),
        y=mat_vec(D, x_star),
        x_star_l1=float(np.abs(x_star).sum()),
        m=m,
        seed=seed,
    )


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for a dictionary plus instance family.

    kind is one of ``identity_hadamard`` (needs d a power of two, n = 2d),
    ``random_unit`` or ``from_file`` (needs ``path``).
    """

    kind: str
    d: int
    n: int
    m: int
    coeff_min_abs: float = 0.1
    coeff_max_abs: float = 1.0
    seed: int = 0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}, expected one of {GENERATOR_KINDS}")
        if self.m > self.d:
            raise ValueError(f"sparsity m={self.m} exceeds the ambient dimension d={self.d}")
        if self.kind == "identity_hadamard":
            if self.d < 1 or self.d & (self.d - 1):
                raise ValueError(f"identity_hadamard needs d a power of two, got {self.d}")
            if self.n != 2 * self.d:
                raise ValueError(f"identity_hadamard has n = 2d = {2 * self.d}, got n={self.n}")
        if self.kind == "from_file" and not self.path:
            raise ValueError("from_file generator needs a path")

    def build_dictionary(self) -> Dictionary:
        if self.kind == "identity_hadamard":
            return build_identity_hadamard(self.d)
        if self.kind == "random_unit":
            return build_random_unit(self.d, self.n, self.seed)
        D = load_dictionary(self.path)
        if (D.d, D.n) != (self.d, self.n):
            raise ValueError(
                f"dictionary file is {D.d}x{D.n} but the generator declares {self.d}x{self.n}"
            )
        return D

    def reference(self) -> str:
        if self.kind == "from_file":
            return f"from_file({self.path})"
        return f"{self.kind}(d={self.d}, n={self.n}, seed={self.seed})"

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "d": self.d,
            "n": self.n,
            "m": self.m,
            "coeff_min_abs": self.coeff_min_abs,
            "coeff_max_abs": self.coeff_max_abs,
            "seed": self.seed,
            "path": self.path,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "GeneratorSpec":
        return cls(
            kind=obj["kind"],
            d=int(obj["d"]),
            n=int(obj["n"]),
            m=int(obj["m"]),
            coeff_min_abs=float(obj.get("coeff_min_abs", 0.1)),
            coeff_max_abs=float(obj.get("coeff_max_abs", 1.0)),
            seed=int(obj.get("seed", 0)),
            path=obj.get("path"),
        )


def save_dictionary(D: Dictionary, path) -> None:
    """Write the text format: a ``d n`` header, then d rows of n entries.

    Entries are printed with 17 significant digits, which round-trips
    float64 exactly.
    """
    lines = [f"{D.d} {D.n}"]
    for row in D.atoms:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dictionary(path) -> Dictionary:
    """Read the text format written by ``save_dictionary``.

    Columns whose norm is within ``LOAD_PASS_TOL`` of 1 are taken verbatim,
    so a save/load round trip reproduces entries exactly. Drift up to
    ``LOAD_REJECT_TOL`` is renormalised away; anything worse is rejected.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DictionaryFileError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 2:
        raise DictionaryFileError(f"{path}: header must be 'd n', got {lines[0]!r}")
    try:
        d, n = int(header[0]), int(header[1])
    except ValueError as exc:
        raise DictionaryFileError(f"{path}: non-integer header {lines[0]!r}") from exc
    if d < 1 or n < 1:
        raise DictionaryFileError(f"{path}: header dimensions must be positive, got {d}x{n}")
    if len(lines) - 1 != d:
        raise DictionaryFileError(f"{path}: header declares {d} rows, file has {len(lines) - 1}")
    rows = []
    for ln_no, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != n:
            raise DictionaryFileError(f"{path}:{ln_no}: expected {n} entries, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise DictionaryFileError(f"{path}:{ln_no}: non-numeric entry") from exc
    atoms = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(atoms)):
        raise DictionaryFileError(f"{path}: non-finite entries")
    norms = np.linalg.norm(atoms, axis=0)
    deviation = np.abs(norms - 1.0)
    bad = np.flatnonzero(deviation > LOAD_REJECT_TOL)
    if bad.size:
        raise DictionaryFileError(
            f"{path}: columns {bad.tolist()} have non-unit norms "
            f"(worst |norm - 1| = {deviation.max():.3e}); normalise each column "
            "to unit l2 length before saving"
        )
    drifted = (deviation > LOAD_PASS_TOL) & (deviation <= LOAD_REJECT_TOL)
    if np.any(drifted):
        atoms[:, drifted] /= norms[drifted]
    return Dictionary(atoms)


def save_instance(inst: SparseInstance, path) -> None:
    """Write the JSON instance format (supports and coefficients only).

    The signal is not stored: loaders recompute y from the dictionary, which
    re-establishes the defining identity exactly.
    """
    obj = {
        "d": int(inst.y.shape[0]),
        "n": int(inst.x_star.shape[0]),
        "m": inst.m,
        "support": list(inst.support),
        "x_star_values": [float(inst.x_star[i]) for i in inst.support],
        "generator": inst.dictionary_ref,
        "seed": inst.seed,
    }
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def load_instance(path, D: Dictionary) -> SparseInstance:
    """Read an instance file and rebuild the signal against ``D``."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("d", "n", "m", "support", "x_star_values"):
        if key not in obj:
            raise ValueError(f"{path}: missing field {key!r}")
    if (obj["d"], obj["n"]) != (D.d, D.n):
        raise ValueError(
            f"{path}: instance is for a {obj['d']}x{obj['n']} dictionary, "
            f"got a {D.d}x{D.n} one"
        )
    support = obj["support"]
    values = obj["x_star_values"]
    if len(support) != len(values) or len(support) != obj["m"]:
        raise ValueError(f"{path}: support/value lengths disagree with m")
    x_star = np.zeros(D.n)
    for i, v in zip(support, values):
        if not 0 <= int(i) < D.n:
            raise ValueError(f"{path}: support index {i} out of range")
        if v == 0.0:
            raise ValueError(f"{path}: zero coefficient listed at support index {i}")
        x_star[int(i)] = float(v)
    return SparseInstance(
        dictionary_ref=obj.get("generator", ""),
        x_star=x_star,
        support=SupportSet.from_nonzeros(x_star),
        y=mat_vec(D, x_star),
        x_star_l1=float(np.abs(x_star).sum()),
        m=int(obj["m"]),
        seed=obj.get("seed"),
    )
