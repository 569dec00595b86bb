"""Synthetic problem instances and their bit-exact file format.

An instance bundles the five constraint sets' parameters: the sphere index
set S with amplitudes b, the low-frequency ball radius, the binary support
mask, the sparsity budget, and (for synthetic data) the ground-truth field
the amplitudes were sampled from.

Persistence uses two files per instance:

  <name>.manifest.json   portable, diff-able metadata: format version, dims,
                         config, provenance, and one descriptor per array
                         (name, dtype, shape, byte offset/length, CRC-32)
  <name>.arrays.bin      concatenated raw array blobs, little-endian, C order
                         (z index fastest); float64 throughout, complex as
                         interleaved (re, im) float64 pairs, sphere indexes
                         as uint32 triples

Adapters for laboratory datasets are out of scope here; to feed external
data in, write the same manifest with arrays ``supp_mask``,
``sphere_indexes``, ``sphere_amplitudes`` (and optionally ``truth``) plus the
``config`` block, and `load_instance` will accept it.
"""

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constraints import (
    AmplitudeConstraint,
    ConstraintParams,
    FeasibilityProblem,
    LowFreqConstraint,
    SphereData,
    SparseRealConstraint,
    SupportConstraint,
    SymmetryConstraint,
    project_sr,
    project_supp,
    project_sym,
)
from .fields import dft3_forward, dft3_inverse, freq_radius_grid, max_freq_radius, norm

__all__ = [
    "FORMAT_VERSION",
    "InstanceConfigError",
    "InstanceIOError",
    "VersionMismatchError",
    "TruncatedFileError",
    "ChecksumError",
    "ManifestError",
    "InstanceConfig",
    "Provenance",
    "ProblemInstance",
    "box_mask",
    "generate_instance",
    "save_instance",
    "load_instance",
]

FORMAT_VERSION = 1


class InstanceConfigError(ValueError):
    """Invalid instance configuration (bad radii, empty shells, ...)."""


class InstanceIOError(Exception):
    """Base class for instance file errors."""


class VersionMismatchError(InstanceIOError):
    pass


class TruncatedFileError(InstanceIOError):
    pass


class ChecksumError(InstanceIOError):
    pass


class ManifestError(InstanceIOError):
    pass


@dataclass(frozen=True)
class InstanceConfig:
    """Knobs of the synthetic instance generator.

    Sphere radii and the LF radius are in frequency-voxel units on the
    centered grid; support half-widths are in object-voxel units about the
    grid center.  ``sparsity`` should be a multiple of the mirror-orbit size
    (8 for all-even dims), otherwise hard thresholding can split an orbit of
    equal magnitudes and break the ground truth's symmetry.

    ``truth_smooth_radius`` and ``truth_window_width`` shape the random draw
    the ground truth is built from: a Gaussian spectral envelope of the given
    radius and a Gaussian spatial window of the given width (both off at 0).
    Shaped truths are smooth localized blobs, the regime where the
    feasibility model is nearly consistent and reconstructions from random
    restarts have a reachable global basin; unshaped white-noise truths give
    flat spectra and a much harder, strongly inconsistent model.
    """

    dims: tuple
    n_spheres: int
    sphere_radii: tuple
    lf_radius: float
    supp_half_widths: tuple
    sparsity: int
    shell_half_width: float = 0.5
    truth_seed: int = 0
    truth_smooth_radius: float = 0.0
    truth_window_width: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "sphere_radii", tuple(float(r) for r in self.sphere_radii))
        object.__setattr__(self, "supp_half_widths", tuple(float(h) for h in self.supp_half_widths))
        if len(self.dims) != 3 or any(n < 1 for n in self.dims):
            raise InstanceConfigError(f"dims must be three positive integers, got {self.dims}")
        if self.n_spheres != len(self.sphere_radii):
            raise InstanceConfigError("n_spheres must equal the number of radii")
        if len(set(self.sphere_radii)) != len(self.sphere_radii):
            raise InstanceConfigError("sphere radii must be distinct")
        if any(r <= 0 for r in self.sphere_radii):
            raise InstanceConfigError("sphere radii must be positive")
        rmax = max_freq_radius(self.dims)
        if any(r > rmax for r in self.sphere_radii):
            raise InstanceConfigError(f"sphere radii must not exceed the grid maximum {rmax:.3f}")
        if self.shell_half_width <= 0:
            raise InstanceConfigError("shell half-width must be positive")
        if self.lf_radius < 0:
            raise InstanceConfigError("lf_radius must be nonnegative")
        if self.truth_smooth_radius < 0 or self.truth_window_width < 0:
            raise InstanceConfigError("truth shaping parameters must be nonnegative")
        mask = box_mask(self.dims, self.supp_half_widths)
        interior = int(mask.sum())
        if not 0 < int(self.sparsity) <= interior:
            raise InstanceConfigError(
                f"sparsity must be in (0, {interior}] for this support mask")

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "n_spheres": self.n_spheres,
            "sphere_radii": list(self.sphere_radii),
            "lf_radius": self.lf_radius,
            "supp_half_widths": list(self.supp_half_widths),
            "sparsity": self.sparsity,
            "shell_half_width": self.shell_half_width,
            "truth_seed": self.truth_seed,
            "truth_smooth_radius": self.truth_smooth_radius,
            "truth_window_width": self.truth_window_width,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstanceConfig":
        try:
            return cls(
                dims=tuple(d["dims"]),
                n_spheres=int(d["n_spheres"]),
                sphere_radii=tuple(d["sphere_radii"]),
                lf_radius=float(d["lf_radius"]),
                supp_half_widths=tuple(d["supp_half_widths"]),
                sparsity=int(d["sparsity"]),
                shell_half_width=float(d["shell_half_width"]),
                truth_seed=int(d["truth_seed"]),
                truth_smooth_radius=float(d.get("truth_smooth_radius", 0.0)),
                truth_window_width=float(d.get("truth_window_width", 0.0)),
            )
        except KeyError as err:
            raise InstanceConfigError(f"missing config field {err}") from err


@dataclass(frozen=True)
class Provenance:
    format_version: int = FORMAT_VERSION
    seed: int = 0
    created: str | None = None


@dataclass
class ProblemInstance:
    """Constraint parameters plus optional ground truth and provenance."""

    config: InstanceConfig
    sphere_data: SphereData
    supp_mask: np.ndarray
    truth: np.ndarray | None = None
    provenance: Provenance = field(default_factory=Provenance)

    @property
    def dims(self) -> tuple:
        return self.config.dims

    @property
    def data_fraction(self) -> float:
        """Fraction of frequency voxels carrying amplitude data."""
        return len(self.sphere_data) / float(np.prod(self.dims))

    def params(self) -> ConstraintParams:
        return ConstraintParams(
            lf_radius=self.config.lf_radius,
            supp_mask=self.supp_mask,
            sparsity=self.config.sparsity,
            dims=self.dims,
        )

    def problem(self) -> FeasibilityProblem:
        """The five-set cycle (SYM, SR, SUPP, LF, M) of this instance."""
        params = self.params()
        sets = (
            SymmetryConstraint(),
            SparseRealConstraint(params.sparsity),
            SupportConstraint(params.supp_mask),
            LowFreqConstraint(self.dims, params.lf_radius),
            AmplitudeConstraint(self.sphere_data),
        )
        return FeasibilityProblem(sets=sets, dims=self.dims,
                                  norm_b=self.sphere_data.norm_b, truth=self.truth)


def box_mask(dims, half_widths) -> np.ndarray:
    """Centered box mask: voxel i is inside when |i - (N-1)/2| <= half width.

    Centering on (N-1)/2 makes the box invariant under all three index
    reversals, which the symmetry set requires of the support mask.
    """
    axes = []
    for n, h in zip(dims, half_widths):
        c = (n - 1) / 2.0
        axes.append(np.abs(np.arange(n) - c) <= h)
    mask = (axes[0][:, None, None] & axes[1][None, :, None] & axes[2][None, None, :])
    return mask.astype(np.float64)


def shell_indexes(dims, radius: float, half_width: float) -> np.ndarray:
    """FFT-grid indexes whose centered frequency radius is within the shell."""
    r = freq_radius_grid(dims)
    sel = np.abs(r - radius) <= half_width
    return np.argwhere(sel)


def generate_instance(cfg: InstanceConfig) -> ProblemInstance:
    """Draw a ground truth in SYM, SUPP and SR, then sample its amplitudes.

    The truth is built by symmetrizing, masking and sparsifying a random
    field, in that order, and rescaling to unit norm; the amplitudes b are
    the exact Fourier magnitudes of the truth on the union of the requested
    shells.  Construction is fully determined by the config.
    """
    dims = cfg.dims
    mask = box_mask(dims, cfg.supp_half_widths)
    rng = np.random.default_rng(cfg.truth_seed)
    u = rng.standard_normal(dims) + 1j * rng.standard_normal(dims)
    if cfg.truth_smooth_radius > 0:
        envelope = np.exp(-((freq_radius_grid(dims) / cfg.truth_smooth_radius) ** 2))
        u = dft3_inverse(dft3_forward(u) * envelope)
    if cfg.truth_window_width > 0:
        axes = [np.abs(np.arange(n) - (n - 1) / 2.0) for n in dims]
        window = np.exp(-(axes[0][:, None, None] ** 2 + axes[1][None, :, None] ** 2
                          + axes[2][None, None, :] ** 2) / (2.0 * cfg.truth_window_width ** 2))
        u = u * window
    u = project_sym(u)
    u = project_supp(u, mask)
    u = project_sr(u, cfg.sparsity)
    nu = norm(u)
    if nu == 0.0:
        raise InstanceConfigError("degenerate ground truth (all zeros)")
    u = u / nu

    for name, proj in (("SYM", project_sym),
                       ("SUPP", lambda v: project_supp(v, mask)),
                       ("SR", lambda v: project_sr(v, cfg.sparsity))):
        if norm(proj(u) - u) > 1e-12:
            raise InstanceConfigError(
                f"ground truth left the {name} set during construction; "
                "use a sparsity that is a multiple of the mirror-orbit size")

    uhat = dft3_forward(u)
    rows = []
    for radius in cfg.sphere_radii:
        idx = shell_indexes(dims, radius, cfg.shell_half_width)
        if idx.shape[0] == 0:
            raise InstanceConfigError(
                f"shell at radius {radius} with half-width {cfg.shell_half_width} is empty")
        rows.append(idx)
    indexes = np.unique(np.concatenate(rows, axis=0), axis=0)
    amplitudes = np.abs(uhat[indexes[:, 0], indexes[:, 1], indexes[:, 2]])
    data = SphereData(indexes=indexes, amplitudes=amplitudes)
    if data.norm_b == 0.0:
        raise InstanceConfigError("all sampled amplitudes are zero")

    return ProblemInstance(
        config=cfg,
        sphere_data=data,
        supp_mask=mask,
        truth=u,
        provenance=Provenance(seed=cfg.truth_seed),
    )


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

_DTYPES = {"float64": "<f8", "complex128": "<c16", "uint32": "<u4"}


def _paths(path) -> tuple:
    base = str(path)
    for suffix in (".manifest.json", ".arrays.bin"):
        if base.endswith(suffix):
            base = base[: -len(suffix)]
    return Path(base + ".manifest.json"), Path(base + ".arrays.bin")


def _array_entries(inst: ProblemInstance) -> list:
    entries = [
        ("supp_mask", "float64", np.ascontiguousarray(inst.supp_mask, dtype="<f8")),
        ("sphere_indexes", "uint32",
         np.ascontiguousarray(inst.sphere_data.indexes, dtype="<u4")),
        ("sphere_amplitudes", "float64",
         np.ascontiguousarray(inst.sphere_data.amplitudes, dtype="<f8")),
    ]
    if inst.truth is not None:
        entries.append(("truth", "complex128",
                        np.ascontiguousarray(inst.truth, dtype="<c16")))
    return entries


def save_instance(path, inst: ProblemInstance) -> None:
    """Write ``<path>.manifest.json`` and ``<path>.arrays.bin``."""
    manifest_path, arrays_path = _paths(path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    blob = bytearray()
    descriptors = []
    for name, dtype, arr in _array_entries(inst):
        raw = arr.tobytes(order="C")
        descriptors.append({
            "name": name,
            "dtype": dtype,
            "shape": list(arr.shape),
            "offset": len(blob),
            "nbytes": len(raw),
            "crc32": zlib.crc32(raw) & 0xFFFFFFFF,
        })
        blob.extend(raw)
    manifest = {
        "format_version": inst.provenance.format_version,
        "layout": "z-fastest-row-major",
        "dims": list(inst.dims),
        "config": inst.config.to_dict(),
        "provenance": {
            "seed": inst.provenance.seed,
            "created": inst.provenance.created,
        },
        "arrays": descriptors,
    }
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    arrays_path.write_bytes(bytes(blob))


def _read_array(blob: bytes, desc: dict) -> np.ndarray:
    try:
        name = desc["name"]
        dtype = _DTYPES[desc["dtype"]]
        shape = tuple(int(n) for n in desc["shape"])
        offset = int(desc["offset"])
        nbytes = int(desc["nbytes"])
        crc = int(desc["crc32"])
    except KeyError as err:
        raise ManifestError(f"array descriptor missing field {err}") from err
    if offset < 0 or offset + nbytes > len(blob):
        raise TruncatedFileError(
            f"array {name!r} extends past the end of the blob")
    raw = blob[offset:offset + nbytes]
    if (zlib.crc32(raw) & 0xFFFFFFFF) != crc:
        raise ChecksumError(f"CRC-32 mismatch for array {name!r}")
    arr = np.frombuffer(raw, dtype=dtype)
    expected = int(np.prod(shape)) if shape else 1
    if arr.size != expected:
        raise TruncatedFileError(f"array {name!r} has wrong element count")
    return arr.reshape(shape).copy()


def load_instance(path) -> ProblemInstance:
    """Read an instance back; any integrity failure raises before construction."""
    manifest_path, arrays_path = _paths(path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        raise ManifestError(f"unreadable manifest: {err}") from err
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"format version {version!r} is not supported (expected {FORMAT_VERSION})")
    try:
        cfg = InstanceConfig.from_dict(manifest["config"])
        prov = manifest["provenance"]
        descriptors = manifest["arrays"]
    except KeyError as err:
        raise ManifestError(f"manifest missing field {err}") from err
    blob = arrays_path.read_bytes()
    arrays = {}
    for desc in descriptors:
        arrays[desc.get("name")] = _read_array(blob, desc)
    for required in ("supp_mask", "sphere_indexes", "sphere_amplitudes"):
        if required not in arrays:
            raise ManifestError(f"manifest lacks required array {required!r}")
    data = SphereData(indexes=arrays["sphere_indexes"].astype(np.intp),
                      amplitudes=arrays["sphere_amplitudes"])
    provenance = Provenance(
        format_version=version,
        seed=int(prov.get("seed", 0)),
        created=prov.get("created"),
    )
    return ProblemInstance(
        config=cfg,
        sphere_data=data,
        supp_mask=arrays["supp_mask"],
        truth=arrays.get("truth"),
        provenance=provenance,
    )
