"""End-to-end runs: kernel, weights, scaling, spectrum, gradients, files.

A run is fully determined by its configuration and input files. Results go
to an output directory:

- ``eigenvalues.csv``: ``index,lambda``
- ``eigenvectors.csv``: ``n`` rows, one column per eigenvector
- ``gradients_<k>.csv``: ``n`` rows, one column per ambient coordinate
- ``gradients_<k>.svg``: quiver plot (planar data, ``plots = true``)
- ``diagnostics.txt``: flat ``key = value`` report

Outputs are staged in a temporary directory and moved into place only when
every stage succeeds.
"""

from __future__ import annotations

import hashlib
import logging
import shutil
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import analytic
from .errors import BistochasticError, InputError
from .geometry import GAUSSIAN, PointCloud, build_kernel_matrix, kernel_moments, median_bandwidth
from .gradients import eigen_gradient_b, eigen_gradient_c
from .io import write_csv, write_key_values, read_key_values
from .operators import bistochastic_operator, reference_operator
from .refselect import pivoted_gram_schmidt
from .sinkhorn import SinkhornOptions
from .spectral import eigendecompose_b, svd_reference, verify_eigenpairs
from .svg import emit_quiver_svg

__all__ = ["PipelineConfig", "PipelineResult", "StageError", "load_config", "run_pipeline",
           "demo_cloud"]

log = logging.getLogger(__name__)

DEMOS = {
    "rectangle": analytic.Rectangle(1.5, 1.0),
    "disc": analytic.Disc(),
    "circle": analytic.Circle(),
}


class StageError(BistochasticError):
    """Wraps a failure with the name of the pipeline stage it came from."""

    def __init__(self, stage: str, cause: BistochasticError):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = cause.exit_code


@dataclass
class PipelineConfig:
    """Parameters of a run; field names double as config-file keys.

    ``eps`` fixes the bandwidth; when it is absent ``eps_scale`` times the
    median squared pairwise distance is used. ``gradients`` lists the
    eigenvector indices whose gradient fields are written. The
    ``reference_*`` keys are only valid in ``reference`` mode.
    """

    mode: str = "single"
    eps: float | None = None
    eps_scale: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    tolerance: float = 1e-10
    max_iterations: int = 1000
    variant: str = "standard"
    k: int = 5
    gradients: list = field(default_factory=list)
    plots: bool = True
    reference_source: str | None = None
    reference_m: int | None = None
    demo: str | None = None
    n: int = 1000
    seed: int = 0
    out: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.mode not in ("single", "reference"):
            raise InputError(f"mode must be 'single' or 'reference', got {self.mode!r}")
        if self.eps is not None and not self.eps > 0:
            raise InputError(f"eps must be positive, got {self.eps}")
        if not self.eps_scale > 0:
            raise InputError(f"eps_scale must be positive, got {self.eps_scale}")
        for name in ("beta", "gamma"):
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise InputError(f"{name} must lie in [-1, 1]")
        SinkhornOptions(self.tolerance, self.max_iterations, self.variant)
        if self.k < 1:
            raise InputError(f"k must be >= 1, got {self.k}")
        for g in self.gradients:
            if not 0 <= g < self.k:
                raise InputError(f"gradient index {g} outside [0, k={self.k})")
        if self.mode == "reference":
            if self.reference_source not in ("file", "gram_schmidt"):
                raise InputError("reference mode needs reference_source = file | gram_schmidt")
            if self.reference_source == "gram_schmidt" and not (self.reference_m or 0) >= 1:
                raise InputError("reference_source = gram_schmidt needs reference_m >= 1")
            if self.reference_source == "file" and self.reference_m is not None:
                raise InputError("reference_m only applies to gram_schmidt selection")
        elif self.reference_source is not None or self.reference_m is not None:
            raise InputError("reference_* keys are only valid in reference mode")
        if self.demo is not None and self.demo not in DEMOS:
            raise InputError(f"unknown demo {self.demo!r}; choose from {sorted(DEMOS)}")
        if self.n < 2:
            raise InputError(f"n must be >= 2, got {self.n}")

    @property
    def sinkhorn(self) -> SinkhornOptions:
        return SinkhornOptions(self.tolerance, self.max_iterations, self.variant)

    def canonical(self) -> str:
        items = asdict(self)
        items.pop("out")
        return "\n".join(f"{k}={items[k]!r}" for k in sorted(items))


def _convert(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(PipelineConfig)}
    if name not in kinds:
        raise InputError(f"unknown config key {name!r}")
    if raw.lower() in ("", "none"):
        return None
    kind = kinds[name]
    try:
        if name == "gradients":
            return [int(s) for s in raw.replace(" ", "").split(",") if s]
        if name == "plots":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
    except ValueError as exc:
        raise InputError(f"bad value for {name}: {raw!r}") from exc
    return raw


def load_config(path=None, **overrides) -> PipelineConfig:
    """Read a flat ``key = value`` config file and apply overrides."""
    values = {}
    if path is not None:
        for key, raw in read_key_values(path).items():
            values[key] = _convert(key, raw)
    for key, value in overrides.items():
        if key not in PipelineConfig.__dataclass_fields__:
            raise InputError(f"unknown config key {key!r}")
        if value is not None:
            values[key] = value
    return PipelineConfig(**values)


@dataclass
class PipelineResult:
    out: Path
    eigenvalues: np.ndarray
    diagnostics: dict
    files: list


def demo_cloud(config: PipelineConfig) -> PointCloud:
    return analytic.sample_domain(DEMOS[config.demo], config.n, config.seed)


def _hash_inputs(config, data, reference) -> str:
    h = hashlib.sha256(config.canonical().encode())
    for cloud in (data, reference):
        if cloud is not None:
            h.update(np.ascontiguousarray(cloud.points).tobytes())
    return h.hexdigest()


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)

    def __exit__(self, etype, exc, tb):
        if isinstance(exc, BistochasticError) and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def run_pipeline(config: PipelineConfig, data: PointCloud | None = None,
                 reference: PointCloud | None = None) -> PipelineResult:
    """Run the single-measure or reference pipeline and write its outputs."""
    with _Stage("input"):
        if data is None:
            if config.demo is None:
                raise InputError("no data given and no demo selected")
            data = demo_cloud(config)
        if config.mode == "reference" and config.reference_source == "file" and reference is None:
            raise InputError("reference_source = file needs a reference point file")
        if reference is not None and reference.d != data.d:
            raise InputError("reference and data dimensions differ")
        eps = config.eps if config.eps is not None else median_bandwidth(data, config.eps_scale)

    diagnostics = {
        "mode": config.mode,
        "n": data.n,
        "d": data.d,
        "eps": float(eps),
        "eps_source": "explicit" if config.eps is not None else f"median x {config.eps_scale!r}",
    }
    m0, m2 = kernel_moments(GAUSSIAN, data.d)
    diagnostics.update(m0=m0, m2=m2, generator_constant=m2 / (2 * m0))

    ref_indices = None
    if config.mode == "reference":
        with _Stage("reference selection"):
            if config.reference_source == "gram_schmidt":
                selection = pivoted_gram_schmidt(build_kernel_matrix(data, data, eps),
                                                 config.reference_m)
                ref_indices = selection.indices
                reference = data.subset(ref_indices)
        with _Stage("sinkhorn"):
            op = reference_operator(data, reference, eps, config.beta, config.gamma,
                                    opts=config.sinkhorn)
        with _Stage("spectral"):
            decomp = svd_reference(op, config.k)
        diagnostics["m"] = reference.n
    else:
        with _Stage("sinkhorn"):
            op = bistochastic_operator(data, eps, config.beta, opts=config.sinkhorn)
        with _Stage("spectral"):
            decomp = eigendecompose_b(op, config.k)

    scaling = op.scaling
    diagnostics.update(
        sinkhorn_variant=scaling.variant,
        sinkhorn_iterations=scaling.iterations,
        sinkhorn_residual=scaling.residual,
        sinkhorn_alpha=scaling.alpha_estimate,
        eigenpair_residual=verify_eigenpairs(op, decomp),
        lambda_0=float(decomp.eigenvalues[0]),
    )

    fields_out = {}
    with _Stage("gradients"):
        for k in config.gradients:
            if config.mode == "reference":
                fields_out[k] = eigen_gradient_c(op, decomp, reference.points, k).vectors
            else:
                fields_out[k] = eigen_gradient_b(op, decomp, data.points, k).vectors

    diagnostics["content_hash"] = _hash_inputs(config, data, reference)

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
    try:
        with _Stage("output"):
            write_csv(stage / "eigenvalues.csv", ["lambda"], decomp.eigenvalues, index=True)
            write_csv(stage / "eigenvectors.csv",
                      [f"phi_{j}" for j in range(decomp.k)], decomp.phi)
            if ref_indices is not None:
                write_csv(stage / "reference_indices.csv", ["index"], ref_indices[:, None])
            coords = [f"d{c}" for c in range(data.d)]
            for k, vectors in fields_out.items():
                write_csv(stage / f"gradients_{k}.csv", coords, vectors)
                if config.plots and data.d == 2:
                    emit_quiver_svg(data.points, vectors, stage / f"gradients_{k}.svg",
                                    title=f"gradient of eigenvector {k}")
            write_key_values(stage / "diagnostics.txt", diagnostics)
        files = []
        for item in sorted(stage.iterdir()):
            target = out / item.name
            shutil.move(str(item), target)
            files.append(target)
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return PipelineResult(out=out, eigenvalues=decomp.eigenvalues, diagnostics=diagnostics,
                          files=files)
