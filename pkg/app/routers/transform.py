import logging
from typing import Optional

from fastapi import APIRouter, Request
from slowapi import Limiter
from slowapi.util import get_remote_address

from app.config import get_settings
from app.errors import DomainError
from app.models.schemas import (
    BarkRequest,
    BarkResponse,
    DenoiseReport,
    DenoiseRequest,
    PlanInfo,
    PropagatorConfig,
    SignConvention,
    SignalKind,
    SignalRecipe,
    SpectrumRequest,
    SpectrumResponse,
)
from app.services.auditory_model import hz_to_bark
from app.services.denoiser import sweep
from app.services.odat_transform import (
    TransformPlan,
    dft,
    forward,
    magnitude_db,
    peak_regions,
    plan_info,
    plan_store,
    upward_spread,
)
from app.services.signals import load_signal

logger = logging.getLogger(__name__)

router = APIRouter()
settings = get_settings()
limiter = Limiter(key_func=get_remote_address)

GENERATED_KINDS = (SignalKind.TWO_TONE, SignalKind.HARMONIC, SignalKind.NOISE_BURST)
MAX_FRAME_LENGTH = 4096


def _load(recipe: SignalRecipe):
    # File-backed recipes stay CLI-only; the API never reads server paths.
    if recipe.kind not in GENERATED_KINDS:
        raise DomainError(f"signal kind {recipe.kind.value} is not available over HTTP")
    if recipe.n > MAX_FRAME_LENGTH:
        raise DomainError(f"frame length {recipe.n} exceeds {MAX_FRAME_LENGTH}")
    return load_signal(recipe)


def _plan(n: int, fs: float, propagator: Optional[PropagatorConfig]) -> TransformPlan:
    return plan_store.get(n, fs, propagator or settings.propagator())


@router.get("/plan", response_model=PlanInfo)
@limiter.limit(settings.rate_limit)
def describe_plan(
    request: Request,
    n: Optional[int] = None,
    fs: Optional[float] = None,
    sigma1: Optional[float] = None,
    sigma2: Optional[float] = None,
    sign: Optional[SignConvention] = None,
):
    request_id = getattr(request.state, "request_id", "unknown")
    cfg = PropagatorConfig(
        sigma1=settings.sigma1 if sigma1 is None else sigma1,
        sigma2=settings.sigma2 if sigma2 is None else sigma2,
        sign=sign or settings.sign,
    )
    n = n or settings.n
    if n > MAX_FRAME_LENGTH:
        raise DomainError(f"frame length {n} exceeds {MAX_FRAME_LENGTH}")
    plan = plan_store.get(n, fs or settings.fs, cfg)
    logger.info(f"[{request_id}] Plan info: {plan.metadata()}")
    return PlanInfo(**plan_info(plan))


@router.post("/spectrum", response_model=SpectrumResponse)
@limiter.limit(settings.rate_limit)
def compute_spectrum(request: Request, body: SpectrumRequest):
    request_id = getattr(request.state, "request_id", "unknown")
    recipe = body.recipe
    frame = _load(recipe)
    plan = _plan(recipe.n, recipe.fs, body.propagator)

    spec_dft = dft(frame)
    spec_odat = forward(frame, plan)
    half = recipe.n // 2

    logger.info(f"[{request_id}] Spectrum: kind={recipe.kind.value}, n={recipe.n}, fs={recipe.fs}")
    return SpectrumResponse(
        n=recipe.n,
        fs=recipe.fs,
        freqs_hz=[k * recipe.fs / recipe.n for k in range(half + 1)],
        dft_db=magnitude_db(spec_dft)[: half + 1].tolist(),
        odat_db=magnitude_db(spec_odat)[: half + 1].tolist(),
        peaks_dft=peak_regions(spec_dft, recipe.fs),
        peaks_odat=peak_regions(spec_odat, recipe.fs),
        centroid_dft_hz=upward_spread(spec_dft, recipe.fs),
        centroid_odat_hz=upward_spread(spec_odat, recipe.fs),
    )


@router.post("/denoise", response_model=DenoiseReport)
@limiter.limit(settings.rate_limit)
def denoise_recipe(request: Request, body: DenoiseRequest):
    request_id = getattr(request.state, "request_id", "unknown")
    recipe = body.recipe
    clean = _load(recipe)
    frame_n = settings.n if recipe.n % settings.n == 0 else recipe.n
    plan = _plan(frame_n, recipe.fs, body.propagator)

    logger.info(
        f"[{request_id}] Denoise: kind={recipe.kind.value}, n={recipe.n}, frame={frame_n}, "
        f"snr={body.noise.target_snr_db}dB, seed={body.noise.seed}"
    )
    (report,) = sweep(
        clean,
        plan,
        [body.noise.target_snr_db],
        [body.noise.seed],
        threshold_source=body.threshold_source,
        signal=recipe.kind.value,
    )
    return report


@router.post("/bark", response_model=BarkResponse)
@limiter.limit(settings.rate_limit)
def convert_bark(request: Request, body: BarkRequest):
    barks = hz_to_bark(body.freqs_hz)
    return BarkResponse(barks=list(map(float, barks)))
