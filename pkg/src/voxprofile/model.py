"""Speaker-profile model: reference encoder, conditional frame decoder,
lookup-table baseline, and the combined training objective.

The encoder maps an utterance's frames through a shared frame MLP, mean-pools
over time, and projects to a 32-dim mean and a strictly positive 32-dim
standard deviation (softplus head). Sampling uses z = mu + sigma * eps. The
decoder consumes z concatenated with the content one-hot and emits a full
T x F frame matrix. Training minimizes

    L1 reconstruction + beta_kl * KL(posterior || N(0, I))
                      + lambda_triplet * hinge(d(A,P) - d(A,N) + alpha)

with the triplet applied to the deterministic encoder means and squared
Euclidean distances. All gradients are hand-coded and checked against finite
differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from voxprofile import nn
from voxprofile.errors import (
    ConfigError,
    DomainError,
    ShapeError,
    SpeakerLookupError,
    TrainingError,
)
from voxprofile.nn import DenseLayer, GradientTape
from voxprofile.optim import AdamState

VARIANTS = ("baseline_lookup", "vae", "vae_triplet", "vae_triplet_shuffle")


@dataclass(frozen=True)
class ModelConfig:
    feature_dim: int
    frames_per_utterance: int
    content_count: int
    latent_dim: int = 32
    enc_hidden: tuple[int, ...] = (64,)
    dec_hidden: tuple[int, ...] = (128,)

    def validate(self) -> None:
        for name in ("feature_dim", "frames_per_utterance", "content_count", "latent_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.enc_hidden or not self.dec_hidden:
            raise ConfigError("enc_hidden and dec_hidden must be non-empty")


@dataclass(frozen=True)
class TripletConfig:
    alpha: float = 0.5

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError(f"triplet margin must be >= 0, got {self.alpha}")


@dataclass
class SpeakerLatent:
    """Posterior record: z is exactly mu + sigma * eps for the stored eps."""

    mu: np.ndarray
    sigma: np.ndarray
    z: np.ndarray
    eps: np.ndarray


@dataclass
class ModelParams:
    config: ModelConfig
    enc_frame: list[DenseLayer]
    enc_mu: DenseLayer
    enc_sigma: DenseLayer
    dec: list[DenseLayer]
    baseline_table: np.ndarray
    train_speaker_ids: list[int]
    _row_of: dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._row_of:
            self._row_of = {sid: i for i, sid in enumerate(self.train_speaker_ids)}
        if self.baseline_table.shape != (len(self.train_speaker_ids), self.config.latent_dim):
            raise ShapeError(
                f"baseline table shape {self.baseline_table.shape} != "
                f"({len(self.train_speaker_ids)}, {self.config.latent_dim})"
            )

    def table_row(self, speaker_id: int) -> int:
        if speaker_id not in self._row_of:
            raise SpeakerLookupError(
                f"speaker {speaker_id} has no baseline embedding (not a train speaker)"
            )
        return self._row_of[speaker_id]


def init_model(config: ModelConfig, train_speaker_ids: list[int], seed: int) -> ModelParams:
    """Glorot-uniform weights, zero biases, Glorot-uniform lookup table.

    The table is treated as a one-hot(speakers) -> latent linear map, so its
    Glorot bound uses fan_in = speaker count, fan_out = latent_dim.
    """
    config.validate()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 3]))
    enc_frame = []
    d = config.feature_dim
    for h in config.enc_hidden:
        enc_frame.append(nn.init_dense(d, h, "tanh", rng))
        d = h
    enc_mu = nn.init_dense(d, config.latent_dim, "identity", rng)
    enc_sigma = nn.init_dense(d, config.latent_dim, "softplus", rng)
    dec = []
    d = config.latent_dim + config.content_count
    for h in config.dec_hidden:
        dec.append(nn.init_dense(d, h, "tanh", rng))
        d = h
    out_dim = config.frames_per_utterance * config.feature_dim
    dec.append(nn.init_dense(d, out_dim, "identity", rng))
    n_train = len(train_speaker_ids)
    table = nn.glorot_uniform(n_train, config.latent_dim, rng)
    return ModelParams(
        config=config,
        enc_frame=enc_frame,
        enc_mu=enc_mu,
        enc_sigma=enc_sigma,
        dec=dec,
        baseline_table=table,
        train_speaker_ids=list(train_speaker_ids),
    )


def param_items(params: ModelParams) -> dict[str, np.ndarray]:
    out = dict(nn.mlp_param_items(params.enc_frame, "enc.frame"))
    out["enc.mu.W"] = params.enc_mu.weights
    out["enc.mu.b"] = params.enc_mu.bias
    out["enc.sigma.W"] = params.enc_sigma.weights
    out["enc.sigma.b"] = params.enc_sigma.bias
    out.update(nn.mlp_param_items(params.dec, "dec"))
    out["baseline.table"] = params.baseline_table
    return out


def trainable_names(params: ModelParams, variant: str) -> list[str]:
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}")
    names = list(param_items(params))
    if variant == "baseline_lookup":
        return [n for n in names if n.startswith("dec.") or n == "baseline.table"]
    return [n for n in names if n.startswith("enc.") or n.startswith("dec.")]


# ---------------------------------------------------------------------------
# forward / backward pieces


@dataclass
class EncodeCache:
    frame_caches: list
    mu_cache: object
    sigma_cache: object
    n_frames: int


def _encode_with_cache(params: ModelParams, frames) -> tuple[np.ndarray, np.ndarray, EncodeCache]:
    arr = nn.as_matrix(frames, "frames")
    if arr.shape[0] < 1:
        raise ShapeError("frames must contain at least one row")
    if arr.shape[1] != params.config.feature_dim:
        raise ShapeError(
            f"frames have feature dim {arr.shape[1]}, model expects {params.config.feature_dim}"
        )
    h, frame_caches = nn.mlp_forward(params.enc_frame, arr)
    pooled = h.mean(axis=0)
    mu, mu_cache = nn.layer_forward(params.enc_mu, pooled)
    sigma, sigma_cache = nn.layer_forward(params.enc_sigma, pooled)
    cache = EncodeCache(
        frame_caches=frame_caches,
        mu_cache=mu_cache,
        sigma_cache=sigma_cache,
        n_frames=arr.shape[0],
    )
    return mu, sigma, cache


def encode(params: ModelParams, frames) -> tuple[np.ndarray, np.ndarray]:
    """Posterior parameters (mu, sigma) for an utterance's frames.

    Mean pooling over time makes the result invariant to frame order.
    """
    mu, sigma, _ = _encode_with_cache(params, frames)
    return mu, sigma


def _encoder_backward(
    params: ModelParams,
    cache: EncodeCache,
    dmu: np.ndarray | None,
    dsigma: np.ndarray | None,
    tape: GradientTape,
) -> None:
    dpooled = np.zeros(params.enc_mu.in_dim)
    if dmu is not None:
        din, (dw, db) = nn.layer_backward(params.enc_mu, cache.mu_cache, dmu)
        tape.add("enc.mu.W", dw)
        tape.add("enc.mu.b", db)
        dpooled += din
    if dsigma is not None:
        din, (dw, db) = nn.layer_backward(params.enc_sigma, cache.sigma_cache, dsigma)
        tape.add("enc.sigma.W", dw)
        tape.add("enc.sigma.b", db)
        dpooled += din
    dh = np.tile(dpooled / cache.n_frames, (cache.n_frames, 1))
    nn.mlp_backward(params.enc_frame, cache.frame_caches, dh, tape, "enc.frame")


def reparameterize(mu, sigma, eps) -> np.ndarray:
    """z = mu + sigma * eps, the element-wise sampling identity."""
    mu = nn.as_vector(mu, "mu")
    sigma = nn.as_vector(sigma, "sigma")
    eps = nn.as_vector(eps, "eps")
    if not (mu.shape == sigma.shape == eps.shape):
        raise ShapeError(
            f"mu/sigma/eps shapes differ: {mu.shape}, {sigma.shape}, {eps.shape}"
        )
    if np.any(sigma <= 0):
        raise DomainError("sigma must be strictly positive element-wise")
    return mu + sigma * eps


def make_latent(mu, sigma, eps) -> SpeakerLatent:
    z = reparameterize(mu, sigma, eps)
    return SpeakerLatent(mu=np.asarray(mu), sigma=np.asarray(sigma), z=z, eps=np.asarray(eps))


def kl_to_standard_normal(mu, sigma) -> float:
    """Closed-form KL(N(mu, diag sigma^2) || N(0, I)); sigma is a std dev."""
    mu = nn.as_vector(mu, "mu")
    sigma = nn.as_vector(sigma, "sigma")
    if np.any(sigma <= 0):
        raise DomainError("sigma must be strictly positive element-wise")
    return float(0.5 * np.sum(mu * mu + sigma * sigma - 1.0 - 2.0 * np.log(sigma)))


def _kl_grads(mu, sigma) -> tuple[np.ndarray, np.ndarray]:
    return mu.copy(), sigma - 1.0 / sigma


def triplet_loss(za, zp, zn, cfg: TripletConfig = TripletConfig()) -> float:
    """Hinge on squared-distance separation: max(d(A,P) - d(A,N) + alpha, 0)."""
    za = nn.as_vector(za, "anchor")
    zp = nn.as_vector(zp, "positive")
    zn = nn.as_vector(zn, "negative")
    if not (za.shape == zp.shape == zn.shape):
        raise ShapeError("triplet vectors must share one shape")
    d_ap = float(np.sum((za - zp) ** 2))
    d_an = float(np.sum((za - zn) ** 2))
    return max(d_ap - d_an + cfg.alpha, 0.0)


def _triplet_grads(za, zp, zn, cfg: TripletConfig):
    """(loss, dA, dP, dN); gradients are zero when the hinge is inactive."""
    d_ap = float(np.sum((za - zp) ** 2))
    d_an = float(np.sum((za - zn) ** 2))
    slack = d_ap - d_an + cfg.alpha
    if slack <= 0.0:
        zero = np.zeros_like(za)
        return 0.0, zero, zero.copy(), zero.copy()
    return slack, 2.0 * (zn - zp), 2.0 * (zp - za), 2.0 * (za - zn)


def reconstruction_l1(predicted, target) -> float:
    """Mean absolute element-wise difference."""
    predicted = nn.as_matrix(predicted, "predicted")
    target = nn.as_matrix(target, "target")
    if predicted.shape != target.shape:
        raise ShapeError(
            f"prediction shape {predicted.shape} != target shape {target.shape}"
        )
    return float(np.mean(np.abs(predicted - target)))


def _l1_grad(predicted, target) -> np.ndarray:
    return np.sign(predicted - target) / predicted.size


@dataclass
class DecodeCache:
    layer_caches: list


def _content_onehot(params: ModelParams, content_id: int) -> np.ndarray:
    c = params.config.content_count
    if not (0 <= int(content_id) < c):
        raise DomainError(f"content_id {content_id} outside [0, {c})")
    onehot = np.zeros(c)
    onehot[int(content_id)] = 1.0
    return onehot


def _decode_with_cache(params: ModelParams, z, content_id: int):
    z = nn.as_vector(z, "z")
    if z.shape[0] != params.config.latent_dim:
        raise ShapeError(
            f"z has dim {z.shape[0]}, model expects {params.config.latent_dim}"
        )
    x = np.concatenate([z, _content_onehot(params, content_id)])
    y, caches = nn.mlp_forward(params.dec, x[None, :])
    t_len = params.config.frames_per_utterance
    f = params.config.feature_dim
    return y.reshape(t_len, f), DecodeCache(layer_caches=caches)


def decode(params: ModelParams, z, content_id: int) -> np.ndarray:
    """Render a T x F frame matrix for a latent profile and content id."""
    frames, _ = _decode_with_cache(params, z, content_id)
    return frames


def _decoder_backward(
    params: ModelParams, cache: DecodeCache, dframes: np.ndarray, tape: GradientTape
) -> np.ndarray:
    dy = dframes.reshape(1, -1)
    dx = nn.mlp_backward(params.dec, cache.layer_caches, dy, tape, "dec")
    return dx[0, : params.config.latent_dim]


def baseline_embed(params: ModelParams, speaker_id: int) -> np.ndarray:
    """The lookup-table embedding of a train speaker (copy of the row)."""
    return params.baseline_table[params.table_row(speaker_id)].copy()


# ---------------------------------------------------------------------------
# training step


@dataclass
class LossWeights:
    beta_kl: float = 0.05
    lambda_triplet: float = 1.0
    triplet: TripletConfig = field(default_factory=TripletConfig)


@dataclass
class LossBreakdown:
    l1_recon: float
    kl: float
    triplet: float
    total: float
    beta_kl: float
    lambda_triplet: float


@dataclass
class TrainExample:
    """One plan entry resolved to data.

    The triplet anchor is the reference utterance itself, so only the
    positive and negative frames are carried separately.
    """

    target_frames: np.ndarray
    target_content: int
    target_speaker: int
    reference_frames: np.ndarray
    positive_frames: np.ndarray | None = None
    negative_frames: np.ndarray | None = None
    eps: np.ndarray | None = None


def _require_finite_terms(l1: float, kl: float, trip: float) -> None:
    for name, value in (("l1", l1), ("kl", kl), ("triplet", trip)):
        if not np.isfinite(value):
            raise TrainingError(f"non-finite {name} loss term ({value})")


def _decode_batch(params: ModelParams, zs: np.ndarray, contents: list[int]):
    """Batched decoder pass: one layer call per layer for a whole batch."""
    b = zs.shape[0]
    c = params.config.content_count
    x = np.zeros((b, params.config.latent_dim + c))
    x[:, : params.config.latent_dim] = zs
    for i, content in enumerate(contents):
        if not (0 <= int(content) < c):
            raise DomainError(f"content_id {content} outside [0, {c})")
        x[i, params.config.latent_dim + int(content)] = 1.0
    y, caches = nn.mlp_forward(params.dec, x)
    return y, caches


def _accumulate_batch(
    params: ModelParams,
    examples: list[TrainExample],
    weights: LossWeights,
    variant: str,
    tape: GradientTape,
) -> tuple[float, float, float]:
    """Batched forward/backward; returns summed (l1, kl, triplet).

    The tape receives gradients of sum(l1 + beta_kl*kl + lambda*triplet); the
    caller divides by the batch size. Encoder and decoder passes run batched
    across the examples (one kernel call per layer), which is exactly the
    per-example math accumulated in a fixed order.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}")
    if not examples:
        raise ConfigError("batch must be non-empty")
    b = len(examples)
    t_len = params.config.frames_per_utterance
    f = params.config.feature_dim
    latent = params.config.latent_dim
    out_size = t_len * f

    if variant == "baseline_lookup":
        rows = [params.table_row(ex.target_speaker) for ex in examples]
        zs = params.baseline_table[rows]
        yhat, dec_caches = _decode_batch(
            params, zs, [ex.target_content for ex in examples]
        )
        l1_sum = 0.0
        d_yhat = np.empty_like(yhat)
        for i, ex in enumerate(examples):
            pred = yhat[i].reshape(t_len, f)
            l1_sum += reconstruction_l1(pred, ex.target_frames)
            d_yhat[i] = _l1_grad(pred, ex.target_frames).reshape(-1)
        dx = nn.mlp_backward(params.dec, dec_caches, d_yhat, tape, "dec")
        np.add.at(tape["baseline.table"], rows, dx[:, :latent])
        return l1_sum, 0.0, 0.0

    use_triplet = weights.lambda_triplet > 0.0 and variant in (
        "vae_triplet",
        "vae_triplet_shuffle",
    )

    # one encode job per reference, plus positive and negative when mining
    jobs: list[np.ndarray] = []
    job_of_ref: list[int] = []
    job_of_pos: list[int] = []
    job_of_neg: list[int] = []
    uniform_t = True

    def add_job(frames) -> int:
        nonlocal uniform_t
        arr = nn.as_matrix(frames, "frames")
        if arr.shape[0] < 1 or arr.shape[1] != f:
            raise ShapeError(
                f"frames shape {arr.shape} incompatible with feature dim {f}"
            )
        if arr.shape[0] != t_len:
            uniform_t = False
        jobs.append(arr)
        return len(jobs) - 1

    for ex in examples:
        if ex.eps is None:
            raise ConfigError("VAE variants need an eps draw per example")
        if use_triplet and (ex.positive_frames is None or ex.negative_frames is None):
            raise ConfigError("triplet variants need positive and negative frames")
        job_of_ref.append(add_job(ex.reference_frames))
        if use_triplet:
            job_of_pos.append(add_job(ex.positive_frames))
            job_of_neg.append(add_job(ex.negative_frames))

    n_jobs = len(jobs)
    if uniform_t:
        stacked = np.concatenate(jobs, axis=0)
        h_all, frame_caches = nn.mlp_forward(params.enc_frame, stacked)
        pooled = h_all.reshape(n_jobs, t_len, -1).mean(axis=1)
        frames_per_job = t_len
    else:
        # mixed utterance lengths: encode job by job, still one head pass
        pooled_rows = []
        frame_caches = None
        per_job = []
        for fr in jobs:
            h, caches = nn.mlp_forward(params.enc_frame, fr)
            pooled_rows.append(h.mean(axis=0))
            per_job.append((fr, caches, fr.shape[0]))
        pooled = np.stack(pooled_rows)
        frames_per_job = None

    mu_all, mu_cache = nn.layer_forward(params.enc_mu, pooled)
    sig_all, sig_cache = nn.layer_forward(params.enc_sigma, pooled)

    l1_sum = 0.0
    kl_sum = 0.0
    trip_sum = 0.0

    zs = np.empty((b, latent))
    for i, ex in enumerate(examples):
        mu = mu_all[job_of_ref[i]]
        sigma = sig_all[job_of_ref[i]]
        zs[i] = reparameterize(mu, sigma, ex.eps)
        kl_sum += kl_to_standard_normal(mu, sigma)

    yhat, dec_caches = _decode_batch(params, zs, [ex.target_content for ex in examples])
    d_yhat = np.empty_like(yhat)
    for i, ex in enumerate(examples):
        pred = yhat[i].reshape(t_len, f)
        l1_sum += reconstruction_l1(pred, ex.target_frames)
        d_yhat[i] = _l1_grad(pred, ex.target_frames).reshape(-1)
    dx = nn.mlp_backward(params.dec, dec_caches, d_yhat, tape, "dec")
    dz = dx[:, :latent]

    d_mu_all = np.zeros_like(mu_all)
    d_sig_all = np.zeros_like(sig_all)
    for i, ex in enumerate(examples):
        r = job_of_ref[i]
        mu = mu_all[r]
        sigma = sig_all[r]
        d_mu_all[r] += dz[i]
        d_sig_all[r] += dz[i] * ex.eps
        if weights.beta_kl > 0.0:
            kmu, ksig = _kl_grads(mu, sigma)
            d_mu_all[r] += weights.beta_kl * kmu
            d_sig_all[r] += weights.beta_kl * ksig
        if use_triplet:
            p, n = job_of_pos[i], job_of_neg[i]
            t_loss, d_a, d_p, d_n = _triplet_grads(
                mu, mu_all[p], mu_all[n], weights.triplet
            )
            trip_sum += t_loss
            if t_loss > 0.0:
                lam = weights.lambda_triplet
                d_mu_all[r] += lam * d_a
                d_mu_all[p] += lam * d_p
                d_mu_all[n] += lam * d_n

    dpooled, (dw, db) = nn.layer_backward(params.enc_mu, mu_cache, d_mu_all)
    tape.add("enc.mu.W", dw)
    tape.add("enc.mu.b", db)
    dp2, (dw, db) = nn.layer_backward(params.enc_sigma, sig_cache, d_sig_all)
    tape.add("enc.sigma.W", dw)
    tape.add("enc.sigma.b", db)
    dpooled = dpooled + dp2

    if uniform_t:
        dh = np.repeat(dpooled / t_len, t_len, axis=0)
        nn.mlp_backward(params.enc_frame, frame_caches, dh, tape, "enc.frame")
    else:
        for j, (fr, caches, tj) in enumerate(per_job):
            dh = np.tile(dpooled[j] / tj, (tj, 1))
            nn.mlp_backward(params.enc_frame, caches, dh, tape, "enc.frame")

    return l1_sum, kl_sum, trip_sum


def train_step(
    params: ModelParams,
    examples: list[TrainExample],
    opt: AdamState,
    weights: LossWeights,
    variant: str,
) -> LossBreakdown:
    """One Adam update over a batch; mutates params and opt in place.

    Deterministic given (params, examples incl. eps draws, optimizer state).
    Loss components are batch means; total = l1 + beta_kl*kl +
    lambda_triplet*triplet. Raises TrainingError naming the offending term if
    any component is non-finite, before touching the parameters.
    """
    items = param_items(params)
    tape = GradientTape(items)
    l1_sum, kl_sum, trip_sum = _accumulate_batch(params, examples, weights, variant, tape)

    n = float(len(examples))
    l1 = l1_sum / n
    kl = kl_sum / n
    trip = trip_sum / n
    _require_finite_terms(l1, kl, trip)
    tape.scale(1.0 / n)

    opt.apply(items, tape, names=trainable_names(params, variant))
    total = l1 + weights.beta_kl * kl + weights.lambda_triplet * trip
    return LossBreakdown(
        l1_recon=l1,
        kl=kl,
        triplet=trip,
        total=total,
        beta_kl=weights.beta_kl,
        lambda_triplet=weights.lambda_triplet,
    )


def batch_loss_and_grads(
    params: ModelParams,
    examples: list[TrainExample],
    weights: LossWeights,
    variant: str,
) -> tuple[float, dict[str, np.ndarray]]:
    """Total batch loss and its gradients, no optimizer update.

    Same accumulation path as train_step; used by the gradient-check suite.
    """
    items = param_items(params)
    tape = GradientTape(items)
    l1_sum, kl_sum, trip_sum = _accumulate_batch(params, examples, weights, variant, tape)
    n = float(len(examples))
    tape.scale(1.0 / n)
    total = (
        l1_sum / n
        + weights.beta_kl * (kl_sum / n)
        + weights.lambda_triplet * (trip_sum / n)
    )
    return total, dict(tape.items())
