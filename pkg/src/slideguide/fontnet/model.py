"""Convolutional autoencoder + classifier for font recognition.

Encoder: conv(k=5, pad=2) -> 64 maps -> batch norm -> ReLU -> 2x2 max
pool -> conv(k=3, pad=1) -> 128 maps -> ReLU. Decoder mirrors it with a
nearest-neighbor x2 upsample and a sigmoid output. Classifier: flatten
-> linear(256) -> ReLU -> dropout(0.5) -> linear(5), final layer
zero-initialized.

Trained jointly: MSE on the reconstruction plus cross entropy on the
logits, plain SGD with momentum, 75/25 stratified split.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    DimensionMismatch,
    EmptyGlyph,
    InsufficientData,
    ModelUntrained,
    VersionMismatch,
)
from ..raster import GrayImage, binarize_otsu, resize_bilinear
from . import nn
from .data import FONT_NAMES, IMAGE_H, IMAGE_W, N_CLASSES, GlyphImage

TRAIN_FRACTION = 0.75
MIN_INK_FRACTION = 0.01


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    batch_size: int = 32
    lr: float = 0.06
    momentum: float = 0.9
    seed: int = 0
    ce_weight: float = 1.0  # weight of the CE term in the joint loss


@dataclass
class EpochStats:
    epoch: int
    mse_loss: float
    ce_loss: float
    val_accuracy: float


@dataclass
class FontModel:
    """Layer stacks plus the shape/config needed to rebuild them."""

    input_hw: tuple[int, int]
    enc_channels: tuple[int, int]
    hidden: int
    k1: int
    encoder: list[nn.Layer] = field(repr=False, default_factory=list)
    decoder: list[nn.Layer] = field(repr=False, default_factory=list)
    classifier: list[nn.Layer] = field(repr=False, default_factory=list)
    trained: bool = False
    train_config: TrainConfig | None = None

    @staticmethod
    def create(
        input_hw: tuple[int, int] = (IMAGE_H, IMAGE_W),
        enc_channels: tuple[int, int] = (64, 128),
        hidden: int = 256,
        k1: int = 5,
        seed: int = 0,
        dropout_p: float = 0.5,
        dtype=np.float32,
    ) -> "FontModel":
        rng = np.random.default_rng(seed)
        c1, c2 = enc_channels
        h, w = input_hw
        encoder = [
            nn.Conv2D(1, c1, k=k1, pad=k1 // 2, rng=rng, dtype=dtype,
                      skip_input_grad=True),
            nn.BatchNorm2D(c1, dtype=dtype),
            nn.ReLU(),
            nn.MaxPool2(),
            nn.Conv2D(c1, c2, k=3, pad=1, rng=rng, dtype=dtype),
            nn.ReLU(),
        ]
        decoder = [
            nn.Conv2D(c2, c1, k=3, pad=1, rng=rng, dtype=dtype),
            nn.BatchNorm2D(c1, dtype=dtype),
            nn.ReLU(),
            nn.UpsampleNearest2(),
            nn.Conv2D(c1, 1, k=k1, pad=k1 // 2, rng=rng, dtype=dtype),
            nn.Sigmoid(),
        ]
        latent_size = c2 * (h // 2) * (w // 2)
        classifier = [
            nn.Flatten(),
            nn.Linear(latent_size, hidden, rng=rng, dtype=dtype),
            nn.ReLU(),
            nn.Dropout(dropout_p, rng=rng),
            nn.Linear(hidden, N_CLASSES, rng=None, dtype=dtype, zero_init=True),
        ]
        return FontModel(
            input_hw=input_hw,
            enc_channels=enc_channels,
            hidden=hidden,
            k1=k1,
            encoder=encoder,
            decoder=decoder,
            classifier=classifier,
        )

    @property
    def all_layers(self) -> list[nn.Layer]:
        return self.encoder + self.decoder + self.classifier

    def named_params(self) -> dict[str, np.ndarray]:
        out = {}
        for stack_name, stack in (
            ("encoder", self.encoder),
            ("decoder", self.decoder),
            ("classifier", self.classifier),
        ):
            for i, layer in enumerate(stack):
                for pname, p in layer.params().items():
                    out[f"{stack_name}.{i}.{pname}"] = p
        return out


def cae_forward(
    x: np.ndarray, model: FontModel, train: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Run the autoencoder; returns (latent, reconstruction)."""
    if x.ndim != 4 or x.shape[1] != 1 or x.shape[2:] != model.input_hw:
        raise DimensionMismatch(f"input {x.shape} vs model {model.input_hw}")
    latent = nn.run_forward(model.encoder, x, train)
    recon = nn.run_forward(model.decoder, latent, train)
    return latent, recon


def classifier_forward(
    latent: np.ndarray, model: FontModel, train: bool = False
) -> np.ndarray:
    """Logits for a batch of latent maps."""
    h, w = model.input_hw
    expect = (model.enc_channels[1], h // 2, w // 2)
    if latent.shape[1:] != expect:
        raise DimensionMismatch(f"latent {latent.shape[1:]} vs {expect}")
    return nn.run_forward(model.classifier, latent, train)


def _to_batches(dataset: list[GlyphImage], dtype) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([g.pixels for g in dataset]).astype(dtype)[:, None, :, :]
    y = np.array([g.label for g in dataset], dtype=np.int64)
    return x, y


def stratified_split(
    labels: np.ndarray, seed: int, train_fraction: float = TRAIN_FRACTION
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split; returns (train_idx, val_idx)."""
    rng = np.random.default_rng(seed)
    train_idx, val_idx = [], []
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        rng.shuffle(idx)
        cut = int(round(train_fraction * len(idx)))
        train_idx.extend(idx[:cut])
        val_idx.extend(idx[cut:])
    return np.sort(np.array(train_idx)), np.sort(np.array(val_idx))


def evaluate(
    model: FontModel, x: np.ndarray, y: np.ndarray, batch_size: int = 64
) -> tuple[float, float, float]:
    """Eval-mode (mse, ce, accuracy) over a dataset."""
    mse_sum = ce_sum = correct = 0
    for s in range(0, len(x), batch_size):
        xb, yb = x[s : s + batch_size], y[s : s + batch_size]
        latent, recon = cae_forward(xb, model, train=False)
        logits = classifier_forward(latent, model, train=False)
        mse, _ = nn.mse_loss(recon, xb)
        ce, _ = nn.cross_entropy_loss(logits, yb)
        mse_sum += mse * len(xb)
        ce_sum += ce * len(xb)
        correct += int((logits.argmax(axis=1) == yb).sum())
    n = len(x)
    return mse_sum / n, ce_sum / n, correct / n


def train(
    dataset: list[GlyphImage],
    cfg: TrainConfig = TrainConfig(),
    model: FontModel | None = None,
    dtype=np.float32,
) -> tuple[FontModel, list[EpochStats]]:
    """Train on a 75/25 stratified split; returns the model snapshot with
    the best validation accuracy and the per-epoch history.

    Raises:
        InsufficientData: some class has fewer than 2 examples.
    """
    labels = np.array([g.label for g in dataset])
    for cls in range(N_CLASSES):
        if int((labels == cls).sum()) < 2:
            raise InsufficientData(f"class {cls} has fewer than 2 examples")

    if model is None:
        model = FontModel.create(seed=cfg.seed, dtype=dtype)
    model.train_config = cfg
    x, y = _to_batches(dataset, dtype)
    tr, va = stratified_split(y, cfg.seed)
    xt, yt, xv, yv = x[tr], y[tr], x[va], y[va]

    opt = nn.SGDMomentum(model.all_layers, lr=cfg.lr, momentum=cfg.momentum)
    rng = np.random.default_rng(cfg.seed + 1)
    history: list[EpochStats] = []
    best_acc = -1.0
    best_params = None

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(xt))
        mse_sum = ce_sum = 0.0
        for s in range(0, len(xt), cfg.batch_size):
            idx = order[s : s + cfg.batch_size]
            xb, yb = xt[idx], yt[idx]
            nn.zero_grads(model.all_layers)
            latent, recon = cae_forward(xb, model, train=True)
            logits = classifier_forward(latent, model, train=True)
            mse, dmse = nn.mse_loss(recon, xb)
            ce, dce = nn.cross_entropy_loss(logits, yb)
            dlatent = nn.run_backward(model.decoder, dmse.astype(dtype))
            dlatent = dlatent + nn.run_backward(
                model.classifier, (cfg.ce_weight * dce).astype(dtype)
            )
            nn.run_backward(model.encoder, dlatent)
            opt.step()
            mse_sum += mse * len(xb)
            ce_sum += ce * len(xb)
        _, _, val_acc = evaluate(model, xv, yv)
        history.append(
            EpochStats(
                epoch=epoch,
                mse_loss=mse_sum / len(xt),
                ce_loss=ce_sum / len(xt),
                val_accuracy=val_acc,
            )
        )
        if val_acc > best_acc:
            best_acc = val_acc
            best_params = {
                name: p.copy() for name, p in model.named_params().items()
            }

    if best_params is not None:
        for name, p in model.named_params().items():
            p[...] = best_params[name]
    model.trained = True
    return model, history


def classify_font(crop: GrayImage, model: FontModel) -> tuple[int, str, float]:
    """Classify a slide text crop; returns (label, font name, confidence).

    Raises:
        ModelUntrained: model was never trained or loaded.
        EmptyGlyph: crop has less than 1% ink after binarization.
    """
    if not model.trained:
        raise ModelUntrained("train or load a font model first")
    crop = np.asarray(crop, dtype=np.uint8)
    ink = binarize_otsu(crop, "ink-darker")
    if np.count_nonzero(ink) < MIN_INK_FRACTION * ink.size:
        raise EmptyGlyph("no text detected in crop")
    h, w = model.input_hw
    resized = resize_bilinear(crop, w, h).astype(np.float64) / 255.0
    x = resized[None, None, :, :].astype(np.float32)
    latent, _ = cae_forward(x, model, train=False)
    logits = classifier_forward(latent, model, train=False)
    probs = nn.softmax(logits)[0]
    label = int(probs.argmax())
    return label, FONT_NAMES[label], float(probs[label])


_SGFM_MAGIC = b"SGFM"
_SGFM_VERSION = 1
# Architecture hyperparameters ride along as pseudo-entries in the table.
_META = "meta.arch"


def save_model(path, model: FontModel) -> None:
    """Model file: magic, version u16, entry count u32, then per entry
    name (u16 length + utf8), ndim u8, dims u32 each, f32 data;
    little-endian."""
    entries = dict(model.named_params())
    entries[_META] = np.array(
        [
            model.input_hw[0],
            model.input_hw[1],
            model.enc_channels[0],
            model.enc_channels[1],
            model.hidden,
            model.k1,
        ],
        dtype=np.float32,
    )
    with open(path, "wb") as f:
        f.write(_SGFM_MAGIC)
        f.write(struct.pack("<HI", _SGFM_VERSION, len(entries)))
        for name in sorted(entries):
            arr = np.ascontiguousarray(entries[name], dtype=np.float32)
            nb = name.encode()
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            f.write(struct.pack("<B", arr.ndim))
            for d in arr.shape:
                f.write(struct.pack("<I", d))
            f.write(arr.tobytes())


def load_model(path) -> FontModel:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != _SGFM_MAGIC:
        raise VersionMismatch(f"{path}: bad magic")
    version, count = struct.unpack_from("<HI", data, 4)
    if version != _SGFM_VERSION:
        raise VersionMismatch(f"{path}: version {version}")
    off = 10
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", data, off)
        off += 2
        name = data[off : off + nlen].decode()
        off += nlen
        (ndim,) = struct.unpack_from("<B", data, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}I", data, off)
        off += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        entries[name] = np.frombuffer(
            data, np.float32, size, off
        ).reshape(shape).copy()
        off += 4 * size
    if _META not in entries:
        raise VersionMismatch(f"{path}: missing architecture entry")
    h, w, c1, c2, hidden, k1 = (int(v) for v in entries.pop(_META))
    model = FontModel.create(
        input_hw=(h, w), enc_channels=(c1, c2), hidden=hidden, k1=k1
    )
    params = model.named_params()
    for name, arr in entries.items():
        if name not in params:
            raise VersionMismatch(f"{path}: unexpected entry {name}")
        if params[name].shape != arr.shape:
            raise VersionMismatch(f"{path}: shape mismatch for {name}")
        params[name][...] = arr
    model.trained = True
    return model


def history_csv(history: list[EpochStats]) -> str:
    """Training log as CSV: epoch, mse, ce, val_accuracy."""
    lines = ["epoch,mse,ce,val_accuracy"]
    for h in history:
        lines.append(
            f"{h.epoch},{h.mse_loss:.8f},{h.ce_loss:.8f},{h.val_accuracy:.6f}"
        )
    return "\n".join(lines) + "\n"
