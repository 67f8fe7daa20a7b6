"""Backbone loading and image preprocessing.

The default backbone is the self-supervised ViT-S/16 published under the
name ``dino_vits16`` on torch hub; it produces 384-dimensional features.
Because hub loading needs network access (or a primed cache), an offline
substitute with the identical architecture and I/O contract is available as
``untrained-vits16``: seeded random weights, deterministic outputs, intended
for smoke tests and pipeline plumbing, not for recognition quality.
"""

from __future__ import annotations

import numpy as np
import torch
from PIL import Image
from torchvision.models import VisionTransformer

FEATURE_DIM = 384
INPUT_SIDE = 224
RESIZE_SIDE = 256
NORMALIZE_MEAN = (0.485, 0.456, 0.406)
NORMALIZE_STD = (0.229, 0.224, 0.225)

DEFAULT_MODEL = "dino_vits16"
OFFLINE_MODEL = "untrained-vits16"


class ModelLoadError(RuntimeError):
    pass


def _vit_s16() -> VisionTransformer:
    model = VisionTransformer(
        image_size=INPUT_SIDE,
        patch_size=16,
        num_layers=12,
        num_heads=6,
        hidden_dim=FEATURE_DIM,
        mlp_dim=1536,
    )
    model.heads = torch.nn.Identity()
    return model


def load_backbone(model_id: str = DEFAULT_MODEL, weights: str | None = None,
                  seed: int = 0) -> torch.nn.Module:
    """Build the requested backbone in eval mode on the CPU."""
    if model_id == DEFAULT_MODEL:
        if weights is not None:
            model = _vit_s16()
            try:
                state = torch.load(weights, map_location="cpu")
                model.load_state_dict(state)
            except Exception as exc:
                raise ModelLoadError(
                    f"could not load weights from {weights}: {exc}"
                ) from exc
        else:
            try:
                model = torch.hub.load("facebookresearch/dino:main", model_id)
            except Exception as exc:
                raise ModelLoadError(
                    f"could not fetch {model_id} from torch hub (network or "
                    f"cache needed): {exc}"
                ) from exc
    elif model_id == OFFLINE_MODEL:
        torch.manual_seed(seed)
        model = _vit_s16()
    else:
        raise ModelLoadError(f"unknown model identifier {model_id!r}")
    model.eval()
    return model


def preprocess(image: Image.Image) -> np.ndarray:
    """Resize the shorter side, center-crop, rescale, normalize; CHW float32."""
    image = image.convert("RGB")
    width, height = image.size
    scale = RESIZE_SIDE / min(width, height)
    resized = image.resize(
        (max(1, round(width * scale)), max(1, round(height * scale))),
        Image.Resampling.BICUBIC,
    )
    width, height = resized.size
    left = (width - INPUT_SIDE) // 2
    top = (height - INPUT_SIDE) // 2
    cropped = resized.crop((left, top, left + INPUT_SIDE, top + INPUT_SIDE))
    array = np.asarray(cropped, dtype=np.float32) / 255.0
    array = (array - np.array(NORMALIZE_MEAN, dtype=np.float32)) / np.array(
        NORMALIZE_STD, dtype=np.float32
    )
    return array.transpose(2, 0, 1)


def preprocess_description() -> dict:
    return {
        "resize_shorter_side": RESIZE_SIDE,
        "center_crop": INPUT_SIDE,
        "rescale": "1/255",
        "normalize_mean": list(NORMALIZE_MEAN),
        "normalize_std": list(NORMALIZE_STD),
        "interpolation": "bicubic",
    }


@torch.no_grad()
def embed_batch(model: torch.nn.Module, batch: np.ndarray) -> np.ndarray:
    """Run a (B, 3, 224, 224) float32 batch; returns (B, 384) float32."""
    output = model(torch.from_numpy(batch))
    return output.cpu().numpy().astype(np.float32)
