"""Multimodal fusion: FiLM modulation, a patch transformer with a learnable
CLS token, and bidirectional cross-attention, reduced to one conditioning
vector per case.

The full route is:
  patch embeddings --FiLM(text CLS)--> modulated patches
  [CLS | modulated patches] --transformer--> updated patch sequence
  text CLS attends over the updated patch sequence   (text-to-image)
  updated patch CLS attends over the text tokens     (image-to-text)
  conditioning vector = sum of the two attention outputs

Ablation variants reuse the same components with parts removed. Patches are
treated as an unordered set: no positional encodings anywhere, so the output
is invariant to patch-row permutation.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .errors import DimensionMismatch, HeadsDontDivide, UnknownVariant

FUSION_VARIANTS = (
    "full",
    "mean_image",
    "text_cls_only",
    "patch_transformer_only",
    "film_only",
    "cross_attention_only",
)


class MultiHeadAttention(nn.Module):
    """Scaled dot-product attention with per-head projections.

    key_padding_mask marks padded key rows (True = ignore), so variable-length
    text batches attend only over real tokens.
    """

    def __init__(self, d: int, heads: int, dropout: float = 0.0):
        super().__init__()
        if d % heads != 0:
            raise HeadsDontDivide(f"d={d} not divisible by heads={heads}")
        self.d = d
        self.heads = heads
        self.head_dim = d // heads
        self.wq = nn.Linear(d, d)
        self.wk = nn.Linear(d, d)
        self.wv = nn.Linear(d, d)
        self.wo = nn.Linear(d, d)
        self.attn_dropout = nn.Dropout(dropout)

    def forward(
        self,
        query: torch.Tensor,
        key: torch.Tensor,
        value: torch.Tensor,
        key_padding_mask: torch.Tensor | None = None,
        need_weights: bool = False,
    ):
        if query.dim() != 3 or key.dim() != 3 or value.dim() != 3:
            raise DimensionMismatch("attention inputs must be (batch, rows, d)")
        if query.shape[-1] != self.d or key.shape[-1] != self.d:
            raise DimensionMismatch(
                f"attention built for d={self.d}, got query {tuple(query.shape)}, "
                f"key {tuple(key.shape)}"
            )
        if key.shape[1] != value.shape[1]:
            raise DimensionMismatch("key and value row counts differ")
        b, nq, _ = query.shape
        nk = key.shape[1]

        q = self.wq(query).view(b, nq, self.heads, self.head_dim).transpose(1, 2)
        k = self.wk(key).view(b, nk, self.heads, self.head_dim).transpose(1, 2)
        v = self.wv(value).view(b, nk, self.heads, self.head_dim).transpose(1, 2)

        logits = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        if key_padding_mask is not None:
            logits = logits.masked_fill(
                key_padding_mask[:, None, None, :], float("-inf")
            )
        weights = torch.softmax(logits, dim=-1)
        dropped = self.attn_dropout(weights)
        out = (dropped @ v).transpose(1, 2).reshape(b, nq, self.d)
        out = self.wo(out)
        if need_weights:
            return out, weights
        return out


def identity_attention(module: MultiHeadAttention) -> MultiHeadAttention:
    """Set all four projections to the identity (useful for closed-form checks)."""
    with torch.no_grad():
        for lin in (module.wq, module.wk, module.wv, module.wo):
            lin.weight.copy_(torch.eye(module.d))
            lin.bias.zero_()
    return module


def multi_head_attention(
    q: torch.Tensor,
    k: torch.Tensor,
    v: torch.Tensor,
    heads: int,
    module: MultiHeadAttention | None = None,
) -> torch.Tensor:
    """Single-case attention on 2D inputs (q x d, k x d, k x d) -> q x d.

    Without a module, projections default to the identity and the result is
    pure scaled dot-product attention.
    """
    if q.dim() != 2 or k.dim() != 2 or v.dim() != 2:
        raise DimensionMismatch("expected 2D matrices")
    if module is None:
        module = identity_attention(MultiHeadAttention(q.shape[-1], heads))
    module.eval()
    with torch.no_grad():
        out = module(q[None], k[None], v[None])
    return out[0]


class FiLMHead(nn.Module):
    """Predicts per-feature scale and shift from a conditioning vector.

    The scale is parameterized as 1 + residual with zero-initialized weights,
    so a fresh head is an exact identity map.
    """

    def __init__(self, d: int):
        super().__init__()
        self.gamma_map = nn.Linear(d, d)
        self.beta_map = nn.Linear(d, d)
        with torch.no_grad():
            self.gamma_map.weight.zero_()
            self.gamma_map.bias.zero_()
            self.beta_map.weight.zero_()
            self.beta_map.bias.zero_()

    def forward(self, cond: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        gamma = 1.0 + self.gamma_map(cond)
        beta = self.beta_map(cond)
        return gamma, beta


def film_modulate(
    e_img: torch.Tensor, cls_text: torch.Tensor, head: FiLMHead
) -> torch.Tensor:
    """Feature-wise affine transform of every patch row, coefficients shared
    across rows: out[i, c] = gamma(cls)[c] * e_img[i, c] + beta(cls)[c]."""
    squeeze = e_img.dim() == 2
    if squeeze:
        e_img = e_img[None]
        cls_text = cls_text[None]
    if e_img.dim() != 3 or cls_text.dim() != 2:
        raise DimensionMismatch("expected (batch, N, d) patches and (batch, d) cls")
    if e_img.shape[-1] != cls_text.shape[-1]:
        raise DimensionMismatch(
            f"feature dims differ: patches {e_img.shape[-1]}, cls {cls_text.shape[-1]}"
        )
    gamma, beta = head(cls_text)
    out = gamma[:, None, :] * e_img + beta[:, None, :]
    return out[0] if squeeze else out


class TransformerBlock(nn.Module):
    """Pre-normalization block: attention and feed-forward with residuals."""

    def __init__(self, d: int, heads: int, ff_mult: int = 4, dropout: float = 0.1):
        super().__init__()
        self.norm1 = nn.LayerNorm(d)
        self.attn = MultiHeadAttention(d, heads, dropout=dropout)
        self.norm2 = nn.LayerNorm(d)
        self.ff = nn.Sequential(
            nn.Linear(d, ff_mult * d),
            nn.GELU(),
            nn.Dropout(dropout),
            nn.Linear(ff_mult * d, d),
        )
        self.drop = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.norm1(x)
        x = x + self.drop(self.attn(h, h, h))
        h = self.norm2(x)
        x = x + self.drop(self.ff(h))
        return x


class PatchTransformer(nn.Module):
    """Self-attention over [learnable CLS | patch rows]; no positions.

    Output row 0 is the updated CLS summarizing the patch set.
    """

    def __init__(
        self,
        d: int,
        heads: int = 4,
        depth: int = 2,
        ff_mult: int = 4,
        dropout: float = 0.1,
    ):
        super().__init__()
        self.cls_token = nn.Parameter(torch.randn(d) * 0.02)
        self.blocks = nn.ModuleList(
            TransformerBlock(d, heads, ff_mult, dropout) for _ in range(depth)
        )
        self.final_norm = nn.LayerNorm(d)

    def forward(
        self, e_img: torch.Tensor, cls_override: torch.Tensor | None = None
    ) -> torch.Tensor:
        if e_img.dim() != 3:
            raise DimensionMismatch("expected (batch, N, d) patch embeddings")
        b = e_img.shape[0]
        cls = self.cls_token if cls_override is None else cls_override
        x = torch.cat([cls.expand(b, 1, -1), e_img], dim=1)
        for block in self.blocks:
            x = block(x)
        return self.final_norm(x)


def patch_transformer_forward(
    transformer: PatchTransformer,
    e_img: torch.Tensor,
    cls: torch.Tensor | None = None,
) -> torch.Tensor:
    """Single-case wrapper: N x d in, (N+1) x d out, row 0 = updated CLS."""
    if e_img.dim() != 2:
        raise DimensionMismatch("expected an N x d matrix")
    if e_img.shape[0] < 1:
        raise DimensionMismatch("need at least one patch row")
    return transformer(e_img[None], cls_override=cls)[0]


class MultimodalFusion(nn.Module):
    """Conditioning-vector network with selectable ablation variant.

    forward() consumes projected embeddings:
      e_img:     (batch, N, d) patch embeddings
      e_text:    (batch, M, d) token embeddings, row 0 = text CLS
      text_mask: optional (batch, M) bool, True marks padded token rows
    and returns a (batch, d) conditioning vector.
    """

    def __init__(
        self,
        d: int,
        variant: str = "full",
        heads: int = 4,
        depth: int = 2,
        ff_mult: int = 4,
        dropout: float = 0.1,
    ):
        super().__init__()
        if variant not in FUSION_VARIANTS:
            raise UnknownVariant(
                f"variant {variant!r} not in {', '.join(FUSION_VARIANTS)}"
            )
        self.d = d
        self.variant = variant

        uses_film = variant in ("full", "film_only")
        uses_transformer = variant in (
            "full",
            "patch_transformer_only",
            "film_only",
            "cross_attention_only",
        )
        uses_cross = variant in ("full", "cross_attention_only")

        self.film = FiLMHead(d) if uses_film else None
        self.transformer = (
            PatchTransformer(d, heads=heads, depth=depth, ff_mult=ff_mult, dropout=dropout)
            if uses_transformer
            else None
        )
        self.t2i = MultiHeadAttention(d, heads, dropout=dropout) if uses_cross else None
        self.i2t = MultiHeadAttention(d, heads, dropout=dropout) if uses_cross else None
        # mean_image / text_cls_only reduce to a single vector passed through
        # a trainable map, so those variants still have learnable capacity
        self.vector_map = (
            nn.Linear(d, d) if variant in ("mean_image", "text_cls_only") else None
        )

    def forward(
        self,
        e_img: torch.Tensor,
        e_text: torch.Tensor,
        text_mask: torch.Tensor | None = None,
    ) -> torch.Tensor:
        if e_img.dim() != 3 or e_text.dim() != 3:
            raise DimensionMismatch("expected (batch, rows, d) inputs")
        if e_img.shape[-1] != self.d or e_text.shape[-1] != self.d:
            raise DimensionMismatch(
                f"fusion built for d={self.d}, got image {e_img.shape[-1]}, "
                f"text {e_text.shape[-1]}"
            )
        cls_text = e_text[:, 0]

        if self.variant == "mean_image":
            return self.vector_map(e_img.mean(dim=1))
        if self.variant == "text_cls_only":
            return self.vector_map(cls_text)
        if self.variant == "patch_transformer_only":
            return self.transformer(e_img)[:, 0]
        if self.variant == "film_only":
            modulated = film_modulate(e_img, cls_text, self.film)
            return self.transformer(modulated)[:, 0]

        # full and cross_attention_only
        patches = (
            film_modulate(e_img, cls_text, self.film) if self.variant == "full" else e_img
        )
        updated = self.transformer(patches)  # (batch, N+1, d)
        cls_img = updated[:, 0]
        e_from_img = self.t2i(cls_text[:, None, :], updated, updated)[:, 0]
        e_from_text = self.i2t(
            cls_img[:, None, :], e_text, e_text, key_padding_mask=text_mask
        )[:, 0]
        return e_from_text + e_from_img


def fuse(
    e_img: torch.Tensor,
    e_text: torch.Tensor,
    variant: str,
    params: MultimodalFusion,
) -> torch.Tensor:
    """Single-case fusion: N x d and M x d in, d-vector out."""
    if variant not in FUSION_VARIANTS:
        raise UnknownVariant(f"variant {variant!r} not in {', '.join(FUSION_VARIANTS)}")
    if params.variant != variant:
        raise UnknownVariant(
            f"fusion network was built for variant {params.variant!r}, not {variant!r}"
        )
    if e_img.dim() != 2 or e_text.dim() != 2:
        raise DimensionMismatch("expected 2D matrices")
    out = params(e_img[None], e_text[None])
    return out[0]
