"""Desk-scale neural backend: a small byte-level causal transformer.

This backend really fine-tunes: gradients, loss curve, and a weight-delta
artifact (trained minus base, applied additively at serve time). Bases are
named "tiny:<seed>"; the seed fixes the initial weights, so any process can
rebuild the identical base from the name alone.

Hyperprofile learning rates target billion-parameter models, far too small
to move a megabyte-scale net, so the backend applies a configured lr_scale
and a minimum step count; the profile itself is recorded unchanged in the
job, and relative profile ordering (OT faster than big SFT) is preserved.
"""

from __future__ import annotations

import json
import math
import random
import re
import struct

import torch
from torch import nn

from ..datagen.types import TrainingSet
from ..errors import BackendFailure
from .artifacts import AdapterArtifact, LossCurve
from .profiles import HyperProfile

PAD, BOS, SEP, EOS = 256, 257, 258, 259
VOCAB = 260
MAX_LEN = 256

D_MODEL = 128
N_HEADS = 4
N_LAYERS = 2

_BASE_RE = re.compile(r"^tiny:(\d+)$")


def encode_prompt(instruction: str, input_text: str = "") -> list[int]:
    body = instruction.encode("utf-8")
    if input_text:
        body += b"\n" + input_text.encode("utf-8")
    return [BOS] + list(body) + [SEP]


def encode_pair(instruction: str, input_text: str, output: str) -> tuple[list[int], int]:
    """Token ids for a full training sequence and the prompt span length."""
    prompt = encode_prompt(instruction, input_text)
    ids = prompt + list(output.encode("utf-8")) + [EOS]
    return ids[:MAX_LEN], min(len(prompt), MAX_LEN)


def decode_bytes(ids: list[int]) -> str:
    return bytes(i for i in ids if i < 256).decode("utf-8", errors="replace")


class _Block(nn.Module):
    def __init__(self, d: int, heads: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(d)
        self.attn = nn.MultiheadAttention(d, heads, batch_first=True)
        self.ln2 = nn.LayerNorm(d)
        self.mlp = nn.Sequential(
            nn.Linear(d, 4 * d), nn.GELU(), nn.Linear(4 * d, d)
        )

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        h = self.ln1(x)
        attn, _ = self.attn(h, h, h, attn_mask=mask, need_weights=False)
        x = x + attn
        return x + self.mlp(self.ln2(x))


class TinyGPT(nn.Module):
    def __init__(self):
        super().__init__()
        self.emb = nn.Embedding(VOCAB, D_MODEL)
        self.pos = nn.Embedding(MAX_LEN, D_MODEL)
        self.blocks = nn.ModuleList(_Block(D_MODEL, N_HEADS) for _ in range(N_LAYERS))
        self.ln = nn.LayerNorm(D_MODEL)
        self.head = nn.Linear(D_MODEL, VOCAB)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        seq = ids.shape[1]
        mask = torch.triu(
            torch.full((seq, seq), float("-inf"), device=ids.device), diagonal=1
        )
        x = self.emb(ids) + self.pos(torch.arange(seq, device=ids.device))[None]
        for block in self.blocks:
            x = block(x, mask)
        return self.head(self.ln(x))


def parse_base_ref(base_version: str) -> int:
    match = _BASE_RE.match(base_version)
    if not match:
        raise BackendFailure(
            f"tiny backend serves bases named 'tiny:<seed>', got {base_version!r}"
        )
    return int(match.group(1))


def build_base(base_version: str) -> TinyGPT:
    """Rebuild the deterministic base model named by its seed."""
    seed = parse_base_ref(base_version)
    torch.manual_seed(seed)
    model = TinyGPT()
    model.eval()
    return model


# -- delta payload codec ------------------------------------------------------

def encode_delta(base_version: str, delta: dict[str, torch.Tensor]) -> bytes:
    names = sorted(delta)
    header = json.dumps(
        {
            "format": "tiny-delta/1",
            "base_version": base_version,
            "params": [{"name": n, "shape": list(delta[n].shape)} for n in names],
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    buffers = b"".join(
        delta[n].detach().to(torch.float32).contiguous().numpy().tobytes()
        for n in names
    )
    return header + b"\x00" + buffers


def decode_delta(payload: bytes) -> tuple[str, dict[str, torch.Tensor]]:
    split = payload.index(b"\x00")
    header = json.loads(payload[:split].decode("utf-8"))
    if header.get("format") != "tiny-delta/1":
        raise BackendFailure("artifact payload is not a tiny-model delta")
    raw = payload[split + 1:]
    delta = {}
    offset = 0
    for entry in header["params"]:
        shape = entry["shape"]
        count = int(math.prod(shape)) if shape else 1
        nbytes = count * struct.calcsize("f")
        values = struct.unpack_from(f"<{count}f", raw, offset)
        offset += nbytes
        delta[entry["name"]] = torch.tensor(values, dtype=torch.float32).reshape(shape)
    return header["base_version"], delta


def apply_deltas(base_version: str, payloads: list[bytes]) -> TinyGPT:
    """Base weights plus each delta in order, as a ready-to-serve model."""
    model = build_base(base_version)
    state = {k: v.clone() for k, v in model.state_dict().items()}
    for payload in payloads:
        delta_base, delta = decode_delta(payload)
        if delta_base != base_version:
            raise BackendFailure(
                f"delta built for {delta_base!r} cannot apply to {base_version!r}"
            )
        for name, tensor in delta.items():
            state[name] = state[name] + tensor
    model.load_state_dict(state)
    model.eval()
    return model


# -- training and decoding ----------------------------------------------------

def _make_batch(
    dataset: list[tuple[list[int], int]], idxs: list[int]
) -> tuple[torch.Tensor, torch.Tensor]:
    rows = [dataset[i] for i in idxs]
    width = max(len(ids) for ids, _ in rows)
    ids = torch.full((len(rows), width), PAD, dtype=torch.long)
    labels = torch.full((len(rows), width), -100, dtype=torch.long)
    for r, (seq, prompt_len) in enumerate(rows):
        ids[r, : len(seq)] = torch.tensor(seq, dtype=torch.long)
        # predict token t+1 from position t, only over the answer span
        labels[r, prompt_len - 1 : len(seq) - 1] = torch.tensor(
            seq[prompt_len:], dtype=torch.long
        )
    return ids, labels


def greedy_decode(
    model: TinyGPT, instruction: str, input_text: str = "", max_new_tokens: int = 64
) -> str:
    ids = encode_prompt(instruction, input_text)[:MAX_LEN]
    out: list[int] = []
    with torch.no_grad():
        for _ in range(max_new_tokens):
            if len(ids) >= MAX_LEN:
                break
            logits = model(torch.tensor([ids], dtype=torch.long))
            nxt = int(logits[0, -1].argmax())
            if nxt == EOS:
                break
            ids.append(nxt)
            out.append(nxt)
    return decode_bytes(out)


class TinyBackend:
    """Gradient-descent fine-tuning of the bundled small transformer."""

    name = "tiny"

    def __init__(
        self,
        lr_scale: float = 100.0,
        min_steps: int = 600,
        curve_every: int = 25,
    ):
        self.lr_scale = lr_scale
        self.min_steps = min_steps
        self.curve_every = curve_every

    def train(
        self,
        base_version: str,
        dataset: TrainingSet,
        profile: HyperProfile,
        seed: int,
    ) -> AdapterArtifact:
        if not len(dataset):
            raise BackendFailure("refusing to train on an empty dataset")
        for ex in dataset:
            if not ex.instruction or not ex.output:
                raise BackendFailure("dataset contains an example with empty text")

        encoded = [encode_pair(ex.instruction, ex.input, ex.output) for ex in dataset]
        base = build_base(base_version)
        torch.manual_seed(seed)
        model = TinyGPT()
        model.load_state_dict(base.state_dict())
        model.train()

        steps = max(
            self.min_steps,
            profile.epochs * math.ceil(len(encoded) / profile.batch_size),
        )
        optimizer = torch.optim.Adam(
            model.parameters(), lr=profile.learning_rate * self.lr_scale
        )
        loss_fn = nn.CrossEntropyLoss(ignore_index=-100)
        rng = random.Random(seed)
        curve: LossCurve = []
        n = len(encoded)
        for step in range(steps):
            idxs = [rng.randrange(n) for _ in range(min(profile.batch_size, n))]
            ids, labels = _make_batch(encoded, idxs)
            logits = model(ids)
            loss = loss_fn(logits.reshape(-1, VOCAB), labels.reshape(-1))
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            value = float(loss.detach())
            if not math.isfinite(value):
                raise BackendFailure(f"training diverged at step {step}: loss={value}")
            if step % self.curve_every == 0 or step == steps - 1:
                curve.append((step, value))

        model.eval()
        base_state = base.state_dict()
        delta = {
            name: (tensor - base_state[name]).to(torch.float32)
            for name, tensor in model.state_dict().items()
        }
        payload = encode_delta(base_version, delta)
        return AdapterArtifact.from_payload(
            payload, base_version=base_version, train_loss_curve=curve
        )
